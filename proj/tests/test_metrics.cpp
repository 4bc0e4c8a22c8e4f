#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sepsis/errors.hpp"
#include "sepsis/metrics.hpp"
#include "sepsis/rng.hpp"
#include "sepsis/stats_math.hpp"

using namespace sepsis;

TEST_CASE("confusion metrics match their definitions") {
    // tp=3 fp=1 fn=1 tn=5
    std::vector<uint8_t> preds = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    std::vector<uint8_t> labels = {1, 1, 1, 0, 1, 0, 0, 0, 0, 0};
    auto c = confusion_counts(preds, labels);
    CHECK(c.tp == 3);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 5);
    CHECK(c.n() == 10);
    auto m = derive_metrics(c);
    CHECK(m.tpr == doctest::Approx(0.75));
    CHECK(m.fpr == doctest::Approx(1.0 / 6.0));
    CHECK(m.precision == doctest::Approx(0.75));
    CHECK(m.f1 == doctest::Approx(0.75));
    CHECK(m.accuracy == doctest::Approx(0.8));

    auto perfect = derive_metrics(confusion_counts({1, 0, 1, 0}, {1, 0, 1, 0}));
    CHECK(perfect.tpr == 1.0);
    CHECK(perfect.fpr == 0.0);
    CHECK(perfect.accuracy == 1.0);

    // No predicted positives: precision and F1 fall back to zero.
    auto none = derive_metrics(confusion_counts({0, 0, 0}, {1, 0, 1}));
    CHECK(none.precision == 0.0);
    CHECK(none.f1 == 0.0);

    CHECK_THROWS_AS(confusion_counts({1}, {1, 0}), DataError);
}

TEST_CASE("auc basics and the tie convention") {
    CHECK(auc({0.9, 0.1}, {1, 0}) == 1.0);
    CHECK(auc({0.8, 0.8}, {1, 0}) == 0.5);
    CHECK(auc({0.1, 0.9}, {1, 0}) == 0.0);
    CHECK_THROWS_AS(auc({0.5, 0.6}, {1, 1}), DataError);
}

TEST_CASE("auc equals brute-force pair counting to 1e-12") {
    Rng rng(101, 0);
    for (int trial = 0; trial < 40; ++trial) {
        size_t n = 10 + rng.uniform_index(50);
        std::vector<double> scores(n);
        std::vector<uint8_t> labels(n);
        bool pos = false, neg = false;
        for (size_t i = 0; i < n; ++i) {
            // quantized scores force ties
            scores[i] = std::round(rng.uniform() * 8) / 8.0;
            labels[i] = rng.bernoulli(0.4) ? 1 : 0;
            (labels[i] ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        CHECK(std::fabs(auc(scores, labels) - oracle::pairwise_auc(scores, labels)) < 1e-12);
    }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    Rng rng(103, 0);
    size_t n = 200;
    std::vector<double> scores(n);
    std::vector<uint8_t> labels(n);
    for (size_t i = 0; i < n; ++i) {
        scores[i] = rng.uniform(-3, 3);
        labels[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    double base = auc(scores, labels);
    std::vector<double> cubed(n), squashed(n);
    for (size_t i = 0; i < n; ++i) {
        cubed[i] = scores[i] * scores[i] * scores[i];
        squashed[i] = sigmoid(scores[i]);
    }
    CHECK(auc(cubed, labels) == base);
    CHECK(auc(squashed, labels) == base);
}

TEST_CASE("boolean-protocol AUC identity") {
    Rng rng(107, 0);
    for (int trial = 0; trial < 50; ++trial) {
        size_t n = 20 + rng.uniform_index(200);
        std::vector<uint8_t> preds(n), labels(n);
        bool pos = false, neg = false;
        for (size_t i = 0; i < n; ++i) {
            preds[i] = rng.bernoulli(0.3) ? 1 : 0;
            labels[i] = rng.bernoulli(0.4) ? 1 : 0;
            (labels[i] ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        std::vector<double> scores(preds.begin(), preds.end());
        auto c = confusion_counts(preds, labels);
        double P = static_cast<double>(c.tp + c.fn), N = static_cast<double>(c.fp + c.tn);
        double identity = (static_cast<double>(c.tp) * N + static_cast<double>(c.tn) * P) /
                          (2.0 * P * N);
        CHECK(auc(scores, labels) == identity);  // exact, single-division form
        auto m = derive_metrics(c);
        CHECK(std::fabs(auc(scores, labels) - (m.tpr + 1.0 - m.fpr) / 2.0) < 1e-15);
    }
}

TEST_CASE("bootstrap_ci: degenerate statistic, containment, determinism") {
    Rng rng(109, 0);
    std::vector<double> data(300);
    for (auto& v : data) v = rng.uniform();

    auto constant = [](const std::vector<size_t>&) { return std::optional<double>(0.625); };
    auto ci = bootstrap_ci(constant, data.size(), 500, 0.95, 1);
    CHECK(ci.lo == 0.625);
    CHECK(ci.hi == 0.625);

    auto mean = [&](const std::vector<size_t>& idx) {
        double s = 0;
        for (auto i : idx) s += data[i];
        return std::optional<double>(s / static_cast<double>(idx.size()));
    };
    double point = mean([&] {
        std::vector<size_t> all(data.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }()).value();
    auto ci1 = bootstrap_ci(mean, data.size(), 2000, 0.95, 7);
    CHECK(ci1.lo <= point);
    CHECK(point <= ci1.hi);
    auto ci2 = bootstrap_ci(mean, data.size(), 2000, 0.95, 7);
    CHECK(ci1.lo == ci2.lo);  // same seed, same interval
    CHECK(ci1.hi == ci2.hi);
    auto ci3 = bootstrap_ci(mean, data.size(), 2000, 0.95, 8);
    CHECK((ci1.lo != ci3.lo || ci1.hi != ci3.hi));
    auto ci_par = bootstrap_ci(mean, data.size(), 2000, 0.95, 7, 4);
    CHECK(ci_par.lo == ci1.lo);  // threads never change the interval
    CHECK(ci_par.hi == ci1.hi);
}

TEST_CASE("bootstrap intervals widen on average as n shrinks") {
    auto width_at = [&](size_t n, uint64_t seed) {
        Rng rng(seed, 0);
        std::vector<double> data(n);
        for (auto& v : data) v = rng.uniform();
        auto mean = [&](const std::vector<size_t>& idx) {
            double s = 0;
            for (auto i : idx) s += data[i];
            return std::optional<double>(s / static_cast<double>(idx.size()));
        };
        auto ci = bootstrap_ci(mean, n, 400, 0.95, seed);
        return ci.hi - ci.lo;
    };
    double small = 0, large = 0;
    for (uint64_t s = 0; s < 20; ++s) {
        small += width_at(50, s);
        large += width_at(500, s);
    }
    CHECK(small > large);
}

TEST_CASE("bootstrap redraws degenerate resamples and errors after 100 attempts") {
    // One positive in two records: ~every resample needs both classes.
    std::vector<uint8_t> labels = {1, 0};
    auto stat = [&](const std::vector<size_t>& idx) -> std::optional<double> {
        bool pos = false, neg = false;
        for (auto i : idx) (labels[i] ? pos : neg) = true;
        if (!pos || !neg) return std::nullopt;
        return 1.0;
    };
    auto ci = bootstrap_ci(stat, 2, 200, 0.95, 3);
    CHECK(ci.lo == 1.0);

    auto never = [](const std::vector<size_t>&) -> std::optional<double> { return std::nullopt; };
    CHECK_THROWS_AS(bootstrap_ci(never, 10, 50, 0.95, 3), DataError);
}

TEST_CASE("pearson: exact correlations and error paths") {
    auto exact = pearson({1, 2, 3}, {2, 4, 6});
    CHECK(exact.r == doctest::Approx(1.0));
    CHECK(exact.p == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(pearson({1, 2, 3}, {6, 4, 2}).r == doctest::Approx(-1.0));
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2}), DataError);
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), DataError);
}

TEST_CASE("pearson p agrees with the permutation oracle") {
    Rng rng(113, 0);
    for (int trial = 0; trial < 3; ++trial) {
        size_t n = 8;
        std::vector<double> x(n), y(n);
        for (size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = 0.4 * x[i] + rng.normal();
        }
        auto res = pearson(x, y);
        double perm = oracle::permutation_pearson_p(x, y, 200000, 1234 + trial);
        CHECK(std::fabs(res.p - perm) < 0.01);
    }
}

TEST_CASE("tp_overlap set arithmetic") {
    //               r1 r2 r3 r4 x  y
    std::vector<uint8_t> labels = {1, 1, 1, 1, 1, 0};
    std::vector<uint8_t> a = {1, 1, 1, 1, 0, 1};
    std::vector<uint8_t> b = {1, 1, 1, 0, 1, 0};
    CHECK(tp_overlap(a, b, labels) == doctest::Approx(0.75));
    CHECK(tp_overlap(a, a, labels) == 1.0);
    std::vector<uint8_t> superset = {1, 1, 1, 1, 1, 0};
    CHECK(tp_overlap(a, superset, labels) == 1.0);
    std::vector<uint8_t> disjoint = {0, 0, 0, 0, 1, 0};
    CHECK(tp_overlap(a, disjoint, labels) == 0.0);
    std::vector<uint8_t> empty = {0, 0, 0, 0, 0, 0};
    CHECK_THROWS_AS(tp_overlap(empty, a, labels), DataError);
}

TEST_CASE("select_threshold policies") {
    std::vector<double> scores = {0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05};
    std::vector<uint8_t> labels = {1, 1, 0, 1, 0, 0, 1, 0, 0, 0};
    // target FPR 1/3: threshold 0.5 gives fp=2/6; 0.7 gives fp=1/6.
    double t = select_threshold(scores, labels, ThresholdPolicy::target_fpr, 2.0 / 6.0);
    CHECK(t == 0.5);
    // FPR 0 target: highest threshold with no false positives.
    t = select_threshold(scores, labels, ThresholdPolicy::target_fpr, 0.0);
    CHECK(t > 0.7);
    CHECK(select_threshold(scores, labels, ThresholdPolicy::fixed, 0.42) == 0.42);

    double tf1 = select_threshold(scores, labels, ThresholdPolicy::max_f1, 0.0);
    auto f1_at = [&](double thr) {
        std::vector<uint8_t> preds(scores.size());
        for (size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= thr;
        return derive_metrics(confusion_counts(preds, labels)).f1;
    };
    for (double candidate : scores) {
        CHECK(f1_at(tf1) >= f1_at(candidate) - 1e-12);
    }
}

TEST_CASE("evaluate_predictions produces point metrics with CIs containing them") {
    Rng rng(127, 0);
    size_t n = 800;
    std::vector<double> scores(n);
    std::vector<uint8_t> labels(n), preds(n);
    for (size_t i = 0; i < n; ++i) {
        labels[i] = rng.bernoulli(0.15) ? 1 : 0;
        scores[i] = std::clamp(0.3 * labels[i] + rng.uniform(0, 0.7), 0.0, 1.0);
        preds[i] = scores[i] >= 0.5;
    }
    EvalOptions opts;
    opts.bootstrap_b = 500;
    opts.seed = 11;
    auto report = evaluate_predictions("probe", scores, preds, labels, 0.5, opts);
    CHECK(report.n == static_cast<int64_t>(n));
    CHECK(report.threshold == 0.5);
    for (const auto* m : {&report.auc, &report.tpr, &report.fpr, &report.f1, &report.accuracy,
                          &report.precision}) {
        CHECK(m->ci_lo <= m->value);
        CHECK(m->value <= m->ci_hi);
        CHECK(m->value >= 0.0);
        CHECK(m->value <= 1.0);
    }
    auto j = report_to_json(report);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"system", "n", "n_positive", "threshold", "metrics"});
    std::vector<std::string> metric_keys;
    for (auto it = j["metrics"].begin(); it != j["metrics"].end(); ++it) {
        metric_keys.push_back(it.key());
    }
    CHECK(metric_keys ==
          std::vector<std::string>{"auc", "tpr", "fpr", "f1", "accuracy", "precision"});
}

TEST_CASE("subgroup evaluation restricts positives and drops other tiers") {
    Rng rng(131, 0);
    size_t n = 600;
    std::vector<double> scores(n);
    std::vector<uint8_t> preds(n);
    std::vector<SepsisTier> tiers(n, SepsisTier::none);
    for (size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        if (u < 0.04) tiers[i] = SepsisTier::sepsis;
        else if (u < 0.06) tiers[i] = SepsisTier::severe_sepsis;
        else if (u < 0.07) tiers[i] = SepsisTier::septic_shock;
        double strength = tiers[i] == SepsisTier::none ? 0.2 : 0.7;
        scores[i] = std::clamp(strength + rng.uniform(-0.2, 0.2), 0.0, 1.0);
        preds[i] = scores[i] >= 0.5;
    }
    EvalOptions opts;
    opts.bootstrap_b = 300;
    opts.seed = 5;

    auto keep = subgroup_indices(tiers, SepsisTier::severe_sepsis);
    for (size_t i : keep) {
        CHECK((tiers[i] == SepsisTier::none || tiers[i] == SepsisTier::severe_sepsis));
    }

    // Subgroup equal to all positives reproduces the overall report.
    std::vector<SepsisTier> single(n, SepsisTier::none);
    std::vector<uint8_t> labels(n, 0);
    for (size_t i = 0; i < n; ++i) {
        if (tiers[i] != SepsisTier::none) {
            single[i] = SepsisTier::sepsis;
            labels[i] = 1;
        }
    }
    auto overall = evaluate_predictions("probe", scores, preds, labels, std::nullopt, opts);
    auto sub = subgroup_evaluate("probe", scores, preds, single, SepsisTier::sepsis, std::nullopt,
                                 opts);
    CHECK(sub.auc.value == overall.auc.value);
    CHECK(sub.tpr.value == overall.tpr.value);
    CHECK(sub.n == overall.n);

    // A one-positive subgroup that was detected has TPR 1.
    std::vector<SepsisTier> one(n, SepsisTier::none);
    one[3] = SepsisTier::septic_shock;
    scores[3] = 0.99;
    preds[3] = 1;
    auto tiny = subgroup_evaluate("probe", scores, preds, one, SepsisTier::septic_shock,
                                  std::nullopt, opts);
    CHECK(tiny.tpr.value == 1.0);

    CHECK_THROWS_AS(subgroup_evaluate("probe", scores, preds, one, SepsisTier::severe_sepsis,
                                      std::nullopt, opts),
                    DataError);  // empty subgroup
}

TEST_CASE("drift series: planted linear ramp recovers a strong correlation") {
    // FPR = 0.03 + 0.25 * covid_fraction + noise(sd 0.005), 12 months.
    Rng rng(137, 0);
    std::vector<std::string> months;
    std::vector<uint8_t> covid, preds_model, preds_standard, labels;
    for (int m = 0; m < 12; ++m) {
        char key[8];
        std::snprintf(key, sizeof key, "2021-%02d", m + 1);
        double cf = 0.02 * m;
        double fpr = 0.03 + 0.25 * cf + rng.normal() * 0.005;
        for (int i = 0; i < 2000; ++i) {
            months.push_back(key);
            bool is_covid = rng.bernoulli(cf);
            covid.push_back(is_covid ? 1 : 0);
            labels.push_back(0);
            preds_model.push_back(rng.bernoulli(std::max(0.0, fpr)) ? 1 : 0);
            preds_standard.push_back(rng.bernoulli(std::max(0.0, fpr * 0.8)) ? 1 : 0);
        }
    }
    auto series = drift_series(months, covid, preds_model, preds_standard, labels);
    CHECK(series.months.size() == 12);
    CHECK(series.pearson_model.r >= 0.9);
    for (size_t i = 1; i < series.months.size(); ++i) {
        CHECK(series.months[i - 1].month < series.months[i].month);  // sorted
    }
}

TEST_CASE("drift series error paths") {
    // Constant FPR across months -> zero variance in the FPR vector.
    std::vector<std::string> months;
    std::vector<uint8_t> covid, pm, ps, labels;
    for (int m = 0; m < 6; ++m) {
        for (int i = 0; i < 10; ++i) {
            months.push_back("2021-0" + std::to_string(m + 1));
            covid.push_back(i < m ? 1 : 0);
            labels.push_back(0);
            pm.push_back(0);
            ps.push_back(0);
        }
    }
    CHECK_THROWS_WITH_AS(drift_series(months, covid, pm, ps, labels),
                         doctest::Contains("zero variance"), DataError);

    std::vector<std::string> two = {"2021-01", "2021-02"};
    std::vector<uint8_t> v2 = {0, 0};
    CHECK_THROWS_AS(drift_series(two, v2, v2, v2, v2), DataError);
}

TEST_CASE("drift series flags months with no negatives and excludes them") {
    Rng rng(139, 0);
    std::vector<std::string> months;
    std::vector<uint8_t> covid, pm, ps, labels;
    for (int m = 0; m < 5; ++m) {
        std::string key = "2021-0" + std::to_string(m + 1);
        for (int i = 0; i < 50; ++i) {
            months.push_back(key);
            covid.push_back(rng.bernoulli(0.05 * m) ? 1 : 0);
            bool positive = (m == 2);  // month 3 has no label-negative records
            labels.push_back(positive ? 1 : 0);
            pm.push_back(rng.bernoulli(0.05 + 0.1 * m) ? 1 : 0);
            ps.push_back(rng.bernoulli(0.04 + 0.08 * m) ? 1 : 0);
        }
    }
    auto series = drift_series(months, covid, pm, ps, labels);
    bool found_excluded = false;
    for (const auto& m : series.months) {
        if (m.month == "2021-03") {
            CHECK(m.excluded);
            found_excluded = true;
        }
    }
    CHECK(found_excluded);
}

TEST_CASE("heatmap grid: selection, conservation, thresholds") {
    std::vector<TriageRecord> records;
    std::vector<uint8_t> labels;
    auto mk = [&](double age, std::optional<double> temp, std::optional<double> pulse,
                  uint8_t label) {
        TriageRecord r;
        r.id = "h" + std::to_string(records.size());
        r.age_years = age;
        r.arrival_time = Timestamp::parse("2021-01-01T00:00:00Z");
        r.vitals.temperature_c = temp;
        r.vitals.pulse_bpm = pulse;
        records.push_back(r);
        labels.push_back(label);
    };
    mk(40, 38.5, 95, 0);
    mk(17, 39.0, 120, 0);           // pediatric: excluded
    mk(50, std::nullopt, 100, 0);   // missing axis vital: excluded
    mk(70, 36.5, 80, 1);
    mk(80, 40.0, 130, 1);

    ProtocolConfig cfg;
    auto grid = heatmap_grid(records, labels, HeatmapAxis::temperature, HeatmapAxis::pulse, 10,
                             cfg);
    int64_t non = 0, sep = 0;
    for (const auto& row : grid.counts_nonsepsis) {
        for (auto v : row) non += v;
    }
    for (const auto& row : grid.counts_sepsis) {
        for (auto v : row) sep += v;
    }
    CHECK(non == 1);
    CHECK(sep == 2);
    CHECK(grid.n_nonsepsis == 1);
    CHECK(grid.n_sepsis == 2);
    CHECK(grid.x_thresholds == std::vector<double>{36.0, 38.0});
    CHECK(grid.y_thresholds == std::vector<double>{90.0});
    CHECK(grid.x_edges.size() == 11);

    // Single included record lands in exactly one cell.
    records.clear();
    labels.clear();
    mk(30, 38.5, 95, 0);
    auto single =
        heatmap_grid(records, labels, HeatmapAxis::temperature, HeatmapAxis::pulse, 5, cfg);
    int nonzero = 0;
    for (const auto& row : single.counts_nonsepsis) {
        for (auto v : row) {
            if (v != 0) {
                ++nonzero;
                CHECK(v == 1);
            }
        }
    }
    CHECK(nonzero == 1);

    // Empty selection and bad axes are rejected.
    records.clear();
    labels.clear();
    mk(10, 38.0, 90, 0);  // pediatric only
    CHECK_THROWS_AS(
        heatmap_grid(records, labels, HeatmapAxis::temperature, HeatmapAxis::pulse, 5, cfg),
        DataError);
    CHECK_THROWS_AS(heatmap_grid(records, labels, HeatmapAxis::pulse, HeatmapAxis::pulse, 5, cfg),
                    ValidationError);
}
