#include "sepsis/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "sepsis/errors.hpp"
#include "sepsis/parallel.hpp"
#include "sepsis/rng.hpp"
#include "sepsis/stats_math.hpp"

namespace sepsis {

ConfusionCounts confusion_counts(const std::vector<uint8_t>& predictions,
                                 const std::vector<uint8_t>& labels) {
    if (predictions.size() != labels.size()) {
        throw DataError("predictions and labels differ in length");
    }
    if (predictions.empty()) {
        throw DataError("cannot compute confusion counts on an empty set");
    }
    ConfusionCounts c;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            (predictions[i] ? c.tp : c.fn) += 1;
        } else {
            (predictions[i] ? c.fp : c.tn) += 1;
        }
    }
    return c;
}

DerivedMetrics derive_metrics(const ConfusionCounts& c) {
    DerivedMetrics m;
    m.tpr = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    m.fpr = (c.fp + c.tn) > 0 ? static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn) : 0.0;
    m.precision =
        (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    double denom = m.precision + m.tpr;
    m.f1 = denom > 0.0 ? 2.0 * m.precision * m.tpr / denom : 0.0;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.n());
    return m;
}

double auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
    if (scores.size() != labels.size()) {
        throw DataError("scores and labels differ in length");
    }
    size_t n = scores.size();
    int64_t n_pos = 0;
    for (uint8_t y : labels) {
        if (y) ++n_pos;
    }
    int64_t n_neg = static_cast<int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw DataError("AUC needs both classes present");
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    // Midranks over tie groups; the rank sum of positives gives the
    // Mann-Whitney U with ties counted one half.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) {
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        }
        i = j + 1;
    }
    double u = rank_sum_pos - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

double percentile_type7(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted[0];
    double h = q * static_cast<double>(sorted.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = h - std::floor(h);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

CiInterval bootstrap_ci(const std::function<std::optional<double>(const std::vector<size_t>&)>& statistic,
                        size_t n, int B, double level, uint64_t seed, int threads) {
    if (n < 2) throw DataError("bootstrap needs n >= 2");
    if (B < 2) throw ValidationError("bootstrap needs B >= 2");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap level must be in (0,1)");

    std::vector<double> stats(B);
    std::vector<char> failed(B, 0);
    parallel_for(static_cast<size_t>(B), threads, [&](size_t b) {
        Rng rng(seed, b);
        std::vector<size_t> idx(n);
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (size_t i = 0; i < n; ++i) {
                idx[i] = static_cast<size_t>(rng.uniform_index(n));
            }
            auto value = statistic(idx);
            if (value) {
                stats[b] = *value;
                return;
            }
        }
        failed[b] = 1;
    });
    for (int b = 0; b < B; ++b) {
        if (failed[b]) {
            throw DataError("bootstrap statistic undefined after 100 redraws (resample " +
                            std::to_string(b) + ")");
        }
    }
    std::sort(stats.begin(), stats.end());
    double alpha = (1.0 - level) / 2.0;
    return {percentile_type7(stats, alpha), percentile_type7(stats, 1.0 - alpha)};
}

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DataError("pearson inputs differ in length");
    size_t n = x.size();
    if (n < 3) throw DataError("pearson needs n >= 3");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw DataError("pearson is undefined: zero variance in an input");
    }
    PearsonResult out;
    out.r = sxy / std::sqrt(sxx * syy);
    double df = static_cast<double>(n - 2);
    double denom = 1.0 - out.r * out.r;
    if (denom <= 0.0) {
        out.p = 0.0;
    } else {
        double t = out.r * std::sqrt(df / denom);
        out.p = student_t_two_sided_p(t, df);
    }
    return out;
}

double tp_overlap(const std::vector<uint8_t>& preds_a, const std::vector<uint8_t>& preds_b,
                  const std::vector<uint8_t>& labels) {
    if (preds_a.size() != labels.size() || preds_b.size() != labels.size()) {
        throw DataError("tp_overlap inputs differ in length");
    }
    int64_t tp_a = 0, both = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] && preds_a[i]) {
            ++tp_a;
            if (preds_b[i]) ++both;
        }
    }
    if (tp_a == 0) {
        throw DataError("tp_overlap is undefined: system A has no true positives");
    }
    return static_cast<double>(both) / static_cast<double>(tp_a);
}

const char* threshold_policy_name(ThresholdPolicy p) {
    switch (p) {
        case ThresholdPolicy::target_fpr: return "target_fpr";
        case ThresholdPolicy::max_f1: return "max_f1";
        default: return "fixed";
    }
}

std::optional<ThresholdPolicy> threshold_policy_from_name(const std::string& name) {
    if (name == "target_fpr") return ThresholdPolicy::target_fpr;
    if (name == "max_f1") return ThresholdPolicy::max_f1;
    if (name == "fixed") return ThresholdPolicy::fixed;
    return std::nullopt;
}

double select_threshold(const std::vector<double>& scores, const std::vector<uint8_t>& labels,
                        ThresholdPolicy policy, double target) {
    if (policy == ThresholdPolicy::fixed) return target;
    if (scores.size() != labels.size() || scores.empty()) {
        throw DataError("threshold selection needs matching non-empty scores and labels");
    }
    int64_t n_pos = 0;
    for (uint8_t y : labels) {
        if (y) ++n_pos;
    }
    int64_t n_neg = static_cast<int64_t>(labels.size()) - n_pos;

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    // Sweep candidates from the sentinel (nothing positive) downward.
    double best_threshold = scores[order.front()] + 1.0;
    double best_objective;
    auto objective = [&](int64_t tp, int64_t fp) {
        if (policy == ThresholdPolicy::target_fpr) {
            double fpr = n_neg > 0 ? static_cast<double>(fp) / static_cast<double>(n_neg) : 0.0;
            return -std::fabs(fpr - target);  // larger is better
        }
        double prec = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        double tpr = n_pos > 0 ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0;
        return (prec + tpr) > 0.0 ? 2.0 * prec * tpr / (prec + tpr) : 0.0;
    };
    best_objective = objective(0, 0);

    int64_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        double v = scores[order[i]];
        while (i < order.size() && scores[order[i]] == v) {
            (labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        double obj = objective(tp, fp);
        if (obj > best_objective) {  // ties keep the earlier (higher) threshold
            best_objective = obj;
            best_threshold = v;
        }
    }
    return best_threshold;
}

namespace {

struct ResampleStats {
    double auc = 0.0;
    DerivedMetrics metrics;
};

}  // namespace

EvaluationReport evaluate_predictions(const std::string& system, const std::vector<double>& scores,
                                      const std::vector<uint8_t>& predictions,
                                      const std::vector<uint8_t>& labels,
                                      std::optional<double> threshold, const EvalOptions& options) {
    if (scores.size() != labels.size() || predictions.size() != labels.size()) {
        throw DataError("evaluation inputs differ in length");
    }
    const size_t n = labels.size();

    EvaluationReport report;
    report.system = system;
    report.n = static_cast<int64_t>(n);
    report.threshold = threshold;
    for (uint8_t y : labels) {
        if (y) ++report.n_positive;
    }

    auto counts = confusion_counts(predictions, labels);
    auto point = derive_metrics(counts);
    report.auc.value = auc(scores, labels);
    report.tpr.value = point.tpr;
    report.fpr.value = point.fpr;
    report.f1.value = point.f1;
    report.accuracy.value = point.accuracy;
    report.precision.value = point.precision;

    const int B = options.bootstrap_b;
    std::vector<ResampleStats> stats(B);
    std::vector<char> failed(B, 0);
    parallel_for(static_cast<size_t>(B), options.threads, [&](size_t b) {
        Rng rng(options.seed, b);
        std::vector<double> s(n);
        std::vector<uint8_t> p(n), y(n);
        for (int attempt = 0; attempt < 100; ++attempt) {
            bool any_pos = false, any_neg = false;
            for (size_t i = 0; i < n; ++i) {
                size_t idx = static_cast<size_t>(rng.uniform_index(n));
                s[i] = scores[idx];
                p[i] = predictions[idx];
                y[i] = labels[idx];
                (y[i] ? any_pos : any_neg) = true;
            }
            if (!any_pos || !any_neg) continue;  // redraw degenerate resamples
            auto c = confusion_counts(p, y);
            stats[b].metrics = derive_metrics(c);
            stats[b].auc = auc(s, y);
            return;
        }
        failed[b] = 1;
    });
    for (int b = 0; b < B; ++b) {
        if (failed[b]) {
            throw DataError("evaluation bootstrap could not draw a two-class resample");
        }
    }

    auto interval = [&](auto pick) {
        std::vector<double> values(B);
        for (int b = 0; b < B; ++b) values[b] = pick(stats[b]);
        std::sort(values.begin(), values.end());
        double alpha = (1.0 - options.level) / 2.0;
        return CiInterval{percentile_type7(values, alpha), percentile_type7(values, 1.0 - alpha)};
    };
    auto fill = [&](MetricWithCi& m, auto pick) {
        auto ci = interval(pick);
        m.ci_lo = ci.lo;
        m.ci_hi = ci.hi;
    };
    fill(report.auc, [](const ResampleStats& s) { return s.auc; });
    fill(report.tpr, [](const ResampleStats& s) { return s.metrics.tpr; });
    fill(report.fpr, [](const ResampleStats& s) { return s.metrics.fpr; });
    fill(report.f1, [](const ResampleStats& s) { return s.metrics.f1; });
    fill(report.accuracy, [](const ResampleStats& s) { return s.metrics.accuracy; });
    fill(report.precision, [](const ResampleStats& s) { return s.metrics.precision; });
    return report;
}

std::vector<size_t> subgroup_indices(const std::vector<SepsisTier>& tiers, SepsisTier subgroup) {
    std::vector<size_t> keep;
    for (size_t i = 0; i < tiers.size(); ++i) {
        if (tiers[i] == SepsisTier::none || tiers[i] == subgroup) {
            keep.push_back(i);
        }
    }
    return keep;
}

EvaluationReport subgroup_evaluate(const std::string& system, const std::vector<double>& scores,
                                   const std::vector<uint8_t>& predictions,
                                   const std::vector<SepsisTier>& tiers, SepsisTier subgroup,
                                   std::optional<double> threshold, const EvalOptions& options) {
    if (subgroup == SepsisTier::none) {
        throw ValidationError("subgroup tier must be a sepsis tier");
    }
    if (scores.size() != tiers.size() || predictions.size() != tiers.size()) {
        throw DataError("subgroup evaluation inputs differ in length");
    }
    auto keep = subgroup_indices(tiers, subgroup);
    std::vector<double> s;
    std::vector<uint8_t> p, y;
    int64_t n_sub = 0;
    for (size_t i : keep) {
        s.push_back(scores[i]);
        p.push_back(predictions[i]);
        y.push_back(tiers[i] == subgroup ? 1 : 0);
        if (tiers[i] == subgroup) ++n_sub;
    }
    if (n_sub == 0) {
        throw DataError("subgroup \"" + std::string(tier_name(subgroup)) + "\" is empty");
    }
    return evaluate_predictions(system, s, p, y, threshold, options);
}

DriftSeries drift_series(const std::vector<std::string>& month_keys,
                         const std::vector<uint8_t>& covid_flags,
                         const std::vector<uint8_t>& preds_model,
                         const std::vector<uint8_t>& preds_standard,
                         const std::vector<uint8_t>& labels) {
    const size_t n = month_keys.size();
    if (covid_flags.size() != n || preds_model.size() != n || preds_standard.size() != n ||
        labels.size() != n) {
        throw DataError("drift series inputs differ in length");
    }
    struct Bucket {
        int64_t n = 0, covid = 0, neg = 0, fp_model = 0, fp_standard = 0;
    };
    std::map<std::string, Bucket> buckets;  // sorted by month key
    int64_t neg_covid = 0, neg_noncovid = 0, fp_model_covid = 0, fp_model_noncovid = 0,
            fp_standard_covid = 0, fp_standard_noncovid = 0;
    for (size_t i = 0; i < n; ++i) {
        auto& b = buckets[month_keys[i]];
        ++b.n;
        if (covid_flags[i]) ++b.covid;
        if (!labels[i]) {
            ++b.neg;
            if (preds_model[i]) ++b.fp_model;
            if (preds_standard[i]) ++b.fp_standard;
            if (covid_flags[i]) {
                ++neg_covid;
                if (preds_model[i]) ++fp_model_covid;
                if (preds_standard[i]) ++fp_standard_covid;
            } else {
                ++neg_noncovid;
                if (preds_model[i]) ++fp_model_noncovid;
                if (preds_standard[i]) ++fp_standard_noncovid;
            }
        }
    }
    if (buckets.size() < 3) {
        throw DataError("drift analysis needs at least 3 calendar months, got " +
                        std::to_string(buckets.size()));
    }

    DriftSeries out;
    std::vector<double> covid_fraction, fpr_model, fpr_standard;
    for (const auto& [month, b] : buckets) {
        DriftMonth m;
        m.month = month;
        m.n = b.n;
        m.n_negative = b.neg;
        m.covid_fraction = static_cast<double>(b.covid) / static_cast<double>(b.n);
        m.excluded = (b.neg == 0);
        if (!m.excluded) {
            m.fpr_model = static_cast<double>(b.fp_model) / static_cast<double>(b.neg);
            m.fpr_standard = static_cast<double>(b.fp_standard) / static_cast<double>(b.neg);
            covid_fraction.push_back(m.covid_fraction);
            fpr_model.push_back(m.fpr_model);
            fpr_standard.push_back(m.fpr_standard);
        }
        out.months.push_back(std::move(m));
    }
    out.pearson_model = pearson(covid_fraction, fpr_model);
    out.pearson_standard = pearson(covid_fraction, fpr_standard);
    if (neg_covid > 0) {
        out.fpr_model_covid = static_cast<double>(fp_model_covid) / static_cast<double>(neg_covid);
        out.fpr_standard_covid =
            static_cast<double>(fp_standard_covid) / static_cast<double>(neg_covid);
    }
    if (neg_noncovid > 0) {
        out.fpr_model_noncovid =
            static_cast<double>(fp_model_noncovid) / static_cast<double>(neg_noncovid);
        out.fpr_standard_noncovid =
            static_cast<double>(fp_standard_noncovid) / static_cast<double>(neg_noncovid);
    }
    return out;
}

const char* heatmap_axis_name(HeatmapAxis a) {
    switch (a) {
        case HeatmapAxis::temperature: return "temperature";
        case HeatmapAxis::pulse: return "pulse";
        default: return "resp_rate";
    }
}

std::optional<HeatmapAxis> heatmap_axis_from_name(const std::string& name) {
    if (name == "temperature") return HeatmapAxis::temperature;
    if (name == "pulse") return HeatmapAxis::pulse;
    if (name == "resp_rate") return HeatmapAxis::resp_rate;
    return std::nullopt;
}

namespace {

std::optional<double> axis_value(const TriageRecord& r, HeatmapAxis a) {
    switch (a) {
        case HeatmapAxis::temperature: return r.vitals.temperature_c;
        case HeatmapAxis::pulse: return r.vitals.pulse_bpm;
        default: return r.vitals.resp_rate;
    }
}

std::vector<double> axis_thresholds(HeatmapAxis a, const ProtocolConfig& cfg) {
    switch (a) {
        case HeatmapAxis::temperature: return {cfg.sirs_temp_low, cfg.sirs_temp_high};
        case HeatmapAxis::pulse: return {cfg.sirs_pulse};
        default: return {cfg.sirs_rr};
    }
}

size_t bin_of(double v, const std::vector<double>& edges) {
    size_t bins = edges.size() - 1;
    double lo = edges.front(), hi = edges.back();
    if (v >= hi) return bins - 1;
    double f = (v - lo) / (hi - lo);
    size_t b = static_cast<size_t>(f * static_cast<double>(bins));
    return std::min(b, bins - 1);
}

}  // namespace

HeatmapGrid heatmap_grid(const std::vector<TriageRecord>& records,
                         const std::vector<uint8_t>& labels, HeatmapAxis x_axis,
                         HeatmapAxis y_axis, int bins, const ProtocolConfig& cfg) {
    if (records.size() != labels.size()) {
        throw DataError("heatmap inputs differ in length");
    }
    if (bins < 1) throw ValidationError("heatmap needs at least 1 bin");
    if (x_axis == y_axis) throw ValidationError("heatmap axes must differ");

    std::vector<size_t> keep;
    double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
    for (size_t i = 0; i < records.size(); ++i) {
        if (records[i].age_years < 18.0) continue;
        auto x = axis_value(records[i], x_axis);
        auto y = axis_value(records[i], y_axis);
        if (!x || !y) continue;
        if (keep.empty()) {
            x_min = x_max = *x;
            y_min = y_max = *y;
        } else {
            x_min = std::min(x_min, *x);
            x_max = std::max(x_max, *x);
            y_min = std::min(y_min, *y);
            y_max = std::max(y_max, *y);
        }
        keep.push_back(i);
    }
    if (keep.empty()) {
        throw DataError("heatmap selection is empty (adults with both axis vitals present)");
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;

    HeatmapGrid grid;
    grid.x_axis = x_axis;
    grid.y_axis = y_axis;
    grid.x_thresholds = axis_thresholds(x_axis, cfg);
    grid.y_thresholds = axis_thresholds(y_axis, cfg);
    for (int b = 0; b <= bins; ++b) {
        double f = static_cast<double>(b) / static_cast<double>(bins);
        grid.x_edges.push_back(x_min + f * (x_max - x_min));
        grid.y_edges.push_back(y_min + f * (y_max - y_min));
    }
    grid.counts_nonsepsis.assign(bins, std::vector<int64_t>(bins, 0));
    grid.counts_sepsis.assign(bins, std::vector<int64_t>(bins, 0));
    for (size_t i : keep) {
        size_t bx = bin_of(*axis_value(records[i], x_axis), grid.x_edges);
        size_t by = bin_of(*axis_value(records[i], y_axis), grid.y_edges);
        if (labels[i]) {
            ++grid.counts_sepsis[bx][by];
            ++grid.n_sepsis;
        } else {
            ++grid.counts_nonsepsis[bx][by];
            ++grid.n_nonsepsis;
        }
    }
    return grid;
}

namespace {

nlohmann::ordered_json metric_json(const MetricWithCi& m) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["value"] = m.value;
    j["ci_lo"] = m.ci_lo;
    j["ci_hi"] = m.ci_hi;
    return j;
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvaluationReport& report) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["system"] = report.system;
    j["n"] = report.n;
    j["n_positive"] = report.n_positive;
    if (report.threshold) {
        j["threshold"] = *report.threshold;
    }
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    metrics["auc"] = metric_json(report.auc);
    metrics["tpr"] = metric_json(report.tpr);
    metrics["fpr"] = metric_json(report.fpr);
    metrics["f1"] = metric_json(report.f1);
    metrics["accuracy"] = metric_json(report.accuracy);
    metrics["precision"] = metric_json(report.precision);
    j["metrics"] = std::move(metrics);
    return j;
}

nlohmann::ordered_json drift_to_json(const DriftSeries& series) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["format"] = "sepscreen-drift";
    j["version"] = 1;
    nlohmann::ordered_json months = nlohmann::ordered_json::array();
    for (const auto& m : series.months) {
        nlohmann::ordered_json mj = nlohmann::ordered_json::object();
        mj["month"] = m.month;
        mj["n"] = m.n;
        mj["n_negative"] = m.n_negative;
        mj["covid_fraction"] = m.covid_fraction;
        if (m.excluded) {
            mj["excluded"] = true;
        } else {
            mj["fpr_model"] = m.fpr_model;
            mj["fpr_standard"] = m.fpr_standard;
        }
        months.push_back(std::move(mj));
    }
    j["months"] = std::move(months);
    j["pearson"] = {{"model", {{"r", series.pearson_model.r}, {"p", series.pearson_model.p}}},
                    {"standard",
                     {{"r", series.pearson_standard.r}, {"p", series.pearson_standard.p}}}};
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    j["covid_stratified_fpr"] = {
        {"model", {{"covid", opt(series.fpr_model_covid)}, {"non_covid", opt(series.fpr_model_noncovid)}}},
        {"standard",
         {{"covid", opt(series.fpr_standard_covid)}, {"non_covid", opt(series.fpr_standard_noncovid)}}}};
    return j;
}

}  // namespace sepsis
