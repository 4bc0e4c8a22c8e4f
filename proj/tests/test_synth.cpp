#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sepsis/cnlp.hpp"
#include "sepsis/errors.hpp"
#include "sepsis/labels.hpp"
#include "sepsis/metrics.hpp"
#include "sepsis/protocols.hpp"
#include "sepsis/rng.hpp"
#include "sepsis/synth.hpp"

using namespace sepsis;

namespace {

ConceptDictionary bundled() {
    return ConceptDictionary::load(std::string(SEPSCREEN_DATA_DIR) + "/concept_dictionary.tsv");
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool is_septic(Condition c) {
    return condition_tier(c) != SepsisTier::none;
}

}  // namespace

TEST_CASE("config validation") {
    CohortConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.sepsis_prevalence = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = CohortConfig{};
    cfg.severe_fraction = 0.7;
    cfg.shock_fraction = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = CohortConfig{};
    cfg.start_month = "2021/01";
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = CohortConfig{};
    cfg.covid_monthly_fractions.assign(20, 0.1);  // more entries than month_span
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("same config and seed give byte-identical cohort and sidecar files") {
    CohortConfig cfg;
    cfg.n_records = 1500;
    cfg.seed = 42;
    cfg.covid_monthly_fractions = {0, 0, 0.05, 0.1, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.3, 0.3};

    auto a = generate(cfg, 1);
    auto b = generate(cfg, 4);  // thread count must not matter
    write_cohort_file("synth_a.jsonl", a.records);
    write_cohort_file("synth_b.jsonl", b.records);
    write_latent_file("synth_a.tsv", a.latent);
    write_latent_file("synth_b.tsv", b.latent);
    CHECK(file_bytes("synth_a.jsonl") == file_bytes("synth_b.jsonl"));
    CHECK(file_bytes("synth_a.tsv") == file_bytes("synth_b.tsv"));

    auto latent_back = read_latent_file("synth_a.tsv");
    REQUIRE(latent_back.size() == a.latent.size());
    CHECK(latent_back[7].id == a.latent[7].id);
    CHECK(latent_back[7].condition == a.latent[7].condition);
    CHECK(latent_back[7].bayes_logit == a.latent[7].bayes_logit);

    cfg.seed = 43;
    auto c = generate(cfg, 1);
    write_cohort_file("synth_c.jsonl", c.records);
    CHECK(file_bytes("synth_a.jsonl") != file_bytes("synth_c.jsonl"));
    for (const char* f : {"synth_a.jsonl", "synth_b.jsonl", "synth_c.jsonl", "synth_a.tsv",
                          "synth_b.tsv"}) {
        std::remove(f);
    }
}

TEST_CASE("emitted label evidence reproduces the latent condition exactly") {
    auto dict = bundled();
    auto map = Icd10Map::bundled_defaults();
    CohortConfig cfg;
    cfg.n_records = 8000;
    cfg.seed = 7;
    auto cohort = generate(cfg, 4);
    for (size_t i = 0; i < cohort.records.size(); ++i) {
        auto label = resolve_label(cohort.records[i], dict, map);
        CHECK(label.tier == condition_tier(cohort.latent[i].condition));
    }
}

TEST_CASE("marginal calibration targets hold on a seeded 20k cohort") {
    auto dict = bundled();
    CohortConfig cfg;
    cfg.n_records = 20000;
    cfg.seed = 42;
    cfg.covid_monthly_fractions.assign(12, 0.15);
    auto cohort = generate(cfg, 4);

    int64_t n = static_cast<int64_t>(cohort.records.size());
    int64_t septic = 0, covid = 0, covid_src = 0, noncovid_src = 0, covid_temp = 0,
            covid_pulse = 0;
    for (size_t i = 0; i < cohort.records.size(); ++i) {
        const auto& r = cohort.records[i];
        bool sep = is_septic(cohort.latent[i].condition);
        if (sep) ++septic;
        bool has_source =
            detect_infection_source(extract_all(r, dict), dict).has_value();
        if (cohort.latent[i].condition == Condition::covid) {
            ++covid;
            if (has_source) ++covid_src;
            if (r.vitals.temperature_c &&
                (*r.vitals.temperature_c < 36.0 || *r.vitals.temperature_c > 38.0)) {
                ++covid_temp;
            }
            if (r.vitals.pulse_bpm && *r.vitals.pulse_bpm > 90.0) ++covid_pulse;
        } else {
            if (has_source) ++noncovid_src;
        }
    }
    double prevalence = static_cast<double>(septic) / static_cast<double>(n);
    CHECK(std::fabs(prevalence - 0.0163) < 0.0025);
    REQUIRE(covid > 1000);
    CHECK(std::fabs(static_cast<double>(covid_src) / covid - 0.8745) < 0.02);
    CHECK(std::fabs(static_cast<double>(covid_temp) / covid - 0.2073) < 0.02);
    CHECK(std::fabs(static_cast<double>(covid_pulse) / covid - 0.6186) < 0.02);
    CHECK(std::fabs(static_cast<double>(noncovid_src) / (n - covid) - 0.569) < 0.02);
}

TEST_CASE("bayes scores: oracle sanity on a seeded cohort") {
    CohortConfig cfg;
    cfg.n_records = 20000;
    cfg.seed = 11;
    auto cohort = generate(cfg, 4);

    auto scores = bayes_scores(cohort.latent, cohort.records);
    std::vector<uint8_t> labels(cohort.records.size());
    for (size_t i = 0; i < labels.size(); ++i) {
        labels[i] = is_septic(cohort.latent[i].condition) ? 1 : 0;
    }
    double bayes_auc = auc(scores, labels);
    CHECK(bayes_auc > 0.90);

    // Shuffling the labels destroys the signal.
    Rng rng(3, 0);
    auto shuffled = labels;
    for (size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
    }
    double shuffled_auc = auc(scores, shuffled);
    CHECK(std::fabs(shuffled_auc - 0.5) < 0.02);

    // Severity plant: emission separation increases with the tier.
    double mean_logit[4] = {0, 0, 0, 0};
    int64_t count[4] = {0, 0, 0, 0};
    for (size_t i = 0; i < labels.size(); ++i) {
        int tier = static_cast<int>(condition_tier(cohort.latent[i].condition));
        mean_logit[tier] += cohort.latent[i].bayes_logit;
        ++count[tier];
    }
    for (int t = 0; t < 4; ++t) {
        REQUIRE(count[t] > 0);
        mean_logit[t] /= static_cast<double>(count[t]);
    }
    CHECK(mean_logit[0] < mean_logit[1]);
    CHECK(mean_logit[1] < mean_logit[2]);
    CHECK(mean_logit[2] < mean_logit[3]);
}

TEST_CASE("bayes_scores rejects a mismatched cohort") {
    CohortConfig cfg;
    cfg.n_records = 50;
    cfg.seed = 1;
    auto cohort = generate(cfg, 1);
    auto records = cohort.records;
    records[10].id = "not-a-real-id";
    CHECK_THROWS_AS(bayes_scores(cohort.latent, records), DataError);
}

TEST_CASE("generated vitals always survive the cleaning table") {
    CohortConfig cfg;
    cfg.n_records = 5000;
    cfg.seed = 13;
    auto cohort = generate(cfg, 4);
    auto table = CleaningTable::defaults();
    for (const auto& r : cohort.records) {
        auto reparsed = parse_record(serialize_record(r), table, 1);
        CHECK(reparsed == r);  // nothing was cleaned away
    }
}

TEST_CASE("covid flag matches the latent covid condition") {
    CohortConfig cfg;
    cfg.n_records = 4000;
    cfg.seed = 17;
    cfg.covid_monthly_fractions.assign(12, 0.2);
    auto cohort = generate(cfg, 4);
    int64_t covid = 0;
    for (size_t i = 0; i < cohort.records.size(); ++i) {
        bool flagged = cohort.records[i].covid_diagnosed.value_or(false);
        CHECK(flagged == (cohort.latent[i].condition == Condition::covid));
        if (flagged) ++covid;
    }
    CHECK(covid > 500);
}
