#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sepsis/record.hpp"

namespace sepsis {

enum class Condition {
    healthy = 0,
    infection_nonseptic = 1,
    covid = 2,
    sepsis = 3,
    severe_sepsis = 4,
    septic_shock = 5,
};

const char* condition_name(Condition c);
std::optional<Condition> condition_from_name(const std::string& name);
SepsisTier condition_tier(Condition c);

struct CohortConfig {
    size_t n_records = 50000;
    double sepsis_prevalence = 0.0163;
    double severe_fraction = 0.20;  // of sepsis cases
    double shock_fraction = 0.055;  // of sepsis cases
    std::vector<double> covid_monthly_fractions;  // per month; missing -> 0
    double pediatric_fraction = 0.25;
    int month_span = 12;
    std::string start_month = "2021-01";  // YYYY-MM
    uint64_t seed = 0;
    std::string site = "site-1";

    void validate() const;  // throws ValidationError
};

// Planted ground truth for one record; written to the latent sidecar so no
// pipeline stage can consume it by accident. bayes_logit is the exact
// posterior log-odds of the sepsis label given the record's observables under
// the generator's own emission model.
struct LatentRecord {
    std::string id;
    Condition condition = Condition::healthy;
    double bayes_logit = 0.0;
};

struct GeneratedCohort {
    std::vector<TriageRecord> records;
    std::vector<LatentRecord> latent;
};

// Per-record generation runs on a counter RNG keyed by (seed, record index):
// parallel generation reproduces serial output exactly.
GeneratedCohort generate(const CohortConfig& config, int threads = 1);

void write_latent_file(const std::string& path, const std::vector<LatentRecord>& latent);
std::vector<LatentRecord> read_latent_file(const std::string& path);

// Latent Bayes logits aligned to a cohort; throws DataError when ids mismatch.
std::vector<double> bayes_scores(const std::vector<LatentRecord>& latent,
                                 const std::vector<TriageRecord>& records);

}  // namespace sepsis
