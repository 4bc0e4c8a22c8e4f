#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sepsis/cnlp.hpp"
#include "sepsis/config.hpp"
#include "sepsis/gbt.hpp"
#include "sepsis/labels.hpp"
#include "sepsis/metrics.hpp"
#include "sepsis/record.hpp"

namespace sepsis {

struct LoadedCohort {
    std::vector<TriageRecord> records;
    std::vector<ConceptSet> concepts;  // triage-time fields only
    std::vector<uint8_t> labels;       // is_sepsis (when labeled)
    std::vector<SepsisTier> tiers;
};

LoadedCohort load_cohort(const std::string& path, const RunConfig& rc,
                         const ConceptDictionary& dict, const Icd10Map* map, bool need_labels);

LoadedCohort label_cohort(std::vector<TriageRecord> records, const RunConfig& rc,
                          const ConceptDictionary& dict, const Icd10Map& map, int threads);

struct TrainOutput {
    BoostedStackModel model;
    std::vector<size_t> validation_rows;  // indices into the training cohort
    EvaluationReport validation_report;
};

// Vocabulary + GBT fit on a seeded 80% inner split; stack and operating
// threshold fit on the held-out 20% validation part.
TrainOutput run_training(const LoadedCohort& train, const ConceptDictionary& dict,
                         const RunConfig& rc);

struct SystemRun {
    std::string name;
    std::vector<double> scores;  // {0,1} for boolean protocols
    std::vector<uint8_t> preds;
    std::optional<double> threshold;
};

SystemRun run_model(const BoostedStackModel& model, const LoadedCohort& cohort, int threads);
SystemRun run_protocol(Protocol protocol, const LoadedCohort& cohort,
                       const ConceptDictionary& dict, const RunConfig& rc);

}  // namespace sepsis
