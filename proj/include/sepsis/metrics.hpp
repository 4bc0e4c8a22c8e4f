#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepsis/protocols.hpp"
#include "sepsis/record.hpp"

namespace sepsis {

struct ConfusionCounts {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
    int64_t tn = 0;

    int64_t n() const { return tp + fp + fn + tn; }
};

struct DerivedMetrics {
    double tpr = 0.0;
    double fpr = 0.0;
    double precision = 0.0;  // 0 when no predicted positives
    double f1 = 0.0;         // 0 when the denominator is 0
    double accuracy = 0.0;
};

ConfusionCounts confusion_counts(const std::vector<uint8_t>& predictions,
                                 const std::vector<uint8_t>& labels);
DerivedMetrics derive_metrics(const ConfusionCounts& counts);

// P(random positive outranks random negative), ties counted 1/2 (midranks).
// Throws DataError when only one class is present.
double auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

struct CiInterval {
    double lo = 0.0;
    double hi = 0.0;
};

// Percentile interval over B seeded with-replacement resamples of {0..n-1}.
// The statistic returns nullopt for resamples it is undefined on (redrawn, at
// most 100 attempts each). Deterministic for a given seed at any thread count.
CiInterval bootstrap_ci(const std::function<std::optional<double>(const std::vector<size_t>&)>& statistic,
                        size_t n, int B = 2000, double level = 0.95, uint64_t seed = 0,
                        int threads = 1);

struct PearsonResult {
    double r = 0.0;
    double p = 1.0;
};

// Sample correlation with a two-sided t-test p-value. Throws DataError on
// n < 3 or zero variance.
PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

// |TP_a intersect TP_b| / |TP_a|; throws DataError when TP_a is empty.
double tp_overlap(const std::vector<uint8_t>& preds_a, const std::vector<uint8_t>& preds_b,
                  const std::vector<uint8_t>& labels);

enum class ThresholdPolicy { target_fpr, max_f1, fixed };

const char* threshold_policy_name(ThresholdPolicy p);
std::optional<ThresholdPolicy> threshold_policy_from_name(const std::string& name);

// Operating threshold over the candidate set {unique scores, max+1}; a
// prediction is positive when score >= threshold. Ties between candidates go
// to the higher threshold.
double select_threshold(const std::vector<double>& scores, const std::vector<uint8_t>& labels,
                        ThresholdPolicy policy, double target);

struct MetricWithCi {
    double value = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct EvaluationReport {
    std::string system;
    int64_t n = 0;
    int64_t n_positive = 0;
    std::optional<double> threshold;  // scored models only
    MetricWithCi auc;
    MetricWithCi tpr;
    MetricWithCi fpr;
    MetricWithCi f1;
    MetricWithCi accuracy;
    MetricWithCi precision;
};

struct EvalOptions {
    int bootstrap_b = 2000;
    double level = 0.95;
    uint64_t seed = 0;
    int threads = 1;
};

// Point metrics plus bootstrap CIs; one shared resample stream per report.
EvaluationReport evaluate_predictions(const std::string& system, const std::vector<double>& scores,
                                      const std::vector<uint8_t>& predictions,
                                      const std::vector<uint8_t>& labels,
                                      std::optional<double> threshold, const EvalOptions& options);

// Indices kept for a severity-tier subgroup evaluation: subgroup-tier
// positives plus every non-sepsis negative; other sepsis tiers are excluded.
std::vector<size_t> subgroup_indices(const std::vector<SepsisTier>& tiers, SepsisTier subgroup);

EvaluationReport subgroup_evaluate(const std::string& system, const std::vector<double>& scores,
                                   const std::vector<uint8_t>& predictions,
                                   const std::vector<SepsisTier>& tiers, SepsisTier subgroup,
                                   std::optional<double> threshold, const EvalOptions& options);

struct DriftMonth {
    std::string month;  // "YYYY-MM"
    int64_t n = 0;
    int64_t n_negative = 0;
    double covid_fraction = 0.0;
    double fpr_model = 0.0;
    double fpr_standard = 0.0;
    bool excluded = false;  // no label-negative records that month
};

struct DriftSeries {
    std::vector<DriftMonth> months;  // sorted by month
    PearsonResult pearson_model;     // covid fraction vs model FPR
    PearsonResult pearson_standard;  // covid fraction vs standard-screening FPR
    std::optional<double> fpr_model_covid;
    std::optional<double> fpr_model_noncovid;
    std::optional<double> fpr_standard_covid;
    std::optional<double> fpr_standard_noncovid;
};

// Monthly covid fraction and FPR series plus the covid-stratified FPR split.
// Throws DataError when fewer than 3 months are usable.
DriftSeries drift_series(const std::vector<std::string>& month_keys,
                         const std::vector<uint8_t>& covid_flags,
                         const std::vector<uint8_t>& preds_model,
                         const std::vector<uint8_t>& preds_standard,
                         const std::vector<uint8_t>& labels);

enum class HeatmapAxis { temperature, pulse, resp_rate };

const char* heatmap_axis_name(HeatmapAxis a);
std::optional<HeatmapAxis> heatmap_axis_from_name(const std::string& name);

struct HeatmapGrid {
    HeatmapAxis x_axis = HeatmapAxis::temperature;
    HeatmapAxis y_axis = HeatmapAxis::pulse;
    std::vector<double> x_edges;  // bins + 1
    std::vector<double> y_edges;
    // counts[ix][iy]
    std::vector<std::vector<int64_t>> counts_nonsepsis;
    std::vector<std::vector<int64_t>> counts_sepsis;
    std::vector<double> x_thresholds;  // SIRS trigger lines on each axis
    std::vector<double> y_thresholds;
    int64_t n_nonsepsis = 0;
    int64_t n_sepsis = 0;
};

// Adult records (age >= 18) with both axis vitals present, split by label.
HeatmapGrid heatmap_grid(const std::vector<TriageRecord>& records,
                         const std::vector<uint8_t>& labels, HeatmapAxis x_axis,
                         HeatmapAxis y_axis, int bins, const ProtocolConfig& cfg);

nlohmann::ordered_json report_to_json(const EvaluationReport& report);
nlohmann::ordered_json drift_to_json(const DriftSeries& series);

}  // namespace sepsis
