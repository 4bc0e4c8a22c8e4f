// Test-only reference implementations, written independently of the library
// code paths they check.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sepsis/features.hpp"
#include "sepsis/gbt.hpp"

namespace oracle {

// Triage protocol truth tables (default thresholds, spelled out literally).
int sirs_count(std::optional<double> temp, std::optional<double> pulse,
               std::optional<double> rr);
bool sirs_positive(std::optional<double> temp, std::optional<double> pulse,
                   std::optional<double> rr);
bool standard_positive(std::optional<double> temp, std::optional<double> pulse,
                       std::optional<double> rr, bool infection_documented);
int qsofa_score(std::optional<double> rr, std::optional<double> sbp,
                std::optional<bool> altered, std::optional<int> gcs);
bool qsofa_positive(std::optional<double> rr, std::optional<double> sbp,
                    std::optional<bool> altered, std::optional<int> gcs);

// Exhaustive split enumeration: every (feature, midpoint threshold, default
// direction) candidate, gains summed row-by-row.
sepsis::SplitCandidate brute_force_split(const std::vector<sepsis::SparseFeatureVector>& rows,
                                         const std::vector<double>& grad,
                                         const std::vector<double>& hess,
                                         const sepsis::GbtParams& params);

// AUC by counting positive-negative pairs, ties worth one half.
double pairwise_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

// Two-sided permutation p-value for the Pearson correlation.
double permutation_pearson_p(const std::vector<double>& x, const std::vector<double>& y,
                             int permutations, uint64_t seed);

// Weighted 1-feature logistic regression fit by coordinate-wise Newton sweeps.
struct LogisticFit {
    double a = 0.0;
    double b = 0.0;
    double se_a = 0.0;  // from the observed information at the optimum
};
LogisticFit logistic_fit(const std::vector<double>& x, const std::vector<uint8_t>& y,
                         double w_pos, double w_neg);

}  // namespace oracle
