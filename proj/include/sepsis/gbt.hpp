#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepsis/cleaning.hpp"
#include "sepsis/errors.hpp"
#include "sepsis/features.hpp"

namespace sepsis {

struct GbtParams {
    int rounds = 200;
    int max_depth = 6;
    double learning_rate = 0.1;
    double l2_reg = 1.0;           // lambda
    double split_gain_min = 0.0;   // gamma
    double min_child_hessian = 1.0;
    double subsample_rows = 1.0;
    uint64_t seed = 0;

    void validate() const;  // throws ValidationError
};

// Inverse-frequency weights, w_c = N / (2 * N_c).
struct ClassWeights {
    double w_pos = 1.0;
    double w_neg = 1.0;
};

ClassWeights class_weights(const std::vector<uint8_t>& labels);

struct TreeNode {
    int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // value < threshold routes left
    bool default_left = true;  // missing values route here
    int32_t left = -1;
    int32_t right = -1;
    double leaf_value = 0.0;  // learning-rate-scaled log-odds contribution

    bool is_leaf() const { return feature < 0; }
};

using Tree = std::vector<TreeNode>;  // node 0 is the root

struct SplitCandidate {
    double gain = 0.0;
    int32_t feature = -1;
    double threshold = 0.0;
    bool default_left = true;

    bool valid() const { return feature >= 0; }
};

// Strict ordering used everywhere a best split is chosen: higher gain, then
// lower feature index, then lower threshold, then default-left.
bool candidate_better(const SplitCandidate& a, const SplitCandidate& b);

double leaf_weight(double grad_sum, double hess_sum, double l2_reg);

// Exact greedy split search over one node holding every row; exposed so the
// brute-force enumeration oracle can be checked against the production path.
SplitCandidate find_root_split(const std::vector<SparseFeatureVector>& rows,
                               const std::vector<double>& grad, const std::vector<double>& hess,
                               const GbtParams& params, int threads = 1);

struct GbtEnsemble {
    double base_score = 0.0;
    uint32_t n_features = 0;
    std::vector<Tree> trees;
    std::vector<double> training_loss;  // weighted log-loss after each round
};

GbtEnsemble train_gbt(const std::vector<SparseFeatureVector>& rows,
                      const std::vector<uint8_t>& labels, const ClassWeights& weights,
                      const GbtParams& params, int threads = 1);

double route_leaf_value(const Tree& tree, const SparseFeatureVector& row);

// base_score plus the routed leaf of every tree.
double predict_margin(const GbtEnsemble& ensemble, const SparseFeatureVector& row);

struct StackFit {
    double a = 1.0;
    double b = 0.0;
    int iterations = 0;
};

struct StackConvergenceError : DataError {
    StackConvergenceError(double a, double b);
    double last_a;
    double last_b;
};

// Weighted logistic regression of the label on logit(p), Newton iterations to
// 1e-8 or 100 steps. Probabilities are clipped to (1e-6, 1 - 1e-6).
StackFit fit_stack(const std::vector<double>& gbt_probabilities,
                   const std::vector<uint8_t>& labels, const ClassWeights& weights);

double stack_probability(double margin, double stack_a, double stack_b);

// Trained ensemble + calibration + everything needed to featurize new records.
struct BoostedStackModel {
    GbtParams params;
    GbtEnsemble ensemble;
    double stack_a = 1.0;
    double stack_b = 0.0;
    Vocabulary vocabulary;
    FeaturizerConfig featurizer;
    CleaningTable cleaning = CleaningTable::defaults();
    double threshold = 0.5;
    std::string threshold_policy = "target_fpr";

    double margin(const SparseFeatureVector& row) const;
    double probability(const SparseFeatureVector& row) const;  // in (0,1)

    void save(const std::string& path) const;
    static BoostedStackModel load(const std::string& path);  // verifies the vocabulary hash
};

}  // namespace sepsis
