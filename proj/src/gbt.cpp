#include "sepsis/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "sepsis/parallel.hpp"
#include "sepsis/rng.hpp"
#include "sepsis/stats_math.hpp"

namespace sepsis {

using json = nlohmann::ordered_json;

void GbtParams::validate() const {
    if (rounds < 1) throw ValidationError("gbt rounds must be >= 1");
    if (max_depth < 0) throw ValidationError("gbt max_depth must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw ValidationError("gbt learning_rate must be in (0, 1]");
    }
    if (l2_reg < 0.0) throw ValidationError("gbt l2_reg must be >= 0");
    if (split_gain_min < 0.0) throw ValidationError("gbt split_gain_min must be >= 0");
    if (min_child_hessian < 0.0) throw ValidationError("gbt min_child_hessian must be >= 0");
    if (!(subsample_rows > 0.0 && subsample_rows <= 1.0)) {
        throw ValidationError("gbt subsample_rows must be in (0, 1]");
    }
}

ClassWeights class_weights(const std::vector<uint8_t>& labels) {
    size_t n_pos = 0;
    for (uint8_t y : labels) {
        if (y) ++n_pos;
    }
    size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw DataError("class weights need both classes present in the labels");
    }
    double n = static_cast<double>(labels.size());
    return {n / (2.0 * static_cast<double>(n_pos)), n / (2.0 * static_cast<double>(n_neg))};
}

bool candidate_better(const SplitCandidate& a, const SplitCandidate& b) {
    if (!a.valid()) return false;
    if (!b.valid()) return true;
    if (a.gain != b.gain) return a.gain > b.gain;
    if (a.feature != b.feature) return a.feature < b.feature;
    if (a.threshold != b.threshold) return a.threshold < b.threshold;
    return a.default_left && !b.default_left;
}

double leaf_weight(double grad_sum, double hess_sum, double l2_reg) {
    double denom = hess_sum + l2_reg;
    return denom > 0.0 ? -grad_sum / denom : 0.0;
}

namespace {

struct ColumnEntry {
    double value;
    int32_t row;
};

using Columns = std::vector<std::vector<ColumnEntry>>;

Columns build_columns(const std::vector<SparseFeatureVector>& rows, uint32_t n_features,
                      int threads) {
    Columns cols(n_features);
    std::vector<size_t> counts(n_features, 0);
    for (const auto& r : rows) {
        for (const auto& [col, value] : r.entries) {
            (void)value;
            ++counts[col];
        }
    }
    for (uint32_t j = 0; j < n_features; ++j) cols[j].reserve(counts[j]);
    for (size_t r = 0; r < rows.size(); ++r) {
        for (const auto& [col, value] : rows[r].entries) {
            cols[col].push_back({value, static_cast<int32_t>(r)});
        }
    }
    parallel_for(n_features, threads, [&](size_t j) {
        std::stable_sort(cols[j].begin(), cols[j].end(),
                         [](const ColumnEntry& a, const ColumnEntry& b) { return a.value < b.value; });
    });
    return cols;
}

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
    int64_t count = 0;
};

struct SplitGainInputs {
    double g_total, h_total, lambda, gamma, min_child;
};

inline double eval_gain(double gl, double hl, const SplitGainInputs& in) {
    double gr = in.g_total - gl;
    double hr = in.h_total - hl;
    if (hl < in.min_child || hr < in.min_child) {
        return -std::numeric_limits<double>::infinity();
    }
    return 0.5 * (gl * gl / (hl + in.lambda) + gr * gr / (hr + in.lambda) -
                  in.g_total * in.g_total / (in.h_total + in.lambda)) -
           in.gamma;
}

// One best candidate per active node slot for every feature, evaluated in a
// single pass over each sorted column. Parallel over features; reduction over
// features is sequential, so thread count never changes the outcome.
std::vector<SplitCandidate> find_level_splits(const Columns& columns,
                                              const std::vector<double>& grad,
                                              const std::vector<double>& hess,
                                              const std::vector<int32_t>& node_of,
                                              const std::vector<int32_t>& slot_of,
                                              const std::vector<NodeStats>& stats,
                                              const GbtParams& params, int threads) {
    const size_t n_slots = stats.size();
    const size_t n_features = columns.size();
    std::vector<SplitCandidate> per_feature(n_features * n_slots);

    parallel_for(n_features, threads, [&](size_t j) {
        const auto& col = columns[j];
        if (col.empty()) return;
        std::vector<double> gp(n_slots, 0.0), hp(n_slots, 0.0);
        std::vector<int64_t> present(n_slots, 0);
        for (const auto& e : col) {
            int32_t node = node_of[e.row];
            if (node < 0) continue;
            int32_t s = slot_of[node];
            if (s < 0) continue;
            gp[s] += grad[e.row];
            hp[s] += hess[e.row];
            ++present[s];
        }

        std::vector<double> pg(n_slots, 0.0), ph(n_slots, 0.0), prev(n_slots, 0.0);
        std::vector<char> has_prev(n_slots, 0);
        SplitCandidate* best = &per_feature[j * n_slots];
        for (const auto& e : col) {
            int32_t node = node_of[e.row];
            if (node < 0) continue;
            int32_t s = slot_of[node];
            if (s < 0) continue;
            if (has_prev[s] && e.value != prev[s]) {
                double thr = (prev[s] + e.value) / 2.0;
                if (thr > prev[s]) {  // representable midpoint
                    SplitGainInputs in{stats[s].g, stats[s].h, params.l2_reg,
                                       params.split_gain_min, params.min_child_hessian};
                    bool any_missing = present[s] < stats[s].count;
                    // Missing values join the left child.
                    double gl_left = pg[s] + (any_missing ? stats[s].g - gp[s] : 0.0);
                    double hl_left = ph[s] + (any_missing ? stats[s].h - hp[s] : 0.0);
                    double gain_left = eval_gain(gl_left, hl_left, in);
                    if (gain_left > 0.0) {
                        SplitCandidate c{gain_left, static_cast<int32_t>(j), thr, true};
                        if (candidate_better(c, best[s])) best[s] = c;
                    }
                    if (any_missing) {  // missing values join the right child
                        double gain_right = eval_gain(pg[s], ph[s], in);
                        if (gain_right > 0.0) {
                            SplitCandidate c{gain_right, static_cast<int32_t>(j), thr, false};
                            if (candidate_better(c, best[s])) best[s] = c;
                        }
                    }
                }
            }
            pg[s] += grad[e.row];
            ph[s] += hess[e.row];
            prev[s] = e.value;
            has_prev[s] = 1;
        }
    });

    std::vector<SplitCandidate> best(n_slots);
    for (size_t j = 0; j < n_features; ++j) {
        for (size_t s = 0; s < n_slots; ++s) {
            if (candidate_better(per_feature[j * n_slots + s], best[s])) {
                best[s] = per_feature[j * n_slots + s];
            }
        }
    }
    return best;
}

void check_matrix(const std::vector<SparseFeatureVector>& rows) {
    if (rows.empty()) throw DataError("training data is empty");
    uint32_t dim = rows.front().dimension;
    for (const auto& r : rows) {
        if (r.dimension != dim) {
            throw DataError("feature vectors disagree on dimension");
        }
    }
}

Tree grow_tree(const Columns& columns, const std::vector<SparseFeatureVector>& rows,
               const std::vector<double>& grad, const std::vector<double>& hess,
               std::vector<int32_t>& node_of, const GbtParams& params, int threads) {
    Tree tree(1);
    const size_t n = rows.size();

    auto make_leaf = [&](int32_t node, const NodeStats& s) {
        tree[node].feature = -1;
        tree[node].leaf_value = params.learning_rate * leaf_weight(s.g, s.h, params.l2_reg);
    };

    NodeStats root;
    for (size_t r = 0; r < n; ++r) {
        if (node_of[r] == 0) {
            root.g += grad[r];
            root.h += hess[r];
            ++root.count;
        }
    }

    std::vector<int32_t> active_nodes{0};
    std::vector<NodeStats> active_stats{root};
    int depth = 0;
    while (!active_nodes.empty()) {
        if (depth == params.max_depth) {
            for (size_t i = 0; i < active_nodes.size(); ++i) {
                make_leaf(active_nodes[i], active_stats[i]);
            }
            break;
        }
        std::vector<int32_t> slot_of(tree.size(), -1);
        for (size_t i = 0; i < active_nodes.size(); ++i) {
            slot_of[active_nodes[i]] = static_cast<int32_t>(i);
        }
        auto candidates = find_level_splits(columns, grad, hess, node_of, slot_of, active_stats,
                                            params, threads);

        std::vector<int32_t> next_nodes;
        bool any_split = false;
        for (size_t i = 0; i < active_nodes.size(); ++i) {
            int32_t node = active_nodes[i];
            if (candidates[i].valid()) {
                any_split = true;
                tree[node].feature = candidates[i].feature;
                tree[node].threshold = candidates[i].threshold;
                tree[node].default_left = candidates[i].default_left;
                tree[node].left = static_cast<int32_t>(tree.size());
                tree[node].right = static_cast<int32_t>(tree.size() + 1);
                tree.emplace_back();
                tree.emplace_back();
                next_nodes.push_back(tree[node].left);
                next_nodes.push_back(tree[node].right);
            } else {
                make_leaf(node, active_stats[i]);
            }
        }
        if (!any_split) break;

        // Route rows through the fresh splits.
        for (size_t r = 0; r < n; ++r) {
            int32_t node = node_of[r];
            if (node < 0 || tree[node].is_leaf()) continue;
            auto v = rows[r].value(static_cast<uint32_t>(tree[node].feature));
            bool go_left = v ? (*v < tree[node].threshold) : tree[node].default_left;
            node_of[r] = go_left ? tree[node].left : tree[node].right;
        }

        std::vector<int32_t> child_slot(tree.size(), -1);
        for (size_t i = 0; i < next_nodes.size(); ++i) {
            child_slot[next_nodes[i]] = static_cast<int32_t>(i);
        }
        std::vector<NodeStats> next_stats(next_nodes.size());
        for (size_t r = 0; r < n; ++r) {
            int32_t node = node_of[r];
            if (node < 0) continue;
            int32_t s = child_slot[node];
            if (s < 0) continue;
            next_stats[s].g += grad[r];
            next_stats[s].h += hess[r];
            ++next_stats[s].count;
        }
        active_nodes = std::move(next_nodes);
        active_stats = std::move(next_stats);
        ++depth;
    }
    return tree;
}

double weighted_logloss(const std::vector<double>& margins, const std::vector<uint8_t>& labels,
                        const std::vector<double>& w) {
    double loss = 0.0, wsum = 0.0;
    for (size_t i = 0; i < margins.size(); ++i) {
        double m = margins[i];
        double y = labels[i] ? 1.0 : 0.0;
        double l = m > 0.0 ? (1.0 - y) * m + std::log1p(std::exp(-m))
                           : -y * m + std::log1p(std::exp(m));
        loss += w[i] * l;
        wsum += w[i];
    }
    return loss / wsum;
}

}  // namespace

SplitCandidate find_root_split(const std::vector<SparseFeatureVector>& rows,
                               const std::vector<double>& grad, const std::vector<double>& hess,
                               const GbtParams& params, int threads) {
    check_matrix(rows);
    if (grad.size() != rows.size() || hess.size() != rows.size()) {
        throw DataError("gradient/hessian length must match the row count");
    }
    Columns columns = build_columns(rows, rows.front().dimension, threads);
    std::vector<int32_t> node_of(rows.size(), 0);
    std::vector<int32_t> slot_of{0};
    NodeStats root;
    for (size_t r = 0; r < rows.size(); ++r) {
        root.g += grad[r];
        root.h += hess[r];
        ++root.count;
    }
    auto best = find_level_splits(columns, grad, hess, node_of, slot_of, {root}, params, threads);
    return best[0];
}

GbtEnsemble train_gbt(const std::vector<SparseFeatureVector>& rows,
                      const std::vector<uint8_t>& labels, const ClassWeights& weights,
                      const GbtParams& params, int threads) {
    params.validate();
    check_matrix(rows);
    if (labels.size() != rows.size()) {
        throw DataError("labels length must match the row count");
    }
    const size_t n = rows.size();

    std::vector<double> w(n);
    double sum_w_pos = 0.0, sum_w_neg = 0.0;
    for (size_t i = 0; i < n; ++i) {
        w[i] = labels[i] ? weights.w_pos : weights.w_neg;
        (labels[i] ? sum_w_pos : sum_w_neg) += w[i];
    }
    if (sum_w_pos <= 0.0 || sum_w_neg <= 0.0) {
        throw DataError("training labels are single-class");
    }

    GbtEnsemble ensemble;
    ensemble.n_features = rows.front().dimension;
    ensemble.base_score = std::log(sum_w_pos / sum_w_neg);

    Columns columns = build_columns(rows, ensemble.n_features, threads);
    std::vector<double> margins(n, ensemble.base_score);
    std::vector<double> grad(n), hess(n);
    std::vector<int32_t> node_of(n);

    for (int round = 0; round < params.rounds; ++round) {
        for (size_t i = 0; i < n; ++i) {
            double p = sigmoid(margins[i]);
            double y = labels[i] ? 1.0 : 0.0;
            grad[i] = w[i] * (p - y);
            hess[i] = w[i] * p * (1.0 - p);
        }
        if (params.subsample_rows < 1.0) {
            Rng rng(params.seed, static_cast<uint64_t>(round));
            for (size_t i = 0; i < n; ++i) {
                node_of[i] = rng.bernoulli(params.subsample_rows) ? 0 : -1;
            }
        } else {
            std::fill(node_of.begin(), node_of.end(), 0);
        }

        Tree tree = grow_tree(columns, rows, grad, hess, node_of, params, threads);

        std::vector<double> delta(n);
        parallel_for(n, threads, [&](size_t i) { delta[i] = route_leaf_value(tree, rows[i]); });
        for (size_t i = 0; i < n; ++i) margins[i] += delta[i];

        ensemble.trees.push_back(std::move(tree));
        ensemble.training_loss.push_back(weighted_logloss(margins, labels, w));
    }
    return ensemble;
}

double route_leaf_value(const Tree& tree, const SparseFeatureVector& row) {
    int32_t node = 0;
    while (!tree[node].is_leaf()) {
        auto v = row.value(static_cast<uint32_t>(tree[node].feature));
        bool go_left = v ? (*v < tree[node].threshold) : tree[node].default_left;
        node = go_left ? tree[node].left : tree[node].right;
    }
    return tree[node].leaf_value;
}

double predict_margin(const GbtEnsemble& ensemble, const SparseFeatureVector& row) {
    if (row.dimension != ensemble.n_features) {
        throw DataError("feature vector dimension does not match the trained model");
    }
    double margin = ensemble.base_score;
    for (const auto& tree : ensemble.trees) {
        margin += route_leaf_value(tree, row);
    }
    return margin;
}

StackConvergenceError::StackConvergenceError(double a, double b)
    : DataError("stack fit did not converge within 100 Newton iterations (last a=" +
                std::to_string(a) + ", b=" + std::to_string(b) + ")"),
      last_a(a),
      last_b(b) {}

namespace {
constexpr double kProbClip = 1e-6;
}

StackFit fit_stack(const std::vector<double>& gbt_probabilities,
                   const std::vector<uint8_t>& labels, const ClassWeights& weights) {
    if (gbt_probabilities.size() != labels.size() || gbt_probabilities.empty()) {
        throw DataError("stack fit needs matching non-empty probabilities and labels");
    }
    const size_t n = labels.size();
    std::vector<double> x(n);
    for (size_t i = 0; i < n; ++i) {
        double p = std::clamp(gbt_probabilities[i], kProbClip, 1.0 - kProbClip);
        x[i] = logit(p);
    }

    auto loss_at = [&](double a, double b) {
        double loss = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double wi = labels[i] ? weights.w_pos : weights.w_neg;
            double m = a * x[i] + b;
            double y = labels[i] ? 1.0 : 0.0;
            loss += wi * (m > 0.0 ? (1.0 - y) * m + std::log1p(std::exp(-m))
                                  : -y * m + std::log1p(std::exp(m)));
        }
        return loss;
    };

    double a = 1.0, b = 0.0;
    for (int iter = 1; iter <= 100; ++iter) {
        double ga = 0.0, gb = 0.0, haa = 0.0, hab = 0.0, hbb = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double wi = labels[i] ? weights.w_pos : weights.w_neg;
            double s = sigmoid(a * x[i] + b);
            double r = wi * (s - (labels[i] ? 1.0 : 0.0));
            double q = wi * s * (1.0 - s);
            ga += r * x[i];
            gb += r;
            haa += q * x[i] * x[i];
            hab += q * x[i];
            hbb += q;
        }
        double det = haa * hbb - hab * hab;
        if (!(std::fabs(det) > 1e-300)) {
            throw StackConvergenceError(a, b);
        }
        double da = (hbb * ga - hab * gb) / det;
        double db = (haa * gb - hab * ga) / det;
        // Damped step: halve until the weighted loss stops increasing.
        double base_loss = loss_at(a, b);
        double step = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            if (loss_at(a - step * da, b - step * db) <= base_loss) {
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if (!accepted) {
            throw StackConvergenceError(a, b);
        }
        a -= step * da;
        b -= step * db;
        if (std::max(std::fabs(step * da), std::fabs(step * db)) < 1e-8) {
            return {a, b, iter};
        }
    }
    throw StackConvergenceError(a, b);
}

double stack_probability(double margin, double stack_a, double stack_b) {
    double p = std::clamp(sigmoid(margin), kProbClip, 1.0 - kProbClip);
    return sigmoid(stack_a * logit(p) + stack_b);
}

double BoostedStackModel::margin(const SparseFeatureVector& row) const {
    return predict_margin(ensemble, row);
}

double BoostedStackModel::probability(const SparseFeatureVector& row) const {
    return stack_probability(margin(row), stack_a, stack_b);
}

namespace {

json params_to_json(const GbtParams& p) {
    json j = json::object();
    j["rounds"] = p.rounds;
    j["max_depth"] = p.max_depth;
    j["learning_rate"] = p.learning_rate;
    j["l2_reg"] = p.l2_reg;
    j["split_gain_min"] = p.split_gain_min;
    j["min_child_hessian"] = p.min_child_hessian;
    j["subsample_rows"] = p.subsample_rows;
    j["seed"] = p.seed;
    return j;
}

GbtParams params_from_json(const json& j) {
    GbtParams p;
    p.rounds = j.at("rounds").get<int>();
    p.max_depth = j.at("max_depth").get<int>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.l2_reg = j.at("l2_reg").get<double>();
    p.split_gain_min = j.at("split_gain_min").get<double>();
    p.min_child_hessian = j.at("min_child_hessian").get<double>();
    p.subsample_rows = j.at("subsample_rows").get<double>();
    p.seed = j.at("seed").get<uint64_t>();
    return p;
}

}  // namespace

void BoostedStackModel::save(const std::string& path) const {
    json j = json::object();
    j["format"] = "sepscreen-model";
    j["version"] = 1;
    j["params"] = params_to_json(params);
    j["base_score"] = ensemble.base_score;
    j["n_features"] = ensemble.n_features;
    json trees = json::array();
    for (const auto& tree : ensemble.trees) {
        json t = json::object();
        json feature = json::array(), threshold = json::array(), default_left = json::array(),
             left = json::array(), right = json::array(), leaf_value = json::array();
        for (const auto& node : tree) {
            feature.push_back(node.feature);
            threshold.push_back(node.threshold);
            default_left.push_back(node.default_left);
            left.push_back(node.left);
            right.push_back(node.right);
            leaf_value.push_back(node.leaf_value);
        }
        t["feature"] = std::move(feature);
        t["threshold"] = std::move(threshold);
        t["default_left"] = std::move(default_left);
        t["left"] = std::move(left);
        t["right"] = std::move(right);
        t["leaf_value"] = std::move(leaf_value);
        trees.push_back(std::move(t));
    }
    j["trees"] = std::move(trees);
    j["stack"] = {{"a", stack_a}, {"b", stack_b}};
    j["vocabulary"] = {{"names", vocabulary.feature_names()},
                       {"version_hash", vocabulary.version_hash()},
                       {"min_count", vocabulary.min_count()}};
    j["featurizer"] = {{"min_count", featurizer.min_count},
                       {"risk_concepts", featurizer.risk_concepts}};
    json windows = json::object();
    for (size_t f = 0; f < kNumericFieldCount; ++f) {
        auto w = cleaning.window(static_cast<NumericField>(f));
        windows[numeric_field_name(static_cast<NumericField>(f))] = {w.min, w.max};
    }
    j["cleaning"] = std::move(windows);
    j["threshold"] = threshold;
    j["threshold_policy"] = threshold_policy;

    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << j.dump(2) << '\n';
}

BoostedStackModel BoostedStackModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "sepscreen-model") {
            throw DataError("not a sepscreen model file: " + path);
        }
        BoostedStackModel m;
        m.params = params_from_json(j.at("params"));
        m.ensemble.base_score = j.at("base_score").get<double>();
        m.ensemble.n_features = j.at("n_features").get<uint32_t>();
        for (const auto& t : j.at("trees")) {
            const auto& feature = t.at("feature");
            Tree tree(feature.size());
            for (size_t i = 0; i < tree.size(); ++i) {
                tree[i].feature = t.at("feature")[i].get<int32_t>();
                tree[i].threshold = t.at("threshold")[i].get<double>();
                tree[i].default_left = t.at("default_left")[i].get<bool>();
                tree[i].left = t.at("left")[i].get<int32_t>();
                tree[i].right = t.at("right")[i].get<int32_t>();
                tree[i].leaf_value = t.at("leaf_value")[i].get<double>();
            }
            m.ensemble.trees.push_back(std::move(tree));
        }
        m.stack_a = j.at("stack").at("a").get<double>();
        m.stack_b = j.at("stack").at("b").get<double>();

        auto names = j.at("vocabulary").at("names").get<std::vector<std::string>>();
        auto stored_hash = j.at("vocabulary").at("version_hash").get<std::string>();
        if (vocabulary_hash(names) != stored_hash) {
            throw DataError("vocabulary hash mismatch in model file: " + path);
        }
        m.vocabulary = Vocabulary::from_names(std::move(names),
                                              j.at("vocabulary").at("min_count").get<int>());
        m.featurizer.min_count = j.at("featurizer").at("min_count").get<int>();
        m.featurizer.risk_concepts =
            j.at("featurizer").at("risk_concepts").get<std::vector<std::string>>();
        for (const auto& [key, window] : j.at("cleaning").items()) {
            auto field = numeric_field_from_name(key);
            if (!field) throw DataError("unknown cleaning field in model file: " + key);
            m.cleaning.set_window(*field, window[0].get<double>(), window[1].get<double>());
        }
        m.threshold = j.at("threshold").get<double>();
        m.threshold_policy = j.at("threshold_policy").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model file missing fields: ") + e.what());
    }
}

}  // namespace sepsis
