#include "sepsis/pipeline.hpp"

#include <cmath>

#include "sepsis/parallel.hpp"
#include "sepsis/rng.hpp"
#include "sepsis/stats_math.hpp"

namespace sepsis {

LoadedCohort label_cohort(std::vector<TriageRecord> records, const RunConfig& rc,
                          const ConceptDictionary& dict, const Icd10Map& map, int threads) {
    (void)rc;
    LoadedCohort c;
    c.records = std::move(records);
    c.concepts.resize(c.records.size());
    parallel_for(c.records.size(), threads,
                 [&](size_t i) { c.concepts[i] = extract_all(c.records[i], dict); });
    c.labels.resize(c.records.size());
    c.tiers.resize(c.records.size());
    for (size_t i = 0; i < c.records.size(); ++i) {
        SepsisLabel label = resolve_label(c.records[i], dict, map);
        c.labels[i] = label.is_sepsis() ? 1 : 0;
        c.tiers[i] = label.tier;
    }
    return c;
}

LoadedCohort load_cohort(const std::string& path, const RunConfig& rc,
                         const ConceptDictionary& dict, const Icd10Map* map, bool need_labels) {
    if (need_labels) {
        return label_cohort(read_cohort_file(path, rc.cleaning), rc, dict, *map, rc.threads);
    }
    LoadedCohort c;
    c.records = read_cohort_file(path, rc.cleaning);
    c.concepts.resize(c.records.size());
    parallel_for(c.records.size(), rc.threads,
                 [&](size_t i) { c.concepts[i] = extract_all(c.records[i], dict); });
    return c;
}

TrainOutput run_training(const LoadedCohort& train, const ConceptDictionary& dict,
                         const RunConfig& rc) {
    size_t n = train.records.size();
    if (n < 10) throw DataError("training cohort is too small");

    bool has_pos = false, has_neg = false;
    for (uint8_t y : train.labels) (y ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
        throw DataError("training labels are single-class (label column is_sepsis)");
    }

    // Seeded inner split: the GBT fits on the inner-train part, the stack and
    // the operating threshold on the held-out validation part.
    const double val_fraction = 0.2;
    Rng rng(derive_seed(rc.seed, "train.valsplit"), 0);
    auto shuffled = rng.shuffled_indices(n);
    size_t n_val = static_cast<size_t>(std::llround(static_cast<double>(n) * val_fraction));
    n_val = std::min(std::max<size_t>(n_val, 1), n - 1);
    std::vector<char> is_val(n, 0);
    for (size_t i = 0; i < n_val; ++i) is_val[shuffled[i]] = 1;
    std::vector<size_t> inner_rows, val_rows;
    for (size_t i = 0; i < n; ++i) {
        (is_val[i] ? val_rows : inner_rows).push_back(i);
    }

    auto pick = [&](const std::vector<size_t>& rows, std::vector<TriageRecord>& rec,
                    std::vector<ConceptSet>& con, std::vector<uint8_t>& lab) {
        for (size_t i : rows) {
            rec.push_back(train.records[i]);
            con.push_back(train.concepts[i]);
            lab.push_back(train.labels[i]);
        }
    };
    std::vector<TriageRecord> inner_records, val_records;
    std::vector<ConceptSet> inner_concepts, val_concepts;
    std::vector<uint8_t> inner_labels, val_labels;
    pick(inner_rows, inner_records, inner_concepts, inner_labels);
    pick(val_rows, val_records, val_concepts, val_labels);

    Vocabulary vocab = build_vocabulary(inner_records, inner_concepts, rc.featurizer);
    auto featurize_rows = [&](const std::vector<TriageRecord>& recs,
                              const std::vector<ConceptSet>& cons) {
        std::vector<SparseFeatureVector> rows(recs.size());
        parallel_for(recs.size(), rc.threads, [&](size_t i) {
            rows[i] = featurize(recs[i], cons[i], vocab, rc.cleaning, rc.featurizer);
        });
        return rows;
    };
    auto inner_vectors = featurize_rows(inner_records, inner_concepts);
    auto val_vectors = featurize_rows(val_records, val_concepts);

    ClassWeights weights = class_weights(inner_labels);
    GbtParams params = rc.gbt;
    params.seed = derive_seed(rc.seed, "train.gbt");
    GbtEnsemble ensemble = train_gbt(inner_vectors, inner_labels, weights, params, rc.threads);

    std::vector<double> val_margins(val_vectors.size());
    parallel_for(val_vectors.size(), rc.threads,
                 [&](size_t i) { val_margins[i] = predict_margin(ensemble, val_vectors[i]); });
    std::vector<double> val_probs(val_vectors.size());
    for (size_t i = 0; i < val_probs.size(); ++i) val_probs[i] = sigmoid(val_margins[i]);
    StackFit stack = fit_stack(val_probs, val_labels, weights);

    std::vector<double> val_scores(val_vectors.size());
    for (size_t i = 0; i < val_scores.size(); ++i) {
        val_scores[i] = stack_probability(val_margins[i], stack.a, stack.b);
    }

    double target = 0.0;
    if (rc.threshold.policy == ThresholdPolicy::target_fpr) {
        if (rc.threshold.target_fpr) {
            target = *rc.threshold.target_fpr;
        } else {
            // Default target: standard-screening FPR on the same validation split.
            std::vector<uint8_t> std_preds(val_records.size());
            for (size_t i = 0; i < val_records.size(); ++i) {
                std_preds[i] =
                    screen_standard(val_records[i].vitals, val_concepts[i], dict, rc.protocol)
                            .positive
                        ? 1
                        : 0;
            }
            target = derive_metrics(confusion_counts(std_preds, val_labels)).fpr;
        }
    } else if (rc.threshold.policy == ThresholdPolicy::fixed) {
        target = rc.threshold.fixed_value;
    }
    double threshold = select_threshold(val_scores, val_labels, rc.threshold.policy, target);

    TrainOutput out;
    out.model.params = params;
    out.model.ensemble = std::move(ensemble);
    out.model.stack_a = stack.a;
    out.model.stack_b = stack.b;
    out.model.vocabulary = vocab;
    out.model.featurizer = rc.featurizer;
    out.model.cleaning = rc.cleaning;
    out.model.threshold = threshold;
    out.model.threshold_policy = threshold_policy_name(rc.threshold.policy);
    out.validation_rows = val_rows;

    std::vector<uint8_t> val_preds(val_scores.size());
    for (size_t i = 0; i < val_scores.size(); ++i) val_preds[i] = val_scores[i] >= threshold;
    EvalOptions opts;
    opts.seed = derive_seed(rc.seed, "eval.bootstrap");
    opts.threads = rc.threads;
    out.validation_report = evaluate_predictions("model(validation)", val_scores, val_preds,
                                                 val_labels, threshold, opts);
    return out;
}

SystemRun run_model(const BoostedStackModel& model, const LoadedCohort& cohort, int threads) {
    SystemRun run;
    run.name = "model";
    run.threshold = model.threshold;
    run.scores.resize(cohort.records.size());
    run.preds.resize(cohort.records.size());
    parallel_for(cohort.records.size(), threads, [&](size_t i) {
        auto vec = featurize(cohort.records[i], cohort.concepts[i], model.vocabulary,
                             model.cleaning, model.featurizer);
        run.scores[i] = model.probability(vec);
        run.preds[i] = run.scores[i] >= model.threshold ? 1 : 0;
    });
    return run;
}

SystemRun run_protocol(Protocol protocol, const LoadedCohort& cohort,
                       const ConceptDictionary& dict, const RunConfig& rc) {
    SystemRun run;
    run.name = protocol_name(protocol);
    run.preds.resize(cohort.records.size());
    parallel_for(cohort.records.size(), rc.threads, [&](size_t i) {
        run.preds[i] = screen(protocol, cohort.records[i].vitals, cohort.concepts[i], dict,
                              rc.protocol)
                           .positive
                           ? 1
                           : 0;
    });
    run.scores.assign(run.preds.begin(), run.preds.end());
    return run;
}

}  // namespace sepsis
