#include "sepsis/features.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "sepsis/errors.hpp"
#include "sepsis/rng.hpp"

namespace sepsis {

std::string vocabulary_hash(const std::vector<std::string>& names) {
    uint64_t h = 1469598103934665603ull;
    for (const auto& name : names) {
        h ^= fnv1a64(name);
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int Vocabulary::index_of(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

Vocabulary Vocabulary::from_names(std::vector<std::string> names, int min_count) {
    Vocabulary v;
    v.names_ = std::move(names);
    v.min_count_ = min_count;
    for (size_t i = 0; i < v.names_.size(); ++i) {
        if (!v.index_.emplace(v.names_[i], static_cast<int>(i)).second) {
            throw DataError("duplicate vocabulary feature name: \"" + v.names_[i] + "\"");
        }
    }
    if (v.names_.size() < kNumericFieldCount) {
        throw DataError("vocabulary is missing the numeric block");
    }
    for (size_t i = 0; i < kNumericFieldCount; ++i) {
        if (v.names_[i] != numeric_field_name(static_cast<NumericField>(i))) {
            throw DataError("vocabulary numeric block out of order at \"" + v.names_[i] + "\"");
        }
    }
    v.version_hash_ = vocabulary_hash(v.names_);
    return v;
}

std::optional<double> SparseFeatureVector::value(uint32_t column) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), column,
                               [](const auto& e, uint32_t c) { return e.first < c; });
    if (it == entries.end() || it->first != column) return std::nullopt;
    return it->second;
}

namespace {

std::string concept_feature_name(const ConceptMention& m) {
    return std::string(source_field_prefix(m.source_field)) + ":" + polarity_name(m.polarity) +
           ":" + m.canonical;
}

bool is_risk_concept(const std::string& canonical, const FeaturizerConfig& cfg) {
    return std::find(cfg.risk_concepts.begin(), cfg.risk_concepts.end(), canonical) !=
           cfg.risk_concepts.end();
}

// Categorical / risk / duration one-hot names present on one record.
std::vector<std::string> onehot_names(const TriageRecord& r, const ConceptSet& concepts,
                                      const FeaturizerConfig& cfg) {
    std::vector<std::string> names;
    names.push_back(std::string("sex=") + sex_name(r.sex));
    if (r.arrival_mode) names.push_back("arrival_mode=" + *r.arrival_mode);
    if (r.vitals.altered_mentation) {
        names.push_back(std::string("altered_mentation=") +
                        (*r.vitals.altered_mentation ? "true" : "false"));
    }
    std::optional<DurationBin> bin;
    for (const auto& m : concepts.mentions) {
        if (m.source_field == SourceField::chief_complaint && m.duration_bin) {
            bin = m.duration_bin;
            break;
        }
    }
    if (bin) names.push_back(std::string("duration=") + duration_bin_name(*bin));
    for (const auto& m : concepts.mentions) {
        if (m.polarity == Polarity::affirmed && is_risk_concept(m.canonical, cfg)) {
            names.push_back("risk:" + m.canonical + "=risk");
        }
    }
    return names;
}

}  // namespace

Vocabulary build_vocabulary(const std::vector<TriageRecord>& records,
                            const std::vector<ConceptSet>& concept_sets,
                            const FeaturizerConfig& cfg) {
    if (records.empty()) {
        throw DataError("cannot build a vocabulary from an empty training set");
    }
    if (records.size() != concept_sets.size()) {
        throw DataError("records and concept sets differ in length");
    }

    std::set<std::string> onehots;          // sorted, always kept
    std::map<std::string, int> concepts;    // sorted, pruned by min_count
    for (size_t i = 0; i < records.size(); ++i) {
        for (auto& name : onehot_names(records[i], concept_sets[i], cfg)) {
            onehots.insert(std::move(name));
        }
        // Dedup within a record so a concept counts once per record.
        std::set<std::string> seen;
        for (const auto& m : concept_sets[i].mentions) {
            seen.insert(concept_feature_name(m));
        }
        for (const auto& name : seen) {
            ++concepts[name];
        }
    }

    Vocabulary v;
    v.min_count_ = cfg.min_count;
    for (size_t i = 0; i < kNumericFieldCount; ++i) {
        v.names_.push_back(numeric_field_name(static_cast<NumericField>(i)));
    }
    for (const auto& name : onehots) {
        v.names_.push_back(name);
    }
    for (const auto& [name, count] : concepts) {
        if (count >= cfg.min_count) v.names_.push_back(name);
    }
    for (size_t i = 0; i < v.names_.size(); ++i) {
        v.index_.emplace(v.names_[i], static_cast<int>(i));
    }
    v.version_hash_ = vocabulary_hash(v.names_);
    return v;
}

SparseFeatureVector featurize(const TriageRecord& record, const ConceptSet& concepts,
                              const Vocabulary& vocab, const CleaningTable& table,
                              const FeaturizerConfig& cfg) {
    SparseFeatureVector vec;
    vec.dimension = static_cast<uint32_t>(vocab.size());

    auto push_numeric = [&](NumericField f, std::optional<double> value) {
        if (!value) return;
        auto cleaned = clean_numeric(f, *value, table);
        if (cleaned) {
            vec.entries.emplace_back(static_cast<uint32_t>(f), *cleaned);
        }
    };
    push_numeric(NumericField::age_years, record.age_years);
    push_numeric(NumericField::temperature_c, record.vitals.temperature_c);
    push_numeric(NumericField::pulse_bpm, record.vitals.pulse_bpm);
    push_numeric(NumericField::resp_rate, record.vitals.resp_rate);
    push_numeric(NumericField::sbp_mmhg, record.vitals.sbp_mmhg);
    push_numeric(NumericField::dbp_mmhg, record.vitals.dbp_mmhg);
    push_numeric(NumericField::spo2_pct, record.vitals.spo2_pct);
    if (record.vitals.gcs_total) {
        push_numeric(NumericField::gcs_total, static_cast<double>(*record.vitals.gcs_total));
    }
    if (record.vitals.pain_0_10) {
        push_numeric(NumericField::pain_0_10, static_cast<double>(*record.vitals.pain_0_10));
    }

    std::set<int> onehot_columns;  // sorted and deduplicated
    for (const auto& name : onehot_names(record, concepts, cfg)) {
        int col = vocab.index_of(name);
        if (col >= 0) onehot_columns.insert(col);
    }
    for (const auto& m : concepts.mentions) {
        int col = vocab.index_of(concept_feature_name(m));
        if (col >= 0) onehot_columns.insert(col);  // out-of-vocabulary concepts drop silently
    }
    for (int col : onehot_columns) {
        vec.entries.emplace_back(static_cast<uint32_t>(col), 1.0);
    }
    return vec;
}

}  // namespace sepsis
