#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sepsis/cleaning.hpp"
#include "sepsis/cnlp.hpp"
#include "sepsis/record.hpp"

namespace sepsis {

struct FeaturizerConfig {
    int min_count = 5;  // concept features rarer than this are pruned
    std::vector<std::string> risk_concepts = {"alcohol abuse", "drug abuse", "homelessness",
                                              "immunocompromised"};
};

// Ordered feature-name list with a fixed leading numeric block. Immutable
// after build; the version hash pins the exact name order.
class Vocabulary {
  public:
    Vocabulary() = default;
    // Reconstructs a vocabulary from a serialized name list (model files).
    static Vocabulary from_names(std::vector<std::string> names, int min_count);

    const std::vector<std::string>& feature_names() const { return names_; }
    size_t size() const { return names_.size(); }
    int min_count() const { return min_count_; }
    static constexpr size_t numeric_block_size() { return kNumericFieldCount; }
    // -1 when the name is not in the vocabulary.
    int index_of(const std::string& name) const;
    const std::string& version_hash() const { return version_hash_; }

  private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
    std::string version_hash_;
    int min_count_ = 5;

    friend Vocabulary build_vocabulary(const std::vector<TriageRecord>&,
                                       const std::vector<ConceptSet>&, const FeaturizerConfig&);
};

std::string vocabulary_hash(const std::vector<std::string>& names);

// Indexed numeric/binary features for one record. Indices are strictly
// increasing; absent fields are absent entries, never zeros.
struct SparseFeatureVector {
    std::vector<std::pair<uint32_t, double>> entries;
    uint32_t dimension = 0;

    // nullopt when the column is absent.
    std::optional<double> value(uint32_t column) const;
};

// Builds the vocabulary from the training split only: numeric block first,
// then sorted categorical one-hots, duration bins, and concept features that
// occur at least min_count times.
Vocabulary build_vocabulary(const std::vector<TriageRecord>& records,
                            const std::vector<ConceptSet>& concept_sets,
                            const FeaturizerConfig& cfg);

SparseFeatureVector featurize(const TriageRecord& record, const ConceptSet& concepts,
                              const Vocabulary& vocab, const CleaningTable& table,
                              const FeaturizerConfig& cfg);

}  // namespace sepsis
