#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sepsis/cleaning.hpp"
#include "sepsis/features.hpp"
#include "sepsis/gbt.hpp"
#include "sepsis/metrics.hpp"
#include "sepsis/protocols.hpp"
#include "sepsis/synth.hpp"

namespace sepsis {

// Flat key=value configuration with dotted section prefixes. '#' starts a
// comment; unknown keys are ignored for forward compatibility; command-line
// --set overrides win over the file.
class Config {
  public:
    static Config load(const std::string& path);
    void set(const std::string& key, const std::string& value);
    void apply_overrides(const std::vector<std::string>& key_value_pairs);  // "key=value"

    std::optional<std::string> get(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& key) const;

  private:
    std::map<std::string, std::string> values_;
};

struct ThresholdConfig {
    ThresholdPolicy policy = ThresholdPolicy::target_fpr;
    std::optional<double> target_fpr;  // empty: standard-screening FPR on validation
    double fixed_value = 0.5;
};

// Everything a CLI run needs, assembled from the config file plus overrides.
struct RunConfig {
    ProtocolConfig protocol;
    GbtParams gbt;
    CleaningTable cleaning = CleaningTable::defaults();
    FeaturizerConfig featurizer;
    ThresholdConfig threshold;
    CohortConfig synth;
    double train_fraction = 0.8;
    uint64_t seed = 0;
    int threads = 1;
    std::string dictionary_path;
    std::string icd10_map_path;

    static RunConfig from_config(const Config& cfg);  // validates
};

}  // namespace sepsis
