#include "sepsis/config.hpp"

#include <fstream>

#include "sepsis/errors.hpp"

namespace sepsis {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(line_no) +
                                  " is not key = value");
        }
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

void Config::apply_overrides(const std::vector<std::string>& key_value_pairs) {
    for (const auto& pair : key_value_pairs) {
        size_t eq = pair.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("--set expects key=value, got \"" + pair + "\"");
        }
        set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
    }
}

std::optional<std::string> Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) return std::nullopt;
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        size_t pos = 0;
        double out = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing chars");
        return out;
    } catch (const std::exception&) {
        throw ValidationError("config key \"" + key + "\" is not a number: " + *v);
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    double d = get_double(key, static_cast<double>(fallback));
    int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) {
        throw ValidationError("config key \"" + key + "\" is not an integer");
    }
    return i;
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        return std::stoull(*v);
    } catch (const std::exception&) {
        throw ValidationError("config key \"" + key + "\" is not an unsigned integer: " + *v);
    }
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    auto v = get(key);
    if (!v) return out;
    size_t start = 0;
    while (start <= v->size()) {
        size_t comma = v->find(',', start);
        std::string item = trim(v->substr(start, comma == std::string::npos ? comma : comma - start));
        if (!item.empty()) {
            try {
                out.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ValidationError("config key \"" + key + "\" has a non-numeric item: " + item);
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
    std::vector<std::string> out;
    auto v = get(key);
    if (!v) return out;
    size_t start = 0;
    while (start <= v->size()) {
        size_t comma = v->find(',', start);
        std::string item = trim(v->substr(start, comma == std::string::npos ? comma : comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

RunConfig RunConfig::from_config(const Config& cfg) {
    RunConfig rc;

    rc.protocol.sirs_temp_low = cfg.get_double("protocol.sirs_temp_low", rc.protocol.sirs_temp_low);
    rc.protocol.sirs_temp_high = cfg.get_double("protocol.sirs_temp_high", rc.protocol.sirs_temp_high);
    rc.protocol.sirs_pulse = cfg.get_double("protocol.sirs_pulse", rc.protocol.sirs_pulse);
    rc.protocol.sirs_rr = cfg.get_double("protocol.sirs_rr", rc.protocol.sirs_rr);
    rc.protocol.sirs_min_criteria = cfg.get_int("protocol.sirs_min_criteria", rc.protocol.sirs_min_criteria);
    rc.protocol.qsofa_rr = cfg.get_double("protocol.qsofa_rr", rc.protocol.qsofa_rr);
    rc.protocol.qsofa_sbp = cfg.get_double("protocol.qsofa_sbp", rc.protocol.qsofa_sbp);
    rc.protocol.qsofa_positive_threshold =
        cfg.get_int("protocol.qsofa_positive_threshold", rc.protocol.qsofa_positive_threshold);
    rc.protocol.validate();

    rc.gbt.rounds = cfg.get_int("gbt.rounds", rc.gbt.rounds);
    rc.gbt.max_depth = cfg.get_int("gbt.max_depth", rc.gbt.max_depth);
    rc.gbt.learning_rate = cfg.get_double("gbt.learning_rate", rc.gbt.learning_rate);
    rc.gbt.l2_reg = cfg.get_double("gbt.l2_reg", rc.gbt.l2_reg);
    rc.gbt.split_gain_min = cfg.get_double("gbt.split_gain_min", rc.gbt.split_gain_min);
    rc.gbt.min_child_hessian = cfg.get_double("gbt.min_child_hessian", rc.gbt.min_child_hessian);
    rc.gbt.subsample_rows = cfg.get_double("gbt.subsample_rows", rc.gbt.subsample_rows);
    rc.gbt.validate();

    for (size_t f = 0; f < kNumericFieldCount; ++f) {
        auto field = static_cast<NumericField>(f);
        std::string base = std::string("cleaning.") + numeric_field_name(field);
        auto w = rc.cleaning.window(field);
        rc.cleaning.set_window(field, cfg.get_double(base + ".min", w.min),
                               cfg.get_double(base + ".max", w.max));
    }
    rc.cleaning.validate();

    rc.featurizer.min_count = cfg.get_int("featurizer.min_count", rc.featurizer.min_count);
    if (auto risk = cfg.get("featurizer.risk_concepts")) {
        rc.featurizer.risk_concepts = cfg.get_string_list("featurizer.risk_concepts");
    }

    auto policy_name = cfg.get_string("threshold.policy", "target_fpr");
    auto policy = threshold_policy_from_name(policy_name);
    if (!policy) {
        throw ValidationError("unknown threshold.policy \"" + policy_name +
                              "\" (target_fpr | max_f1 | fixed)");
    }
    rc.threshold.policy = *policy;
    if (auto t = cfg.get("threshold.target_fpr")) {
        rc.threshold.target_fpr = cfg.get_double("threshold.target_fpr", 0.0);
    }
    rc.threshold.fixed_value = cfg.get_double("threshold.fixed_value", rc.threshold.fixed_value);

    rc.synth.n_records = static_cast<size_t>(cfg.get_int("synth.n_records", 50000));
    rc.synth.sepsis_prevalence = cfg.get_double("synth.sepsis_prevalence", rc.synth.sepsis_prevalence);
    rc.synth.severe_fraction = cfg.get_double("synth.severe_fraction", rc.synth.severe_fraction);
    rc.synth.shock_fraction = cfg.get_double("synth.shock_fraction", rc.synth.shock_fraction);
    rc.synth.covid_monthly_fractions = cfg.get_double_list("synth.covid_monthly_fractions");
    rc.synth.pediatric_fraction = cfg.get_double("synth.pediatric_fraction", rc.synth.pediatric_fraction);
    rc.synth.month_span = cfg.get_int("synth.month_span", rc.synth.month_span);
    rc.synth.start_month = cfg.get_string("synth.start_month", rc.synth.start_month);
    rc.synth.site = cfg.get_string("synth.site", rc.synth.site);

    rc.train_fraction = cfg.get_double("split.train_fraction", rc.train_fraction);
    if (!(rc.train_fraction > 0.0 && rc.train_fraction < 1.0)) {
        throw ValidationError("split.train_fraction must be in (0, 1)");
    }
    rc.seed = cfg.get_u64("seed", 0);
    rc.threads = cfg.get_int("threads", 1);
    if (rc.threads < 1) throw ValidationError("threads must be >= 1");
    rc.dictionary_path = cfg.get_string("paths.dictionary", "");
    rc.icd10_map_path = cfg.get_string("paths.icd10_map", "");
    return rc;
}

}  // namespace sepsis
