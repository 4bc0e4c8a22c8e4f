#include "sepsis/protocols.hpp"

#include "sepsis/errors.hpp"

namespace sepsis {

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::sirs: return "sirs";
        case Protocol::standard: return "standard";
        default: return "qsofa";
    }
}

std::optional<Protocol> protocol_from_name(const std::string& name) {
    if (name == "sirs") return Protocol::sirs;
    if (name == "standard") return Protocol::standard;
    if (name == "qsofa") return Protocol::qsofa;
    return std::nullopt;
}

void ProtocolConfig::validate() const {
    if (sirs_temp_low <= 0 || sirs_temp_high <= 0 || sirs_pulse <= 0 || sirs_rr <= 0 ||
        qsofa_rr <= 0 || qsofa_sbp <= 0) {
        throw ValidationError("protocol thresholds must be strictly positive");
    }
    if (sirs_temp_low >= sirs_temp_high) {
        throw ValidationError("sirs_temp_low must be below sirs_temp_high");
    }
    if (sirs_min_criteria < 1 || sirs_min_criteria > 3) {
        throw ValidationError("sirs_min_criteria must be in {1,2,3}");
    }
    if (qsofa_positive_threshold < 1 || qsofa_positive_threshold > 3) {
        throw ValidationError("qsofa_positive_threshold must be in {1,2,3}");
    }
}

int sirs_count(const VitalSigns& vitals, const ProtocolConfig& cfg) {
    int count = 0;
    if (vitals.temperature_c &&
        (*vitals.temperature_c < cfg.sirs_temp_low || *vitals.temperature_c > cfg.sirs_temp_high)) {
        ++count;
    }
    if (vitals.pulse_bpm && *vitals.pulse_bpm > cfg.sirs_pulse) {
        ++count;
    }
    if (vitals.resp_rate && *vitals.resp_rate > cfg.sirs_rr) {
        ++count;
    }
    return count;
}

namespace {

std::vector<std::string> sirs_missing(const VitalSigns& v) {
    std::vector<std::string> out;
    if (!v.temperature_c) out.push_back("temperature_c");
    if (!v.pulse_bpm) out.push_back("pulse_bpm");
    if (!v.resp_rate) out.push_back("resp_rate");
    return out;
}

}  // namespace

ScreenResult screen_sirs(const VitalSigns& vitals, const ProtocolConfig& cfg) {
    ScreenResult r;
    r.protocol = Protocol::sirs;
    r.criteria_met = sirs_count(vitals, cfg);
    r.positive = r.criteria_met >= cfg.sirs_min_criteria;
    r.missing_inputs = sirs_missing(vitals);
    return r;
}

std::optional<std::string> detect_infection_source(const ConceptSet& concepts,
                                                   const ConceptDictionary& dict) {
    for (const auto& m : concepts.mentions) {
        if (m.polarity != Polarity::affirmed) continue;
        const auto* entry = dict.find_canonical(m.canonical);
        if (entry && !entry->infection_system.empty()) {
            return entry->infection_system;
        }
    }
    return std::nullopt;
}

ScreenResult screen_standard(const VitalSigns& vitals, const ConceptSet& concepts,
                             const ConceptDictionary& dict, const ProtocolConfig& cfg) {
    ScreenResult r = screen_sirs(vitals, cfg);
    r.protocol = Protocol::standard;
    r.positive = r.positive && detect_infection_source(concepts, dict).has_value();
    return r;
}

int qsofa_score(const VitalSigns& vitals, const ProtocolConfig& cfg) {
    int count = 0;
    if (vitals.resp_rate && *vitals.resp_rate >= cfg.qsofa_rr) {
        ++count;
    }
    if (vitals.sbp_mmhg && *vitals.sbp_mmhg <= cfg.qsofa_sbp) {
        ++count;
    }
    if (vitals.altered_mentation) {
        if (*vitals.altered_mentation) ++count;
    } else if (vitals.gcs_total && *vitals.gcs_total < 15) {
        ++count;
    }
    return count;
}

ScreenResult screen_qsofa(const VitalSigns& vitals, const ProtocolConfig& cfg) {
    ScreenResult r;
    r.protocol = Protocol::qsofa;
    r.criteria_met = qsofa_score(vitals, cfg);
    r.positive = r.criteria_met >= cfg.qsofa_positive_threshold;
    if (!vitals.resp_rate) r.missing_inputs.push_back("resp_rate");
    if (!vitals.sbp_mmhg) r.missing_inputs.push_back("sbp_mmhg");
    if (!vitals.altered_mentation) {
        r.missing_inputs.push_back("altered_mentation");
        if (!vitals.gcs_total) r.missing_inputs.push_back("gcs_total");
    }
    return r;
}

ScreenResult screen(Protocol protocol, const VitalSigns& vitals, const ConceptSet& concepts,
                    const ConceptDictionary& dict, const ProtocolConfig& cfg) {
    switch (protocol) {
        case Protocol::sirs: return screen_sirs(vitals, cfg);
        case Protocol::standard: return screen_standard(vitals, concepts, dict, cfg);
        default: return screen_qsofa(vitals, cfg);
    }
}

}  // namespace sepsis
