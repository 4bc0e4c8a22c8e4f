#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sepsis/cnlp.hpp"
#include "sepsis/record.hpp"

namespace sepsis {

enum class Protocol { sirs, standard, qsofa };

const char* protocol_name(Protocol p);
std::optional<Protocol> protocol_from_name(const std::string& name);

struct ProtocolConfig {
    double sirs_temp_low = 36.0;   // degrees C, strict
    double sirs_temp_high = 38.0;  // degrees C, strict
    double sirs_pulse = 90.0;      // bpm, strict
    double sirs_rr = 20.0;         // breaths/min, strict
    int sirs_min_criteria = 2;
    double qsofa_rr = 22.0;    // breaths/min, inclusive
    double qsofa_sbp = 100.0;  // mmHg, inclusive
    int qsofa_positive_threshold = 2;

    void validate() const;  // throws ValidationError
};

struct ScreenResult {
    Protocol protocol = Protocol::sirs;
    bool positive = false;
    int criteria_met = 0;
    std::vector<std::string> missing_inputs;
};

// Triage SIRS criteria count (temperature, pulse, respiratory rate; the WBC
// criterion is excluded because labs are not available at triage). Absent
// vitals never count.
int sirs_count(const VitalSigns& vitals, const ProtocolConfig& cfg);

ScreenResult screen_sirs(const VitalSigns& vitals, const ProtocolConfig& cfg);

// System of the first affirmed mention carrying an infection system; negated
// mentions never qualify.
std::optional<std::string> detect_infection_source(const ConceptSet& concepts,
                                                   const ConceptDictionary& dict);

// SIRS positive AND a documented source of infection.
ScreenResult screen_standard(const VitalSigns& vitals, const ConceptSet& concepts,
                             const ConceptDictionary& dict, const ProtocolConfig& cfg);

// RR and SBP inclusive; mentation from the altered_mentation flag, falling
// back to GCS < 15 when the flag is absent.
int qsofa_score(const VitalSigns& vitals, const ProtocolConfig& cfg);

ScreenResult screen_qsofa(const VitalSigns& vitals, const ProtocolConfig& cfg);

ScreenResult screen(Protocol protocol, const VitalSigns& vitals, const ConceptSet& concepts,
                    const ConceptDictionary& dict, const ProtocolConfig& cfg);

}  // namespace sepsis
