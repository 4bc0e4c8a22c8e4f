#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sepsis/cleaning.hpp"

namespace sepsis {

enum class Sex { male, female, other };

const char* sex_name(Sex s);

// Severity tiers; all non-none tiers count as "sepsis" for the binary label.
enum class SepsisTier { none = 0, sepsis = 1, severe_sepsis = 2, septic_shock = 3 };

const char* tier_name(SepsisTier t);
std::optional<SepsisTier> tier_from_name(const std::string& name);

struct VitalSigns {
    std::optional<double> temperature_c;
    std::optional<double> pulse_bpm;
    std::optional<double> resp_rate;
    std::optional<double> sbp_mmhg;
    std::optional<double> dbp_mmhg;
    std::optional<double> spo2_pct;
    std::optional<int> gcs_total;
    std::optional<int> pain_0_10;
    std::optional<bool> altered_mentation;

    bool operator==(const VitalSigns&) const = default;
};

// ISO-8601 UTC instant ("2021-03-14T09:26:00Z"). The raw text round-trips
// verbatim; parsed fields back month bucketing.
struct Timestamp {
    std::string raw;
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;

    static Timestamp parse(const std::string& s);  // throws DataError
    std::string month_key() const;                 // "YYYY-MM"

    bool operator==(const Timestamp& o) const { return raw == o.raw; }
};

// One ED triage encounter. Immutable after parse; safe to share across threads.
struct TriageRecord {
    std::string id;
    std::string site;
    Timestamp arrival_time;
    double age_years = 0.0;
    Sex sex = Sex::other;
    VitalSigns vitals;
    std::optional<std::string> arrival_mode;
    std::string chief_complaint;
    std::optional<std::string> history_medical;
    std::optional<std::string> history_social;
    std::optional<std::string> history_family;
    std::optional<std::string> history_surgical;
    std::optional<std::string> medications;
    std::optional<std::vector<std::string>> problem_list_icd10;
    std::optional<std::string> provider_note_dx;
    std::optional<bool> covid_diagnosed;

    bool has_label_source() const {
        return problem_list_icd10.has_value() || provider_note_dx.has_value();
    }

    bool operator==(const TriageRecord&) const = default;
};

// Parses one cohort line. Unknown fields are ignored; out-of-window vitals
// become absent per the cleaning table. line_no is used in error messages.
TriageRecord parse_record(const std::string& line, const CleaningTable& table, int line_no = 0);

std::string serialize_record(const TriageRecord& r);

// Line-delimited cohort file. Enforces non-empty unique ids; output order
// matches input order.
std::vector<TriageRecord> read_cohort_file(const std::string& path, const CleaningTable& table);
void write_cohort_file(const std::string& path, const std::vector<TriageRecord>& records);

}  // namespace sepsis
