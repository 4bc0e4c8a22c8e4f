#include "sepsis/record.hpp"

#include <cstdio>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "sepsis/errors.hpp"

namespace sepsis {

using json = nlohmann::ordered_json;

const char* sex_name(Sex s) {
    switch (s) {
        case Sex::male: return "male";
        case Sex::female: return "female";
        default: return "other";
    }
}

const char* tier_name(SepsisTier t) {
    switch (t) {
        case SepsisTier::sepsis: return "sepsis";
        case SepsisTier::severe_sepsis: return "severe_sepsis";
        case SepsisTier::septic_shock: return "septic_shock";
        default: return "none";
    }
}

std::optional<SepsisTier> tier_from_name(const std::string& name) {
    if (name == "none") return SepsisTier::none;
    if (name == "sepsis") return SepsisTier::sepsis;
    if (name == "severe_sepsis") return SepsisTier::severe_sepsis;
    if (name == "septic_shock") return SepsisTier::septic_shock;
    return std::nullopt;
}

Timestamp Timestamp::parse(const std::string& s) {
    Timestamp t;
    char tail = 0;
    int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &t.year, &t.month, &t.day,
                        &t.hour, &t.minute, &t.second, &tail);
    bool ok = (n == 7 && tail == 'Z' && s.size() == 20);
    ok = ok && t.year >= 1900 && t.year <= 9999 && t.month >= 1 && t.month <= 12 &&
         t.day >= 1 && t.day <= 31 && t.hour >= 0 && t.hour <= 23 && t.minute >= 0 &&
         t.minute <= 59 && t.second >= 0 && t.second <= 60;
    if (!ok) {
        throw DataError("invalid ISO-8601 UTC timestamp: \"" + s + "\"");
    }
    t.raw = s;
    return t;
}

std::string Timestamp::month_key() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

namespace {

std::optional<double> get_number(const json& j, const char* key, int line_no) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw ParseError(std::string("field \"") + key + "\" must be a number", line_no);
    return it->get<double>();
}

std::optional<std::string> get_string(const json& j, const char* key, int line_no) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(std::string("field \"") + key + "\" must be a string", line_no);
    return it->get<std::string>();
}

std::optional<bool> get_bool(const json& j, const char* key, int line_no) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_boolean()) throw ParseError(std::string("field \"") + key + "\" must be a boolean", line_no);
    return it->get<bool>();
}

std::optional<double> cleaned(NumericField f, std::optional<double> v, const CleaningTable& t) {
    if (!v) return std::nullopt;
    return clean_numeric(f, *v, t);
}

std::optional<int> cleaned_int(NumericField f, std::optional<double> v, const CleaningTable& t) {
    auto c = cleaned(f, v, t);
    if (!c) return std::nullopt;
    return static_cast<int>(*c);
}

}  // namespace

TriageRecord parse_record(const std::string& line, const CleaningTable& table, int line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
    if (!j.is_object()) {
        throw ParseError("record line must be an object", line_no);
    }

    TriageRecord r;
    auto id = get_string(j, "id", line_no);
    if (!id || id->empty()) throw ParseError("field \"id\" is required and must be non-empty", line_no);
    r.id = *id;
    r.site = get_string(j, "site", line_no).value_or("");

    auto ts = get_string(j, "arrival_time", line_no);
    if (!ts) throw ParseError("field \"arrival_time\" is required", line_no);
    try {
        r.arrival_time = Timestamp::parse(*ts);
    } catch (const DataError& e) {
        throw ParseError(e.what(), line_no);
    }

    auto age = get_number(j, "age_years", line_no);
    if (!age || *age < 0) throw ParseError("field \"age_years\" is required and must be >= 0", line_no);
    r.age_years = *age;

    auto sex = get_string(j, "sex", line_no);
    if (!sex) throw ParseError("field \"sex\" is required", line_no);
    if (*sex == "male") {
        r.sex = Sex::male;
    } else if (*sex == "female") {
        r.sex = Sex::female;
    } else if (*sex == "other" || *sex == "unknown") {
        r.sex = Sex::other;
    } else {
        throw ParseError("field \"sex\": value \"" + *sex + "\" outside enum {male, female, other}",
                         line_no);
    }

    r.vitals.temperature_c = cleaned(NumericField::temperature_c, get_number(j, "vitals.temperature_c", line_no), table);
    r.vitals.pulse_bpm = cleaned(NumericField::pulse_bpm, get_number(j, "vitals.pulse_bpm", line_no), table);
    r.vitals.resp_rate = cleaned(NumericField::resp_rate, get_number(j, "vitals.resp_rate", line_no), table);
    r.vitals.sbp_mmhg = cleaned(NumericField::sbp_mmhg, get_number(j, "vitals.sbp_mmhg", line_no), table);
    r.vitals.dbp_mmhg = cleaned(NumericField::dbp_mmhg, get_number(j, "vitals.dbp_mmhg", line_no), table);
    r.vitals.spo2_pct = cleaned(NumericField::spo2_pct, get_number(j, "vitals.spo2_pct", line_no), table);
    r.vitals.gcs_total = cleaned_int(NumericField::gcs_total, get_number(j, "vitals.gcs_total", line_no), table);
    r.vitals.pain_0_10 = cleaned_int(NumericField::pain_0_10, get_number(j, "vitals.pain_0_10", line_no), table);
    r.vitals.altered_mentation = get_bool(j, "vitals.altered_mentation", line_no);

    r.arrival_mode = get_string(j, "arrival_mode", line_no);
    r.chief_complaint = get_string(j, "chief_complaint", line_no).value_or("");
    r.history_medical = get_string(j, "history_medical", line_no);
    r.history_social = get_string(j, "history_social", line_no);
    r.history_family = get_string(j, "history_family", line_no);
    r.history_surgical = get_string(j, "history_surgical", line_no);
    r.medications = get_string(j, "medications", line_no);

    auto codes = j.find("problem_list_icd10");
    if (codes != j.end() && !codes->is_null()) {
        if (!codes->is_array()) {
            throw ParseError("field \"problem_list_icd10\" must be an array of strings", line_no);
        }
        std::vector<std::string> list;
        for (const auto& c : *codes) {
            if (!c.is_string()) {
                throw ParseError("field \"problem_list_icd10\" must be an array of strings", line_no);
            }
            list.push_back(c.get<std::string>());
        }
        r.problem_list_icd10 = std::move(list);
    }

    r.provider_note_dx = get_string(j, "provider_note_dx", line_no);
    r.covid_diagnosed = get_bool(j, "covid_diagnosed", line_no);
    return r;
}

std::string serialize_record(const TriageRecord& r) {
    json j = json::object();
    j["id"] = r.id;
    j["site"] = r.site;
    j["arrival_time"] = r.arrival_time.raw;
    j["age_years"] = r.age_years;
    j["sex"] = sex_name(r.sex);
    if (r.vitals.temperature_c) j["vitals.temperature_c"] = *r.vitals.temperature_c;
    if (r.vitals.pulse_bpm) j["vitals.pulse_bpm"] = *r.vitals.pulse_bpm;
    if (r.vitals.resp_rate) j["vitals.resp_rate"] = *r.vitals.resp_rate;
    if (r.vitals.sbp_mmhg) j["vitals.sbp_mmhg"] = *r.vitals.sbp_mmhg;
    if (r.vitals.dbp_mmhg) j["vitals.dbp_mmhg"] = *r.vitals.dbp_mmhg;
    if (r.vitals.spo2_pct) j["vitals.spo2_pct"] = *r.vitals.spo2_pct;
    if (r.vitals.gcs_total) j["vitals.gcs_total"] = *r.vitals.gcs_total;
    if (r.vitals.pain_0_10) j["vitals.pain_0_10"] = *r.vitals.pain_0_10;
    if (r.vitals.altered_mentation) j["vitals.altered_mentation"] = *r.vitals.altered_mentation;
    if (r.arrival_mode) j["arrival_mode"] = *r.arrival_mode;
    j["chief_complaint"] = r.chief_complaint;
    if (r.history_medical) j["history_medical"] = *r.history_medical;
    if (r.history_social) j["history_social"] = *r.history_social;
    if (r.history_family) j["history_family"] = *r.history_family;
    if (r.history_surgical) j["history_surgical"] = *r.history_surgical;
    if (r.medications) j["medications"] = *r.medications;
    if (r.problem_list_icd10) j["problem_list_icd10"] = *r.problem_list_icd10;
    if (r.provider_note_dx) j["provider_note_dx"] = *r.provider_note_dx;
    if (r.covid_diagnosed) j["covid_diagnosed"] = *r.covid_diagnosed;
    return j.dump();
}

std::vector<TriageRecord> read_cohort_file(const std::string& path, const CleaningTable& table) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open cohort file: " + path);
    }
    std::vector<TriageRecord> records;
    std::unordered_set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        TriageRecord r = parse_record(line, table, line_no);
        if (!seen.insert(r.id).second) {
            throw ParseError("duplicate record id \"" + r.id + "\"", line_no);
        }
        records.push_back(std::move(r));
    }
    return records;
}

void write_cohort_file(const std::string& path, const std::vector<TriageRecord>& records) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write cohort file: " + path);
    }
    for (const auto& r : records) {
        out << serialize_record(r) << '\n';
    }
}

}  // namespace sepsis
