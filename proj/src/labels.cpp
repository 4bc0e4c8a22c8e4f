#include "sepsis/labels.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "sepsis/errors.hpp"

namespace sepsis {

const char* label_source_name(LabelSource s) {
    switch (s) {
        case LabelSource::icd10: return "icd10";
        case LabelSource::note_text: return "note_text";
        default: return "sirs_plus_infection_dx";
    }
}

namespace {

std::string normalize_code(const std::string& code) {
    std::string out;
    out.reserve(code.size());
    for (char c : code) {
        if (c == '.') continue;
        out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace

void Icd10Map::add(const std::string& prefix, SepsisTier tier) {
    prefixes_.emplace_back(normalize_code(prefix), tier);
}

Icd10Map Icd10Map::bundled_defaults() {
    Icd10Map m;
    m.add("A40", SepsisTier::sepsis);
    m.add("A41", SepsisTier::sepsis);
    m.add("P36", SepsisTier::sepsis);
    m.add("R65.20", SepsisTier::severe_sepsis);
    m.add("R65.21", SepsisTier::septic_shock);
    return m;
}

Icd10Map Icd10Map::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open ICD-10 map file: " + path);
    }
    Icd10Map m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("ICD-10 map row needs two tab-separated columns", line_no);
        }
        std::string prefix = line.substr(0, tab);
        std::string tier_str = line.substr(tab + 1);
        if (prefix == "code_prefix") continue;  // optional header
        auto tier = tier_from_name(tier_str);
        if (!tier || *tier == SepsisTier::none) {
            throw ParseError("unknown tier \"" + tier_str + "\" in ICD-10 map", line_no);
        }
        m.add(prefix, *tier);
    }
    if (m.size() == 0) {
        throw DataError("ICD-10 map file is empty: " + path);
    }
    return m;
}

SepsisTier Icd10Map::lookup(const std::string& code) const {
    std::string norm = normalize_code(code);
    size_t best_len = 0;
    SepsisTier best = SepsisTier::none;
    for (const auto& [prefix, tier] : prefixes_) {
        if (prefix.size() > norm.size()) continue;
        if (prefix.size() < best_len) continue;
        if (norm.compare(0, prefix.size(), prefix) == 0) {
            best_len = prefix.size();
            best = tier;
        }
    }
    return best;
}

SepsisLabel label_from_icd10(const std::vector<std::string>& codes, const Icd10Map& map) {
    SepsisLabel label;
    label.source = LabelSource::icd10;
    for (const auto& code : codes) {
        SepsisTier tier = map.lookup(code);
        if (static_cast<int>(tier) > static_cast<int>(label.tier)) {
            label.tier = tier;
        }
    }
    return label;
}

SepsisLabel label_from_note(const ConceptSet& note_concepts, const ConceptDictionary& dict) {
    SepsisLabel label;
    label.source = LabelSource::note_text;
    if (note_concepts.contains("septic shock", Polarity::affirmed)) {
        label.tier = SepsisTier::septic_shock;
        return label;
    }
    if (note_concepts.contains("severe sepsis", Polarity::affirmed)) {
        label.tier = SepsisTier::severe_sepsis;
        return label;
    }
    if (note_concepts.contains("sepsis", Polarity::affirmed)) {
        label.tier = SepsisTier::sepsis;
        return label;
    }
    if (note_concepts.contains("sirs", Polarity::affirmed)) {
        for (const auto& m : note_concepts.mentions) {
            if (m.polarity != Polarity::affirmed) continue;
            const auto* entry = dict.find_canonical(m.canonical);
            if (entry && !entry->infection_system.empty()) {
                label.tier = SepsisTier::sepsis;
                label.source = LabelSource::sirs_plus_infection_dx;
                return label;
            }
        }
    }
    return label;
}

SepsisLabel resolve_label(const TriageRecord& record, const ConceptDictionary& dict,
                          const Icd10Map& map) {
    if (!record.has_label_source()) {
        throw DataError("record \"" + record.id +
                        "\" has no label source (problem_list_icd10 or provider_note_dx)");
    }
    if (record.problem_list_icd10) {
        SepsisLabel from_codes = label_from_icd10(*record.problem_list_icd10, map);
        if (from_codes.is_sepsis() || !record.provider_note_dx) {
            return from_codes;
        }
    }
    ConceptSet note_concepts;
    note_concepts.mentions =
        extract_field(*record.provider_note_dx, dict, SourceField::provider_note_dx);
    return label_from_note(note_concepts, dict);
}

}  // namespace sepsis
