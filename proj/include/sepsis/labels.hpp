#pragma once

#include <string>
#include <vector>

#include "sepsis/cnlp.hpp"
#include "sepsis/record.hpp"

namespace sepsis {

enum class LabelSource { icd10, note_text, sirs_plus_infection_dx };

const char* label_source_name(LabelSource s);

struct SepsisLabel {
    SepsisTier tier = SepsisTier::none;
    LabelSource source = LabelSource::icd10;

    bool is_sepsis() const { return tier != SepsisTier::none; }
    bool operator==(const SepsisLabel&) const = default;
};

// Code-prefix -> tier map. Codes are normalized to uppercase with dots
// stripped before prefix matching; the longest matching prefix wins.
class Icd10Map {
  public:
    static Icd10Map load(const std::string& path);  // two-column TSV
    static Icd10Map bundled_defaults();

    SepsisTier lookup(const std::string& code) const;
    size_t size() const { return prefixes_.size(); }

  private:
    std::vector<std::pair<std::string, SepsisTier>> prefixes_;  // normalized

    void add(const std::string& prefix, SepsisTier tier);
};

// Highest tier over all codes; unknown codes are ignored.
SepsisLabel label_from_icd10(const std::vector<std::string>& codes, const Icd10Map& map);

// Tier from affirmed diagnosis concepts: septic shock > severe sepsis >
// sepsis; an affirmed "sirs" concept co-occurring with an affirmed
// infection-sign concept also yields sepsis (source sirs_plus_infection_dx).
SepsisLabel label_from_note(const ConceptSet& note_concepts, const ConceptDictionary& dict);

// ICD-10 precedence: the ICD channel decides when it yields a tier; note text
// is consulted when codes are absent or map to none. Throws DataError when the
// record has no label source at all.
SepsisLabel resolve_label(const TriageRecord& record, const ConceptDictionary& dict,
                          const Icd10Map& map);

}  // namespace sepsis
