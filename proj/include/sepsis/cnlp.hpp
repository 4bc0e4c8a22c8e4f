#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sepsis/record.hpp"

namespace sepsis {

// Tokens are lowercase alphanumeric runs; commas, semicolons and sentence
// periods become boundary markers that scope negation.
struct Token {
    std::string text;
    bool boundary = false;

    bool operator==(const Token&) const = default;
};

std::vector<Token> tokenize(const std::string& text);

enum class Polarity { affirmed, negated };

const char* polarity_name(Polarity p);

enum class SourceField {
    chief_complaint,
    history_medical,
    history_social,
    history_family,
    history_surgical,
    medications,
    provider_note_dx,
};

const char* source_field_name(SourceField f);
// Short vocabulary prefix ("cc", "hx_medical", ...).
const char* source_field_prefix(SourceField f);

enum class DurationBin { hours, days, weeks };

const char* duration_bin_name(DurationBin b);

struct DictionaryEntry {
    std::vector<std::string> surface_tokens;  // lowercase, non-empty
    std::string surface;                      // tokens joined by single spaces
    std::string canonical;
    std::string category;
    std::string infection_system;  // empty when the term is not an infection sign
};

// Surface-term -> canonical concept map, loaded from TSV. Immutable after
// load; shared read-only across extraction threads.
class ConceptDictionary {
  public:
    static ConceptDictionary load(const std::string& path);
    static ConceptDictionary from_entries(std::vector<DictionaryEntry> entries);

    const std::vector<DictionaryEntry>& entries() const { return entries_; }
    const DictionaryEntry* find_canonical(const std::string& canonical) const;
    // Entries whose surface starts with this token, longest first.
    const std::vector<size_t>* candidates(const std::string& first_token) const;

  private:
    std::vector<DictionaryEntry> entries_;
    std::unordered_map<std::string, std::vector<size_t>> by_first_token_;
    std::unordered_map<std::string, size_t> by_canonical_;

    void build_index();
};

struct ConceptMatch {
    size_t begin = 0;  // token index range [begin, end)
    size_t end = 0;
    size_t entry = 0;  // index into dictionary entries
};

// Greedy longest-match, left-to-right, non-overlapping.
std::vector<ConceptMatch> match_concepts(const std::vector<Token>& tokens,
                                         const ConceptDictionary& dict);

struct ConceptMention {
    std::string canonical;
    Polarity polarity = Polarity::affirmed;
    SourceField source_field = SourceField::chief_complaint;
    size_t span_begin = 0;
    size_t span_end = 0;
    std::optional<DurationBin> duration_bin;

    bool operator==(const ConceptMention&) const = default;
};

// NegEx-style trigger window: a match is negated iff a trigger occurs within
// the 4 tokens preceding it with no boundary marker in between.
std::vector<ConceptMention> apply_negation(const std::vector<Token>& tokens,
                                           const std::vector<ConceptMatch>& matches,
                                           const ConceptDictionary& dict,
                                           SourceField field);

std::string normalize_concept(const DictionaryEntry& entry);

// First (number, unit) or ("x", number, unit) pattern, unit in hours/days/weeks.
std::optional<DurationBin> extract_duration(const std::vector<Token>& tokens);

// Polarized concepts for one record, deduplicated by (canonical, polarity,
// source_field).
struct ConceptSet {
    std::vector<ConceptMention> mentions;

    bool contains(const std::string& canonical, Polarity polarity) const;
};

// Runs the pipeline over a single free-text field.
std::vector<ConceptMention> extract_field(const std::string& text, const ConceptDictionary& dict,
                                          SourceField field);

// Chief complaint plus all five history fields; the chief-complaint duration
// bin is attached to affirmed chief-complaint mentions.
ConceptSet extract_all(const TriageRecord& record, const ConceptDictionary& dict);

}  // namespace sepsis
