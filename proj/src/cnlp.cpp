#include "sepsis/cnlp.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "sepsis/errors.hpp"

namespace sepsis {

namespace {

bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool is_digit(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

void flush_token(std::string& cur, std::vector<Token>& out) {
    if (cur.empty()) return;
    // Clinical shorthand "x3" means "times 3": keep "x" and the count apart.
    if (cur.size() >= 2 && cur[0] == 'x' && all_digits(cur.substr(1))) {
        out.push_back({"x", false});
        out.push_back({cur.substr(1), false});
    } else {
        out.push_back({cur, false});
    }
    cur.clear();
}

}  // namespace

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> out;
    std::string cur;
    const size_t n = text.size();
    for (size_t i = 0; i < n; ++i) {
        char c = text[i];
        if (is_alnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            continue;
        }
        if (c == '-' && !cur.empty() && i + 1 < n && is_alnum(text[i + 1])) {
            cur.push_back('-');  // intra-word hyphen
            continue;
        }
        if (c == '.' && !cur.empty() && is_digit(cur.back()) && i + 1 < n && is_digit(text[i + 1])) {
            cur.push_back('.');  // decimal point
            continue;
        }
        flush_token(cur, out);
        if (c == ',' || c == ';' || c == '.') {
            out.push_back({"", true});
        }
    }
    flush_token(cur, out);
    return out;
}

const char* polarity_name(Polarity p) {
    return p == Polarity::affirmed ? "affirmed" : "negated";
}

const char* source_field_name(SourceField f) {
    switch (f) {
        case SourceField::chief_complaint: return "chief_complaint";
        case SourceField::history_medical: return "history_medical";
        case SourceField::history_social: return "history_social";
        case SourceField::history_family: return "history_family";
        case SourceField::history_surgical: return "history_surgical";
        case SourceField::medications: return "medications";
        default: return "provider_note_dx";
    }
}

const char* source_field_prefix(SourceField f) {
    switch (f) {
        case SourceField::chief_complaint: return "cc";
        case SourceField::history_medical: return "hx_medical";
        case SourceField::history_social: return "hx_social";
        case SourceField::history_family: return "hx_family";
        case SourceField::history_surgical: return "hx_surgical";
        case SourceField::medications: return "meds";
        default: return "note";
    }
}

const char* duration_bin_name(DurationBin b) {
    switch (b) {
        case DurationBin::hours: return "hours";
        case DurationBin::days: return "days";
        default: return "weeks";
    }
}

void ConceptDictionary::build_index() {
    by_first_token_.clear();
    by_canonical_.clear();
    for (size_t i = 0; i < entries_.size(); ++i) {
        by_first_token_[entries_[i].surface_tokens.front()].push_back(i);
        if (entries_[i].surface == entries_[i].canonical) {
            by_canonical_.emplace(entries_[i].canonical, i);
        }
    }
    // Longest surface first; ties by load order.
    for (auto& [tok, idxs] : by_first_token_) {
        std::stable_sort(idxs.begin(), idxs.end(), [this](size_t a, size_t b) {
            return entries_[a].surface_tokens.size() > entries_[b].surface_tokens.size();
        });
    }
}

ConceptDictionary ConceptDictionary::from_entries(std::vector<DictionaryEntry> entries) {
    ConceptDictionary dict;
    dict.entries_ = std::move(entries);
    std::unordered_map<std::string, int> surfaces;
    for (auto& e : dict.entries_) {
        if (e.surface_tokens.empty()) {
            throw DataError("dictionary entry with empty surface term");
        }
        if (++surfaces[e.surface] > 1) {
            throw DataError("duplicate dictionary surface term: \"" + e.surface + "\"");
        }
    }
    dict.build_index();
    // Closure under normalization: every canonical is its own surface term.
    for (const auto& e : dict.entries_) {
        if (dict.by_canonical_.find(e.canonical) == dict.by_canonical_.end()) {
            throw DataError("dictionary canonical \"" + e.canonical +
                            "\" has no surface entry of its own");
        }
    }
    return dict;
}

ConceptDictionary ConceptDictionary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dictionary file: " + path);
    }
    std::vector<DictionaryEntry> entries;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        size_t start = 0;
        while (true) {
            size_t tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (!header_seen) {
            header_seen = true;
            if (cols.empty() || cols[0] != "surface_term") {
                throw ParseError("dictionary header must start with \"surface_term\"", line_no);
            }
            continue;
        }
        if (cols.size() < 3) {
            throw ParseError("dictionary row needs at least 3 columns", line_no);
        }
        DictionaryEntry e;
        auto toks = tokenize(cols[0]);
        for (const auto& t : toks) {
            if (t.boundary) {
                throw ParseError("surface term \"" + cols[0] + "\" contains a boundary character",
                                 line_no);
            }
            e.surface_tokens.push_back(t.text);
        }
        if (e.surface_tokens.empty()) {
            throw ParseError("empty surface term", line_no);
        }
        for (size_t i = 0; i < e.surface_tokens.size(); ++i) {
            if (i) e.surface += ' ';
            e.surface += e.surface_tokens[i];
        }
        e.canonical = cols[1];
        e.category = cols[2];
        e.infection_system = cols.size() > 3 ? cols[3] : "";
        entries.push_back(std::move(e));
    }
    return from_entries(std::move(entries));
}

const DictionaryEntry* ConceptDictionary::find_canonical(const std::string& canonical) const {
    auto it = by_canonical_.find(canonical);
    return it == by_canonical_.end() ? nullptr : &entries_[it->second];
}

const std::vector<size_t>* ConceptDictionary::candidates(const std::string& first_token) const {
    auto it = by_first_token_.find(first_token);
    return it == by_first_token_.end() ? nullptr : &it->second;
}

std::vector<ConceptMatch> match_concepts(const std::vector<Token>& tokens,
                                         const ConceptDictionary& dict) {
    std::vector<ConceptMatch> matches;
    const size_t n = tokens.size();
    size_t i = 0;
    while (i < n) {
        if (tokens[i].boundary) {
            ++i;
            continue;
        }
        const auto* cands = dict.candidates(tokens[i].text);
        size_t advance = 1;
        if (cands) {
            for (size_t idx : *cands) {  // longest first
                const auto& surf = dict.entries()[idx].surface_tokens;
                if (i + surf.size() > n) continue;
                bool ok = true;
                for (size_t k = 0; k < surf.size(); ++k) {
                    if (tokens[i + k].boundary || tokens[i + k].text != surf[k]) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    matches.push_back({i, i + surf.size(), idx});
                    advance = surf.size();
                    break;
                }
            }
        }
        i += advance;
    }
    return matches;
}

namespace {

const char* kNegationTriggers[] = {"no", "denies", "denied", "without", "negative", "neg", "non"};
constexpr size_t kNegationWindow = 4;

bool is_trigger(const std::string& t) {
    for (const char* s : kNegationTriggers) {
        if (t == s) return true;
    }
    return false;
}

}  // namespace

std::vector<ConceptMention> apply_negation(const std::vector<Token>& tokens,
                                           const std::vector<ConceptMatch>& matches,
                                           const ConceptDictionary& dict,
                                           SourceField field) {
    std::vector<ConceptMention> mentions;
    mentions.reserve(matches.size());
    for (const auto& m : matches) {
        Polarity pol = Polarity::affirmed;
        for (size_t back = 1; back <= kNegationWindow && back <= m.begin; ++back) {
            const Token& t = tokens[m.begin - back];
            if (t.boundary) break;  // negation scope never crosses a boundary
            if (is_trigger(t.text)) {
                pol = Polarity::negated;
                break;
            }
        }
        mentions.push_back({dict.entries()[m.entry].canonical, pol, field, m.begin, m.end,
                            std::nullopt});
    }
    return mentions;
}

std::string normalize_concept(const DictionaryEntry& entry) {
    return entry.canonical;
}

std::optional<DurationBin> extract_duration(const std::vector<Token>& tokens) {
    auto unit_bin = [](const std::string& t) -> std::optional<DurationBin> {
        if (t == "hour" || t == "hours" || t == "hr" || t == "hrs") return DurationBin::hours;
        if (t == "day" || t == "days") return DurationBin::days;
        if (t == "week" || t == "weeks" || t == "wk" || t == "wks") return DurationBin::weeks;
        return std::nullopt;
    };
    auto is_number = [](const Token& t) {
        if (t.boundary || t.text.empty()) return false;
        bool digit_seen = false;
        for (char c : t.text) {
            if (is_digit(c)) {
                digit_seen = true;
            } else if (c != '.') {
                return false;
            }
        }
        return digit_seen;
    };
    for (size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (!is_number(tokens[i])) continue;
        if (tokens[i + 1].boundary) continue;
        if (auto bin = unit_bin(tokens[i + 1].text)) return bin;
    }
    return std::nullopt;
}

bool ConceptSet::contains(const std::string& canonical, Polarity polarity) const {
    for (const auto& m : mentions) {
        if (m.polarity == polarity && m.canonical == canonical) return true;
    }
    return false;
}

std::vector<ConceptMention> extract_field(const std::string& text, const ConceptDictionary& dict,
                                          SourceField field) {
    auto tokens = tokenize(text);
    auto matches = match_concepts(tokens, dict);
    return apply_negation(tokens, matches, dict, field);
}

ConceptSet extract_all(const TriageRecord& record, const ConceptDictionary& dict) {
    ConceptSet set;
    auto add = [&set](std::vector<ConceptMention>&& ms) {
        for (auto& m : ms) {
            bool dup = false;
            for (const auto& existing : set.mentions) {
                if (existing.canonical == m.canonical && existing.polarity == m.polarity &&
                    existing.source_field == m.source_field) {
                    dup = true;
                    break;
                }
            }
            if (!dup) set.mentions.push_back(std::move(m));
        }
    };

    {
        auto tokens = tokenize(record.chief_complaint);
        auto matches = match_concepts(tokens, dict);
        auto mentions = apply_negation(tokens, matches, dict, SourceField::chief_complaint);
        auto bin = extract_duration(tokens);
        if (bin) {
            for (auto& m : mentions) {
                if (m.polarity == Polarity::affirmed) m.duration_bin = bin;
            }
        }
        add(std::move(mentions));
    }

    const std::pair<const std::optional<std::string>*, SourceField> history_fields[] = {
        {&record.history_medical, SourceField::history_medical},
        {&record.history_social, SourceField::history_social},
        {&record.history_family, SourceField::history_family},
        {&record.history_surgical, SourceField::history_surgical},
        {&record.medications, SourceField::medications},
    };
    for (const auto& [text, field] : history_fields) {
        if (text->has_value()) {
            add(extract_field(**text, dict, field));
        }
    }
    return set;
}

}  // namespace sepsis
