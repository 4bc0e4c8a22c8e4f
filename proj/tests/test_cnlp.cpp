#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sepsis/cnlp.hpp"
#include "sepsis/errors.hpp"
#include "sepsis/rng.hpp"

using namespace sepsis;

namespace {

std::vector<std::string> texts(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    for (const auto& t : tokens) out.push_back(t.boundary ? "BOUND" : t.text);
    return out;
}

ConceptDictionary bundled() {
    return ConceptDictionary::load(std::string(SEPSCREEN_DATA_DIR) + "/concept_dictionary.tsv");
}

}  // namespace

TEST_CASE("tokenize: punctuation, boundaries, x-counts") {
    CHECK(texts(tokenize("Denies fever, c/o cough x 3 days")) ==
          std::vector<std::string>{"denies", "fever", "BOUND", "c", "o", "cough", "x", "3", "days"});
    CHECK(tokenize("").empty());
    CHECK(texts(tokenize("SOB")) == std::vector<std::string>{"sob"});
    CHECK(texts(tokenize("cough x3 days")) == std::vector<std::string>{"cough", "x", "3", "days"});
    CHECK(texts(tokenize("temp 38.5; better")) ==
          std::vector<std::string>{"temp", "38.5", "BOUND", "better"});
    CHECK(texts(tokenize("covid-19 test")) == std::vector<std::string>{"covid-19", "test"});
    CHECK(texts(tokenize("end of sentence. next")) ==
          std::vector<std::string>{"end", "of", "sentence", "BOUND", "next"});
}

TEST_CASE("dictionary load validates closure and duplicates") {
    auto dict = bundled();
    CHECK(dict.entries().size() > 100);
    const auto* cough = dict.find_canonical("cough");
    REQUIRE(cough != nullptr);
    CHECK(cough->infection_system == "Respiratory");
    const auto* fever = dict.find_canonical("fever");
    REQUIRE(fever != nullptr);
    CHECK(fever->infection_system.empty());

    std::vector<DictionaryEntry> dup = {
        {{"cough"}, "cough", "cough", "x", ""},
        {{"cough"}, "cough", "cough", "x", ""},
    };
    CHECK_THROWS_AS(ConceptDictionary::from_entries(dup), DataError);

    std::vector<DictionaryEntry> open = {{{"uti"}, "uti", "urinary tract infection", "x", ""}};
    CHECK_THROWS_AS(ConceptDictionary::from_entries(open), DataError);  // canonical not closed
}

TEST_CASE("match_concepts: greedy longest match, left to right, non-overlapping") {
    auto dict = bundled();
    auto toks = tokenize("radiating chest pain");
    auto matches = match_concepts(toks, dict);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].begin == 0);
    CHECK(matches[0].end == 3);
    CHECK(dict.entries()[matches[0].entry].canonical == "chest pain");

    matches = match_concepts(tokenize("chest pain"), dict);
    REQUIRE(matches.size() == 1);
    CHECK(dict.entries()[matches[0].entry].surface == "chest pain");

    CHECK(match_concepts(tokenize("chess pain"), dict).empty());  // no fuzzy matching
}

TEST_CASE("longest-match dominance: a consumed token cannot start another match") {
    auto dict = bundled();
    auto mentions = extract_field("periorbital cellulitis", dict, SourceField::chief_complaint);
    REQUIRE(mentions.size() == 1);
    CHECK(mentions[0].canonical == "periorbital cellulitis");

    // Property over the dictionary: any surface that extends another must win
    // at its own start position.
    int checked = 0;
    for (const auto& entry : dict.entries()) {
        if (entry.surface_tokens.size() < 2) continue;
        std::string text = entry.surface + " and more text";
        auto matches = match_concepts(tokenize(text), dict);
        REQUIRE(!matches.empty());
        CHECK(matches[0].begin == 0);
        CHECK(matches[0].end == entry.surface_tokens.size());
        ++checked;
    }
    CHECK(checked > 20);
}

TEST_CASE("apply_negation: trigger window and boundary blocking") {
    auto dict = bundled();
    auto polarity_of = [&](const std::string& text, const std::string& canonical) {
        for (const auto& m : extract_field(text, dict, SourceField::chief_complaint)) {
            if (m.canonical == canonical) return m.polarity;
        }
        FAIL("canonical not extracted: ", canonical);
        return Polarity::affirmed;
    };
    CHECK(polarity_of("denies fever", "fever") == Polarity::negated);
    CHECK(polarity_of("no cough, has fever", "cough") == Polarity::negated);
    CHECK(polarity_of("no cough, has fever", "fever") == Polarity::affirmed);
    CHECK(polarity_of("fever", "fever") == Polarity::affirmed);
    CHECK(polarity_of("without recent productive cough", "cough") == Polarity::negated);
    // Five tokens between trigger and match: outside the 4-token window.
    CHECK(polarity_of("no one knew when it started fever", "fever") == Polarity::affirmed);
    // Exactly four back stays in scope.
    CHECK(polarity_of("denies a b c fever", "fever") == Polarity::negated);
}

TEST_CASE("extract_duration: first number-unit pattern wins") {
    auto bin = [](const std::string& text) { return extract_duration(tokenize(text)); };
    CHECK(bin("cough x 3 days") == DurationBin::days);
    CHECK(bin("fever for 2 hours") == DurationBin::hours);
    CHECK(bin("worse x2 wks") == DurationBin::weeks);
    CHECK(bin("cough") == std::nullopt);
    CHECK(bin("3 days then 2 hours") == DurationBin::days);
    CHECK(bin("lasting days") == std::nullopt);  // unit without a count
}

TEST_CASE("extract_all composes fields, polarity, and duration") {
    auto dict = bundled();
    TriageRecord r;
    r.chief_complaint = "denies fever, c/o cough x 3 days";
    r.history_medical = "diabetes";
    auto set = extract_all(r, dict);

    REQUIRE(set.mentions.size() == 3);
    bool saw_cough = false, saw_fever = false, saw_dm = false;
    for (const auto& m : set.mentions) {
        if (m.canonical == "cough") {
            saw_cough = true;
            CHECK(m.polarity == Polarity::affirmed);
            CHECK(m.source_field == SourceField::chief_complaint);
            CHECK(m.duration_bin == DurationBin::days);
        }
        if (m.canonical == "fever") {
            saw_fever = true;
            CHECK(m.polarity == Polarity::negated);
            CHECK(!m.duration_bin.has_value());
        }
        if (m.canonical == "diabetes mellitus") {
            saw_dm = true;
            CHECK(m.source_field == SourceField::history_medical);
        }
    }
    CHECK(saw_cough);
    CHECK(saw_fever);
    CHECK(saw_dm);

    TriageRecord empty;
    CHECK(extract_all(empty, dict).mentions.empty());
}

TEST_CASE("extraction is deterministic") {
    auto dict = bundled();
    TriageRecord r;
    r.chief_complaint = "no chills, fever x 2 days, productive cough";
    r.history_social = "smoker, denies alcohol abuse";
    auto a = extract_all(r, dict);
    auto b = extract_all(r, dict);
    REQUIRE(a.mentions.size() == b.mentions.size());
    for (size_t i = 0; i < a.mentions.size(); ++i) {
        CHECK(a.mentions[i] == b.mentions[i]);
    }
}

TEST_CASE("mentions deduplicate by canonical, polarity, and field") {
    auto dict = bundled();
    TriageRecord r;
    r.chief_complaint = "cough, productive cough";  // same canonical twice
    auto set = extract_all(r, dict);
    int coughs = 0;
    for (const auto& m : set.mentions) {
        if (m.canonical == "cough") ++coughs;
    }
    CHECK(coughs == 1);
}
