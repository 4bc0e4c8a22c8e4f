#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "sepsis/errors.hpp"
#include "sepsis/protocols.hpp"
#include "sepsis/rng.hpp"

using namespace sepsis;

namespace {

const ProtocolConfig kCfg;

VitalSigns vit(std::optional<double> temp, std::optional<double> pulse,
               std::optional<double> rr) {
    VitalSigns v;
    v.temperature_c = temp;
    v.pulse_bpm = pulse;
    v.resp_rate = rr;
    return v;
}

ConceptDictionary mini_dict() {
    std::vector<DictionaryEntry> entries = {
        {{"cough"}, "cough", "cough", "infection_sign", "Respiratory"},
        {{"uti"}, "uti", "uti", "infection_sign", "GI/GU"},
        {{"cellulitis"}, "cellulitis", "cellulitis", "infection_sign", "Skin"},
        {{"fever"}, "fever", "fever", "symptom", ""},
    };
    return ConceptDictionary::from_entries(std::move(entries));
}

ConceptSet concepts_with(const std::string& canonical, Polarity pol) {
    ConceptSet set;
    set.mentions.push_back({canonical, pol, SourceField::chief_complaint, 0, 1, std::nullopt});
    return set;
}

}  // namespace

TEST_CASE("sirs_count uses strict thresholds and ignores absent vitals") {
    CHECK(sirs_count(vit(38.5, 95, 18), kCfg) == 2);
    CHECK(sirs_count(vit(38.0, 90, 20), kCfg) == 0);  // boundary values do not trigger
    CHECK(sirs_count(vit(std::nullopt, std::nullopt, std::nullopt), kCfg) == 0);
    CHECK(sirs_count(vit(35.9, 91, 21), kCfg) == 3);
    CHECK(sirs_count(vit(std::nullopt, 120, std::nullopt), kCfg) == 1);
}

TEST_CASE("screen_sirs positivity and missing input audit") {
    auto r = screen_sirs(vit(38.5, 95, std::nullopt), kCfg);
    CHECK(r.positive);
    CHECK(r.criteria_met == 2);
    CHECK(r.missing_inputs == std::vector<std::string>{"resp_rate"});

    CHECK(!screen_sirs(vit(38.5, 85, 18), kCfg).positive);
    CHECK(screen_sirs(vit(39.0, 95, 22), kCfg).positive);
}

TEST_CASE("detect_infection_source needs an affirmed infection-sign mention") {
    auto dict = mini_dict();
    CHECK(detect_infection_source(concepts_with("cough", Polarity::affirmed), dict) ==
          "Respiratory");
    CHECK(!detect_infection_source(concepts_with("cough", Polarity::negated), dict).has_value());
    CHECK(detect_infection_source(concepts_with("cellulitis", Polarity::affirmed), dict) == "Skin");
    CHECK(!detect_infection_source(concepts_with("fever", Polarity::affirmed), dict).has_value());
    CHECK(!detect_infection_source(ConceptSet{}, dict).has_value());
}

TEST_CASE("screen_standard is the SIRS-and-source conjunction") {
    auto dict = mini_dict();
    auto affirmed = concepts_with("cough", Polarity::affirmed);
    CHECK(screen_standard(vit(38.5, 95, 18), affirmed, dict, kCfg).positive);
    CHECK(!screen_standard(vit(38.5, 95, 18), ConceptSet{}, dict, kCfg).positive);
    CHECK(!screen_standard(vit(38.5, 85, 18), concepts_with("uti", Polarity::affirmed), dict, kCfg)
               .positive);
}

TEST_CASE("qsofa_score: inclusive thresholds and the GCS fallback") {
    VitalSigns v;
    v.resp_rate = 22;
    v.sbp_mmhg = 100;
    v.altered_mentation = true;
    CHECK(qsofa_score(v, kCfg) == 3);

    v = VitalSigns{};
    v.resp_rate = 21;
    v.sbp_mmhg = 101;
    v.altered_mentation = false;
    CHECK(qsofa_score(v, kCfg) == 0);

    v = VitalSigns{};
    v.resp_rate = 24;
    v.sbp_mmhg = 120;
    v.altered_mentation = false;
    CHECK(qsofa_score(v, kCfg) == 1);

    // Flag absent: GCS < 15 counts as altered mentation.
    v = VitalSigns{};
    v.gcs_total = 12;
    CHECK(qsofa_score(v, kCfg) == 1);
    v.gcs_total = 15;
    CHECK(qsofa_score(v, kCfg) == 0);
    // Flag present and false: GCS is not consulted.
    v.altered_mentation = false;
    v.gcs_total = 8;
    CHECK(qsofa_score(v, kCfg) == 0);
}

TEST_CASE("screen_qsofa threshold default and conjunctive reading") {
    VitalSigns v;
    v.resp_rate = 24;
    v.sbp_mmhg = 95;
    v.altered_mentation = false;
    auto r = screen_qsofa(v, kCfg);
    CHECK(r.criteria_met == 2);
    CHECK(r.positive);

    ProtocolConfig strict = kCfg;
    strict.qsofa_positive_threshold = 3;
    CHECK(!screen_qsofa(v, strict).positive);
    v.altered_mentation = true;
    CHECK(screen_qsofa(v, strict).positive);

    VitalSigns one;
    one.resp_rate = 25;
    CHECK(!screen_qsofa(one, kCfg).positive);
    auto missing = screen_qsofa(one, kCfg);
    CHECK(missing.missing_inputs ==
          std::vector<std::string>{"sbp_mmhg", "altered_mentation", "gcs_total"});
}

TEST_CASE("config validation rejects out-of-range values") {
    ProtocolConfig bad = kCfg;
    bad.sirs_min_criteria = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = kCfg;
    bad.qsofa_positive_threshold = 4;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = kCfg;
    bad.sirs_temp_low = 39;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_NOTHROW(kCfg.validate());
}

TEST_CASE("protocol outputs match the truth-table oracle on a sampled grid") {
    auto dict = mini_dict();
    ConceptSet none;
    auto affirmed = concepts_with("cough", Polarity::affirmed);
    auto negated = concepts_with("cough", Polarity::negated);

    Rng rng(3, 0);
    for (int trial = 0; trial < 5000; ++trial) {
        VitalSigns v;
        if (rng.bernoulli(0.85)) v.temperature_c = std::round(rng.uniform(30, 42) * 2) / 2;
        if (rng.bernoulli(0.85)) v.pulse_bpm = std::round(rng.uniform(40, 160));
        if (rng.bernoulli(0.85)) v.resp_rate = std::round(rng.uniform(5, 40));
        if (rng.bernoulli(0.85)) v.sbp_mmhg = std::round(rng.uniform(60, 200));
        int mentation = static_cast<int>(rng.uniform_index(3));
        if (mentation < 2) v.altered_mentation = (mentation == 1);

        CHECK(sirs_count(v, kCfg) == oracle::sirs_count(v.temperature_c, v.pulse_bpm, v.resp_rate));
        CHECK(screen_sirs(v, kCfg).positive ==
              oracle::sirs_positive(v.temperature_c, v.pulse_bpm, v.resp_rate));
        CHECK(qsofa_score(v, kCfg) ==
              oracle::qsofa_score(v.resp_rate, v.sbp_mmhg, v.altered_mentation, v.gcs_total));
        CHECK(screen_standard(v, none, dict, kCfg).positive ==
              oracle::standard_positive(v.temperature_c, v.pulse_bpm, v.resp_rate, false));
        CHECK(screen_standard(v, affirmed, dict, kCfg).positive ==
              oracle::standard_positive(v.temperature_c, v.pulse_bpm, v.resp_rate, true));
        CHECK(screen_standard(v, negated, dict, kCfg).positive ==
              oracle::standard_positive(v.temperature_c, v.pulse_bpm, v.resp_rate, false));
    }
}

TEST_CASE("monotonicity: worsening one vital never flips positive to negative") {
    auto dict = mini_dict();
    auto affirmed = concepts_with("uti", Polarity::affirmed);
    Rng rng(5, 0);
    for (int trial = 0; trial < 2000; ++trial) {
        VitalSigns v;
        v.temperature_c = std::round(rng.uniform(34, 41) * 10) / 10;
        v.pulse_bpm = std::round(rng.uniform(50, 150));
        v.resp_rate = std::round(rng.uniform(8, 35));
        v.sbp_mmhg = std::round(rng.uniform(70, 190));
        v.altered_mentation = rng.bernoulli(0.2);

        VitalSigns worse = v;
        switch (rng.uniform_index(5)) {
            case 0:
                // Temperature triggers on both sides: worsen away from the
                // middle of the normal band.
                worse.temperature_c = *v.temperature_c +
                                      (*v.temperature_c >= 37.0 ? 1.0 : -1.0) * rng.uniform(0, 4);
                break;
            case 1: worse.pulse_bpm = *v.pulse_bpm + rng.uniform(0, 60); break;
            case 2: worse.resp_rate = *v.resp_rate + rng.uniform(0, 20); break;
            case 3: worse.sbp_mmhg = *v.sbp_mmhg - rng.uniform(0, 50); break;
            default: worse.altered_mentation = true; break;
        }
        if (screen_sirs(v, kCfg).positive) CHECK(screen_sirs(worse, kCfg).positive);
        if (screen_qsofa(v, kCfg).positive) CHECK(screen_qsofa(worse, kCfg).positive);
        if (screen_standard(v, affirmed, dict, kCfg).positive) {
            CHECK(screen_standard(worse, affirmed, dict, kCfg).positive);
        }
    }
}

TEST_CASE("standard-screening positives are a subset of SIRS positives") {
    auto dict = mini_dict();
    Rng rng(9, 0);
    for (int trial = 0; trial < 2000; ++trial) {
        VitalSigns v;
        if (rng.bernoulli(0.9)) v.temperature_c = rng.uniform(34, 41);
        if (rng.bernoulli(0.9)) v.pulse_bpm = rng.uniform(50, 160);
        if (rng.bernoulli(0.9)) v.resp_rate = rng.uniform(8, 40);
        ConceptSet c = rng.bernoulli(0.5) ? concepts_with("cough", Polarity::affirmed)
                                          : ConceptSet{};
        if (screen_standard(v, c, dict, kCfg).positive) {
            CHECK(screen_sirs(v, kCfg).positive);
        }
    }
}
