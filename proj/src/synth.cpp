#include "sepsis/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "sepsis/errors.hpp"
#include "sepsis/parallel.hpp"
#include "sepsis/rng.hpp"
#include "sepsis/stats_math.hpp"

namespace sepsis {

const char* condition_name(Condition c) {
    switch (c) {
        case Condition::healthy: return "healthy";
        case Condition::infection_nonseptic: return "infection_nonseptic";
        case Condition::covid: return "covid";
        case Condition::sepsis: return "sepsis";
        case Condition::severe_sepsis: return "severe_sepsis";
        default: return "septic_shock";
    }
}

std::optional<Condition> condition_from_name(const std::string& name) {
    for (int i = 0; i < 6; ++i) {
        if (name == condition_name(static_cast<Condition>(i))) {
            return static_cast<Condition>(i);
        }
    }
    return std::nullopt;
}

SepsisTier condition_tier(Condition c) {
    switch (c) {
        case Condition::sepsis: return SepsisTier::sepsis;
        case Condition::severe_sepsis: return SepsisTier::severe_sepsis;
        case Condition::septic_shock: return SepsisTier::septic_shock;
        default: return SepsisTier::none;
    }
}

void CohortConfig::validate() const {
    if (n_records < 1) throw ValidationError("synth n_records must be >= 1");
    auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!frac(sepsis_prevalence) || !frac(severe_fraction) || !frac(shock_fraction) ||
        !frac(pediatric_fraction)) {
        throw ValidationError("synth fractions must lie in [0, 1]");
    }
    if (severe_fraction + shock_fraction > 1.0) {
        throw ValidationError("severe_fraction + shock_fraction must not exceed 1");
    }
    if (month_span < 1) throw ValidationError("synth month_span must be >= 1");
    if (static_cast<int>(covid_monthly_fractions.size()) > month_span) {
        throw ValidationError("covid_monthly_fractions has more entries than month_span");
    }
    for (double f : covid_monthly_fractions) {
        if (!frac(f)) throw ValidationError("covid monthly fractions must lie in [0, 1]");
    }
    int y = 0, m = 0;
    if (std::sscanf(start_month.c_str(), "%4d-%2d", &y, &m) != 2 || m < 1 || m > 12 ||
        start_month.size() != 7) {
        throw ValidationError("synth start_month must be YYYY-MM");
    }
}

// ---------------------------------------------------------------------------
// Emission model. Channels are conditionally independent given the latent
// condition, which keeps the Bayes posterior in closed form. The rates below
// are tuned against the published cohort marginals (sepsis prevalence, the
// covid/non-covid source-of-infection and SIRS-vital rates); the seeded
// calibration test pins them.
// ---------------------------------------------------------------------------

namespace {

constexpr int kC = 6;  // conditions, indexed by Condition

struct TruncNormal {
    double mean, sd, lo, hi;
};

// Vital emission per condition {healthy, infection, covid, sepsis, severe, shock}.
constexpr TruncNormal kTemp[kC] = {{36.8, 0.40, 34, 42}, {37.1, 0.55, 34, 42},
                                   {37.40, 0.72, 34, 42}, {37.4, 0.90, 34, 42},
                                   {37.6, 1.00, 34, 42},  {37.6, 1.15, 34, 42}};
constexpr TruncNormal kPulse[kC] = {{86, 14, 35, 220},   {92, 15, 35, 220}, {95.4, 16, 35, 220},
                                    {96, 17, 35, 220},   {102, 18, 35, 220}, {112, 20, 35, 220}};
constexpr TruncNormal kResp[kC] = {{16, 2.6, 8, 50},  {17.2, 3.0, 8, 50}, {18.6, 3.5, 8, 50},
                                   {19.5, 4.0, 8, 50}, {21, 4.5, 8, 50},   {23, 5.0, 8, 50}};
constexpr TruncNormal kSbp[kC] = {{128, 16, 55, 240}, {126, 16, 55, 240}, {124, 16, 55, 240},
                                  {116, 18, 55, 240}, {106, 17, 55, 240}, {92, 14, 55, 240}};
constexpr TruncNormal kDbp[kC] = {{78, 10, 30, 140}, {77, 10, 30, 140}, {76, 10, 30, 140},
                                  {72, 11, 30, 140}, {66, 11, 30, 140}, {58, 10, 30, 140}};
constexpr TruncNormal kSpo2[kC] = {{97.5, 1.6, 70, 100}, {97.0, 1.9, 70, 100},
                                   {94.5, 2.8, 70, 100}, {95.5, 2.6, 70, 100},
                                   {93.5, 3.2, 70, 100}, {91.5, 4.0, 70, 100}};
constexpr TruncNormal kPain{4.0, 2.5, 0, 10};  // condition-independent
constexpr TruncNormal kAdultAgeNonseptic{44, 18, 18, 100};
constexpr TruncNormal kAdultAgeSeptic{68, 14, 18, 100};

constexpr double kAltered[kC] = {0.005, 0.01, 0.02, 0.08, 0.18, 0.38};
constexpr double kPedFrac[kC] = {0.2525, 0.2525, 0.2525, 0.10, 0.10, 0.10};

// Presence rates are shared across conditions so missingness carries no label
// signal.
constexpr double kTempPresent = 0.97, kPulsePresent = 0.99, kRespPresent = 0.96,
                 kSbpPresent = 0.94, kDbpGivenSbp = 0.98, kSpo2Present = 0.92,
                 kPainPresent = 0.70, kGcsPresent = 0.85, kFlagPresent = 0.90;

const char* kArrivalModes[4] = {"walk-in", "ambulance", "wheelchair", "police"};
constexpr double kArrivalW[kC][4] = {
    {0.80, 0.10, 0.09, 0.01}, {0.78, 0.12, 0.09, 0.01}, {0.72, 0.16, 0.11, 0.01},
    {0.45, 0.40, 0.14, 0.01}, {0.30, 0.55, 0.14, 0.01}, {0.12, 0.75, 0.12, 0.01}};

// Base complaint phrases; none of them carries an infection system and none
// collides with a symptom channel.
constexpr int kNBase = 8;
const char* kBasePhrases[kNBase] = {"back pain", "ankle sprain", "laceration", "knee pain",
                                    "shoulder pain", "med refill", "anxiety", "fall"};
constexpr double kBasePresent[kC] = {0.95, 0.35, 0.30, 0.30, 0.25, 0.25};
constexpr double kBaseW[kC][kNBase] = {
    {0.16, 0.14, 0.12, 0.13, 0.12, 0.13, 0.10, 0.10},
    {0.16, 0.12, 0.10, 0.13, 0.12, 0.12, 0.10, 0.15},
    {0.16, 0.10, 0.08, 0.13, 0.12, 0.11, 0.12, 0.18},
    {0.15, 0.03, 0.04, 0.06, 0.06, 0.02, 0.02, 0.62},
    {0.15, 0.03, 0.04, 0.06, 0.06, 0.02, 0.02, 0.62},
    {0.15, 0.03, 0.04, 0.06, 0.06, 0.02, 0.02, 0.62}};

// Source-of-infection gate: when it fires, exactly one affirmed infection-sign
// term is written into the chief complaint. The per-condition rates are the
// published marginal targets.
constexpr int kNSource = 10;
const char* kSourcePhrases[kNSource] = {"cough",        "pneumonia", "sore throat",
                                        "uti",          "burning urination",
                                        "gastroenteritis", "diarrhea", "cellulitis",
                                        "abscess",      "wound infection"};
constexpr double kSourceRate[kC] = {0.252, 0.95, 0.8745, 0.90, 0.90, 0.90};
constexpr double kSourceW[kC][kNSource] = {
    {0.30, 0.01, 0.20, 0.05, 0.10, 0.08, 0.15, 0.05, 0.04, 0.02},
    {0.22, 0.07, 0.12, 0.14, 0.10, 0.10, 0.08, 0.08, 0.05, 0.04},
    {0.55, 0.12, 0.15, 0.02, 0.02, 0.03, 0.08, 0.01, 0.01, 0.01},
    {0.15, 0.25, 0.03, 0.20, 0.10, 0.04, 0.03, 0.10, 0.05, 0.05},
    {0.15, 0.25, 0.03, 0.20, 0.10, 0.04, 0.03, 0.10, 0.05, 0.05},
    {0.15, 0.25, 0.03, 0.20, 0.10, 0.04, 0.03, 0.10, 0.05, 0.05}};

// Symptom channels are three-valued: affirmed, negated mention ("denies X"),
// or absent. The negated-mention rate is condition-independent.
constexpr int kNSymptom = 8;
const char* kSymptomPhrases[kNSymptom] = {"fever",      "chills",   "confusion",
                                          "shortness of breath", "body aches", "vomiting",
                                          "headache",   "weakness"};
constexpr double kSymptomP[kNSymptom][kC] = {
    {0.05, 0.30, 0.45, 0.55, 0.65, 0.70},   // fever
    {0.02, 0.12, 0.30, 0.38, 0.45, 0.50},   // chills
    {0.004, 0.008, 0.02, 0.10, 0.22, 0.38}, // confusion
    {0.05, 0.10, 0.45, 0.18, 0.28, 0.35},   // shortness of breath
    {0.03, 0.10, 0.35, 0.12, 0.12, 0.12},   // body aches
    {0.06, 0.15, 0.12, 0.20, 0.25, 0.28},   // vomiting
    {0.12, 0.15, 0.25, 0.10, 0.08, 0.07},   // headache
    {0.06, 0.10, 0.18, 0.35, 0.45, 0.50}};  // weakness
constexpr double kNegatedMention = 0.10;

constexpr double kDurationW[kC][4] = {  // none, hours, days, weeks
    {0.55, 0.08, 0.17, 0.20}, {0.35, 0.10, 0.40, 0.15}, {0.30, 0.08, 0.50, 0.12},
    {0.30, 0.22, 0.42, 0.06}, {0.28, 0.30, 0.38, 0.04}, {0.25, 0.38, 0.33, 0.04}};

constexpr int kNHistory = 6;
const char* kHistoryPhrases[kNHistory] = {"diabetes", "cancer", "immunocompromised",
                                          "hypertension", "copd", "chronic kidney disease"};
constexpr double kHistoryP[kNHistory][kC] = {
    {0.12, 0.14, 0.14, 0.30, 0.32, 0.34},
    {0.04, 0.05, 0.05, 0.12, 0.14, 0.15},
    {0.01, 0.02, 0.02, 0.10, 0.14, 0.16},
    {0.28, 0.30, 0.32, 0.45, 0.48, 0.50},
    {0.06, 0.08, 0.08, 0.14, 0.16, 0.16},
    {0.03, 0.04, 0.04, 0.12, 0.14, 0.15}};

constexpr int kNSocial = 2;
const char* kSocialPhrases[kNSocial] = {"alcohol abuse", "homeless"};
constexpr double kSocialP[kNSocial][kC] = {
    {0.04, 0.05, 0.05, 0.09, 0.10, 0.10},
    {0.010, 0.012, 0.012, 0.030, 0.035, 0.040}};
constexpr double kSmokerRate = 0.18;  // condition-independent texture

const char* kMedPhrases[6] = {"lisinopril", "metformin", "atorvastatin",
                              "albuterol",  "insulin",   "prednisone"};
constexpr double kMedP[6] = {0.20, 0.12, 0.15, 0.07, 0.08, 0.04};

const char* kFamilyPhrases[3] = {"father with coronary artery disease", "mother with diabetes",
                                 "family history of cancer"};
const char* kSurgicalPhrases[4] = {"appendectomy", "cholecystectomy", "knee replacement",
                                   "hernia repair"};

const char* kBenignCodes[7] = {"I10", "E11.9", "M54.5", "S93.401A", "R51", "J45.909", "K21.9"};
const char* kInfectionCodes[4] = {"J18.9", "N39.0", "J02.9", "A09"};
const char* kPlainSepsisCodes[3] = {"A41.9", "A41.51", "A40.1"};

constexpr double kInfectionShare = 0.45;  // of non-covid non-sepsis records

// Observables the Bayes posterior conditions on. Everything here is
// recoverable from the emitted record via the feature pipeline (plus the
// arrival month).
struct Observables {
    int month = 0;
    bool pediatric = false;
    double age = 0.0;
    std::optional<double> temperature, pulse, resp, sbp, dbp, spo2;
    std::optional<bool> altered_flag;
    std::optional<int> gcs;
    int arrival_mode = 0;
    int base_phrase = -1;   // -1 -> none
    int source_term = -1;   // -1 -> none
    int symptom_state[kNSymptom] = {0};  // 0 absent, 1 affirmed, 2 negated
    bool cc_nonempty = false;
    int duration = 0;  // 0 none, 1 hours, 2 days, 3 weeks
    bool history[kNHistory] = {false};
    bool social[kNSocial] = {false};
};

struct Priors {
    double pi[kC];
};

Priors month_priors(const CohortConfig& cfg, int month) {
    double prev = cfg.sepsis_prevalence;
    double f = month < static_cast<int>(cfg.covid_monthly_fractions.size())
                   ? cfg.covid_monthly_fractions[month]
                   : 0.0;
    double c_m = prev < 1.0 ? std::min(1.0, f / (1.0 - prev)) : 0.0;
    double rem = (1.0 - prev) * (1.0 - c_m);
    Priors p;
    p.pi[static_cast<int>(Condition::septic_shock)] = prev * cfg.shock_fraction;
    p.pi[static_cast<int>(Condition::severe_sepsis)] = prev * cfg.severe_fraction;
    p.pi[static_cast<int>(Condition::sepsis)] =
        prev * (1.0 - cfg.shock_fraction - cfg.severe_fraction);
    p.pi[static_cast<int>(Condition::covid)] = (1.0 - prev) * c_m;
    p.pi[static_cast<int>(Condition::infection_nonseptic)] = rem * kInfectionShare;
    p.pi[static_cast<int>(Condition::healthy)] = rem * (1.0 - kInfectionShare);
    return p;
}

double log_or_floor(double v) {
    return std::log(std::max(v, 1e-300));
}

// log P(observables | condition). Channel constants shared by every condition
// (presence rates, rounding width) cancel in the posterior and are omitted.
double log_likelihood(const Observables& o, int c, const CohortConfig& cfg) {
    double ll = 0.0;
    bool septic = c >= static_cast<int>(Condition::sepsis);

    // age
    if (o.pediatric) {
        ll += log_or_floor(kPedFrac[c] / 18.0);
    } else {
        const TruncNormal& a = septic ? kAdultAgeSeptic : kAdultAgeNonseptic;
        ll += log_or_floor((1.0 - kPedFrac[c]) *
                           truncated_normal_pdf(o.age, a.mean, a.sd, a.lo, a.hi));
    }
    auto vital = [&](const std::optional<double>& v, const TruncNormal& t) {
        if (v) ll += log_or_floor(truncated_normal_pdf(*v, t.mean, t.sd, t.lo, t.hi));
    };
    vital(o.temperature, kTemp[c]);
    vital(o.pulse, kPulse[c]);
    vital(o.resp, kResp[c]);
    vital(o.sbp, kSbp[c]);
    vital(o.dbp, kDbp[c]);
    vital(o.spo2, kSpo2[c]);

    // mentation: marginalize the latent altered state over flag + GCS
    {
        double like = 0.0;
        for (int a = 0; a <= 1; ++a) {
            double pa = a ? kAltered[c] : 1.0 - kAltered[c];
            double flag_part = 1.0;
            if (o.altered_flag) flag_part = (*o.altered_flag == (a == 1)) ? 1.0 : 0.0;
            double gcs_part = 1.0;
            if (o.gcs) {
                if (a == 1) {
                    gcs_part = (*o.gcs >= 9 && *o.gcs <= 14) ? 1.0 / 6.0 : 0.0;
                } else {
                    gcs_part = (*o.gcs == 15) ? 1.0 : 0.0;
                }
            }
            like += pa * flag_part * gcs_part;
        }
        ll += log_or_floor(like);
    }

    ll += log_or_floor(kArrivalW[c][o.arrival_mode]);
    ll += log_or_floor(o.base_phrase < 0 ? 1.0 - kBasePresent[c]
                                         : kBasePresent[c] * kBaseW[c][o.base_phrase]);
    ll += log_or_floor(o.source_term < 0 ? 1.0 - kSourceRate[c]
                                         : kSourceRate[c] * kSourceW[c][o.source_term]);
    for (int s = 0; s < kNSymptom; ++s) {
        double p = kSymptomP[s][c];
        double like = o.symptom_state[s] == 1   ? p
                      : o.symptom_state[s] == 2 ? (1.0 - p) * kNegatedMention
                                                : (1.0 - p) * (1.0 - kNegatedMention);
        ll += log_or_floor(like);
    }
    if (o.cc_nonempty) {
        ll += log_or_floor(kDurationW[c][o.duration]);
    }
    for (int h = 0; h < kNHistory; ++h) {
        ll += log_or_floor(o.history[h] ? kHistoryP[h][c] : 1.0 - kHistoryP[h][c]);
    }
    for (int s = 0; s < kNSocial; ++s) {
        ll += log_or_floor(o.social[s] ? kSocialP[s][c] : 1.0 - kSocialP[s][c]);
    }
    (void)cfg;
    return ll;
}

double bayes_logit_for(const Observables& o, const CohortConfig& cfg) {
    Priors priors = month_priors(cfg, o.month);
    double ll[kC];
    double max_ll = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < kC; ++c) {
        ll[c] = log_or_floor(priors.pi[c]) + log_likelihood(o, c, cfg);
        max_ll = std::max(max_ll, ll[c]);
    }
    double septic = 0.0, nonseptic = 0.0;
    for (int c = 0; c < kC; ++c) {
        double v = std::exp(ll[c] - max_ll);
        if (c >= static_cast<int>(Condition::sepsis)) {
            septic += v;
        } else {
            nonseptic += v;
        }
    }
    return std::log(septic) - std::log(nonseptic);
}

int pick_weighted(Rng& rng, const double* weights, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += weights[i];
    double u = rng.uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return n - 1;
}

double round1(double v) {
    return std::round(v * 10.0) / 10.0;
}

std::string join_parts(const std::vector<std::string>& parts) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        out += parts[i];
    }
    return out;
}

struct StartMonth {
    int year, month;
};

StartMonth parse_start_month(const std::string& s) {
    StartMonth sm{2021, 1};
    std::sscanf(s.c_str(), "%4d-%2d", &sm.year, &sm.month);
    return sm;
}

void emit_record(const CohortConfig& cfg, const StartMonth& start, size_t index, TriageRecord& rec,
                 LatentRecord& lat) {
    Rng rng(cfg.seed, index);
    Observables obs;

    obs.month = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(cfg.month_span)));
    int day = 1 + static_cast<int>(rng.uniform_index(28));
    int hour = static_cast<int>(rng.uniform_index(24));
    int minute = static_cast<int>(rng.uniform_index(60));

    // latent condition
    Condition cond;
    if (rng.bernoulli(cfg.sepsis_prevalence)) {
        double u = rng.uniform();
        cond = u < cfg.shock_fraction                        ? Condition::septic_shock
               : u < cfg.shock_fraction + cfg.severe_fraction ? Condition::severe_sepsis
                                                              : Condition::sepsis;
    } else {
        double f = obs.month < static_cast<int>(cfg.covid_monthly_fractions.size())
                       ? cfg.covid_monthly_fractions[obs.month]
                       : 0.0;
        double c_m = cfg.sepsis_prevalence < 1.0
                         ? std::min(1.0, f / (1.0 - cfg.sepsis_prevalence))
                         : 0.0;
        if (rng.bernoulli(c_m)) {
            cond = Condition::covid;
        } else {
            cond = rng.bernoulli(kInfectionShare) ? Condition::infection_nonseptic
                                                  : Condition::healthy;
        }
    }
    const int c = static_cast<int>(cond);
    const bool septic = cond == Condition::sepsis || cond == Condition::severe_sepsis ||
                        cond == Condition::septic_shock;

    obs.pediatric = rng.bernoulli(kPedFrac[c]);
    if (obs.pediatric) {
        obs.age = std::floor(rng.uniform(0.0, 18.0));
    } else {
        const TruncNormal& a = septic ? kAdultAgeSeptic : kAdultAgeNonseptic;
        obs.age = std::floor(rng.truncated_normal(a.mean, a.sd, a.lo, a.hi));
    }

    double u_sex = rng.uniform();
    Sex sex = u_sex < 0.48 ? Sex::male : u_sex < 0.995 ? Sex::female : Sex::other;

    auto draw_vital = [&](const TruncNormal& t, double present, bool integral) {
        std::optional<double> out;
        if (rng.bernoulli(present)) {
            double v = rng.truncated_normal(t.mean, t.sd, t.lo, t.hi);
            out = integral ? std::round(v) : round1(v);
        }
        return out;
    };
    obs.temperature = draw_vital(kTemp[c], kTempPresent, false);
    obs.pulse = draw_vital(kPulse[c], kPulsePresent, true);
    obs.resp = draw_vital(kResp[c], kRespPresent, true);
    obs.sbp = draw_vital(kSbp[c], kSbpPresent, true);
    if (obs.sbp && rng.bernoulli(kDbpGivenSbp)) {
        obs.dbp = std::round(rng.truncated_normal(kDbp[c].mean, kDbp[c].sd, kDbp[c].lo, kDbp[c].hi));
    }
    obs.spo2 = draw_vital(kSpo2[c], kSpo2Present, true);

    bool altered = rng.bernoulli(kAltered[c]);
    if (rng.bernoulli(kFlagPresent)) obs.altered_flag = altered;
    if (rng.bernoulli(kGcsPresent)) {
        obs.gcs = altered ? 9 + static_cast<int>(rng.uniform_index(6)) : 15;
    }
    std::optional<int> pain;
    if (rng.bernoulli(kPainPresent)) {
        pain = static_cast<int>(std::round(rng.truncated_normal(kPain.mean, kPain.sd, kPain.lo, kPain.hi)));
    }

    obs.arrival_mode = pick_weighted(rng, kArrivalW[c], 4);
    obs.base_phrase = rng.bernoulli(kBasePresent[c]) ? pick_weighted(rng, kBaseW[c], kNBase) : -1;
    obs.source_term = rng.bernoulli(kSourceRate[c]) ? pick_weighted(rng, kSourceW[c], kNSource) : -1;
    for (int s = 0; s < kNSymptom; ++s) {
        if (rng.bernoulli(kSymptomP[s][c])) {
            obs.symptom_state[s] = 1;
        } else if (rng.bernoulli(kNegatedMention)) {
            obs.symptom_state[s] = 2;
        }
    }

    // chief complaint assembly
    std::vector<std::string> parts;
    if (obs.base_phrase >= 0) parts.push_back(kBasePhrases[obs.base_phrase]);
    if (obs.source_term >= 0) parts.push_back(kSourcePhrases[obs.source_term]);
    for (int s = 0; s < kNSymptom; ++s) {
        if (obs.symptom_state[s] == 1) parts.push_back(kSymptomPhrases[s]);
    }
    for (int s = 0; s < kNSymptom; ++s) {
        if (obs.symptom_state[s] == 2) {
            parts.push_back(std::string("denies ") + kSymptomPhrases[s]);
        }
    }
    obs.cc_nonempty = !parts.empty();
    std::string cc = join_parts(parts);
    obs.duration = 0;
    int dur_draw = pick_weighted(rng, kDurationW[c], 4);
    if (obs.cc_nonempty && dur_draw != 0) {
        obs.duration = dur_draw;
        int count = 0;
        const char* unit = "";
        switch (dur_draw) {
            case 1:
                count = 2 + static_cast<int>(rng.uniform_index(17));
                unit = "hours";
                break;
            case 2:
                count = 1 + static_cast<int>(rng.uniform_index(9));
                unit = count == 1 ? "day" : "days";
                break;
            default:
                count = 1 + static_cast<int>(rng.uniform_index(3));
                unit = count == 1 ? "week" : "weeks";
                break;
        }
        cc += " x " + std::to_string(count) + " " + unit;
    }

    // histories
    std::vector<std::string> hx_med;
    for (int h = 0; h < kNHistory; ++h) {
        obs.history[h] = rng.bernoulli(kHistoryP[h][c]);
        if (obs.history[h]) hx_med.push_back(kHistoryPhrases[h]);
    }
    std::vector<std::string> hx_soc;
    for (int s = 0; s < kNSocial; ++s) {
        obs.social[s] = rng.bernoulli(kSocialP[s][c]);
        if (obs.social[s]) hx_soc.push_back(kSocialPhrases[s]);
    }
    if (rng.bernoulli(kSmokerRate)) hx_soc.push_back("smoker");
    std::vector<std::string> meds;
    for (int m = 0; m < 6; ++m) {
        if (rng.bernoulli(kMedP[m])) meds.push_back(kMedPhrases[m]);
    }
    std::optional<std::string> hx_family;
    if (rng.bernoulli(0.25)) hx_family = kFamilyPhrases[rng.uniform_index(3)];
    std::optional<std::string> hx_surgical;
    if (rng.bernoulli(0.20)) hx_surgical = kSurgicalPhrases[rng.uniform_index(4)];

    // label channels: diagnosis codes / provider note, consistent with the tier
    std::optional<std::vector<std::string>> codes;
    std::optional<std::string> note;
    if (septic) {
        const char* plain_code = kPlainSepsisCodes[rng.uniform_index(3)];
        bool via_codes = rng.bernoulli(0.70);
        if (via_codes) {
            std::vector<std::string> list;
            if (cond == Condition::septic_shock) list.push_back("R65.21");
            if (cond == Condition::severe_sepsis) list.push_back("R65.20");
            list.push_back(plain_code);
            if (rng.bernoulli(0.30)) list.push_back(kBenignCodes[rng.uniform_index(7)]);
            codes = std::move(list);
        } else {
            const char* src = obs.source_term >= 0 ? kSourcePhrases[obs.source_term] : nullptr;
            if (cond == Condition::septic_shock) {
                note = src ? std::string("septic shock due to ") + src : "septic shock";
            } else if (cond == Condition::severe_sepsis) {
                note = src ? std::string("severe sepsis due to ") + src : "severe sepsis";
            } else if (src && rng.bernoulli(0.20)) {
                note = std::string("sirs due to ") + src;
            } else {
                note = src ? std::string("sepsis due to ") + src : "sepsis, unclear source";
            }
        }
    } else {
        std::vector<std::string> list;
        if (cond == Condition::covid) {
            list.push_back("U07.1");
            if (rng.bernoulli(0.25)) list.push_back("J18.9");
        } else if (cond == Condition::infection_nonseptic) {
            list.push_back(kInfectionCodes[rng.uniform_index(4)]);
            if (rng.bernoulli(0.30)) list.push_back(kBenignCodes[rng.uniform_index(7)]);
        } else {
            list.push_back(kBenignCodes[rng.uniform_index(7)]);
        }
        codes = std::move(list);
        if (rng.bernoulli(0.20)) {
            const char* benign_notes[4] = {"acute viral illness", "musculoskeletal pain",
                                           "migraine", "minor injury"};
            note = benign_notes[rng.uniform_index(4)];
        }
    }

    // assemble the record
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "r%07zu", index);
    rec.id = idbuf;
    rec.site = cfg.site;
    int total_month = (start.month - 1) + obs.month;
    char ts[64];
    std::snprintf(ts, sizeof ts, "%04d-%02d-%02dT%02d:%02d:00Z", start.year + total_month / 12,
                  total_month % 12 + 1, day, hour, minute);
    rec.arrival_time = Timestamp::parse(ts);
    rec.age_years = obs.age;
    rec.sex = sex;
    rec.vitals.temperature_c = obs.temperature;
    rec.vitals.pulse_bpm = obs.pulse;
    rec.vitals.resp_rate = obs.resp;
    rec.vitals.sbp_mmhg = obs.sbp;
    rec.vitals.dbp_mmhg = obs.dbp;
    rec.vitals.spo2_pct = obs.spo2;
    rec.vitals.gcs_total = obs.gcs;
    rec.vitals.pain_0_10 = pain;
    rec.vitals.altered_mentation = obs.altered_flag;
    rec.arrival_mode = kArrivalModes[obs.arrival_mode];
    rec.chief_complaint = cc;
    if (!hx_med.empty()) rec.history_medical = join_parts(hx_med);
    if (!hx_soc.empty()) rec.history_social = join_parts(hx_soc);
    rec.history_family = hx_family;
    rec.history_surgical = hx_surgical;
    if (!meds.empty()) rec.medications = join_parts(meds);
    rec.problem_list_icd10 = std::move(codes);
    rec.provider_note_dx = std::move(note);
    rec.covid_diagnosed = (cond == Condition::covid);

    lat.id = rec.id;
    lat.condition = cond;
    lat.bayes_logit = bayes_logit_for(obs, cfg);
}

}  // namespace

GeneratedCohort generate(const CohortConfig& config, int threads) {
    config.validate();
    StartMonth start = parse_start_month(config.start_month);
    GeneratedCohort out;
    out.records.resize(config.n_records);
    out.latent.resize(config.n_records);
    parallel_for(config.n_records, threads, [&](size_t i) {
        emit_record(config, start, i, out.records[i], out.latent[i]);
    });
    return out;
}

void write_latent_file(const std::string& path, const std::vector<LatentRecord>& latent) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write latent sidecar: " + path);
    out << "id\tcondition\tbayes_logit\n";
    char buf[64];
    for (const auto& l : latent) {
        std::snprintf(buf, sizeof buf, "%.17g", l.bayes_logit);
        out << l.id << '\t' << condition_name(l.condition) << '\t' << buf << '\n';
    }
}

std::vector<LatentRecord> read_latent_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open latent sidecar: " + path);
    std::vector<LatentRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("id\t", 0) == 0) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw ParseError("latent sidecar row needs 3 tab-separated columns", line_no);
        }
        LatentRecord l;
        l.id = line.substr(0, t1);
        auto cond = condition_from_name(line.substr(t1 + 1, t2 - t1 - 1));
        if (!cond) throw ParseError("unknown condition in latent sidecar", line_no);
        l.condition = *cond;
        try {
            l.bayes_logit = std::stod(line.substr(t2 + 1));
        } catch (const std::exception&) {
            throw ParseError("bad bayes_logit value in latent sidecar", line_no);
        }
        out.push_back(std::move(l));
    }
    return out;
}

std::vector<double> bayes_scores(const std::vector<LatentRecord>& latent,
                                 const std::vector<TriageRecord>& records) {
    std::unordered_map<std::string, double> by_id;
    by_id.reserve(latent.size());
    for (const auto& l : latent) {
        by_id.emplace(l.id, l.bayes_logit);
    }
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const auto& r : records) {
        auto it = by_id.find(r.id);
        if (it == by_id.end()) {
            throw DataError("latent sidecar is missing record id \"" + r.id + "\"");
        }
        scores.push_back(it->second);
    }
    return scores;
}

}  // namespace sepsis
