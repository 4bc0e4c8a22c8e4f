#pragma once

#include <array>
#include <optional>
#include <string>

namespace sepsis {

// Numeric fields subject to plausibility cleaning. The order here is also the
// fixed leading numeric block of every feature vocabulary.
enum class NumericField {
    age_years,
    temperature_c,
    pulse_bpm,
    resp_rate,
    sbp_mmhg,
    dbp_mmhg,
    spo2_pct,
    gcs_total,
    pain_0_10,
};

inline constexpr size_t kNumericFieldCount = 9;

const char* numeric_field_name(NumericField f);
std::optional<NumericField> numeric_field_from_name(const std::string& name);

// Plausibility windows. Values outside a window become absent, never clamped.
struct CleaningTable {
    struct Window {
        double min;
        double max;
    };
    std::array<Window, kNumericFieldCount> windows;

    static CleaningTable defaults();
    Window window(NumericField f) const { return windows[static_cast<size_t>(f)]; }
    void set_window(NumericField f, double min, double max);
    void validate() const;  // throws ValidationError when min >= max
};

// In-window values pass through, out-of-window values become absent.
std::optional<double> clean_numeric(NumericField field, double value, const CleaningTable& table);

}  // namespace sepsis
