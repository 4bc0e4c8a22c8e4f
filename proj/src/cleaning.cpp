#include "sepsis/cleaning.hpp"

#include "sepsis/errors.hpp"

namespace sepsis {

namespace {
constexpr const char* kNames[kNumericFieldCount] = {
    "age_years", "temperature_c", "pulse_bpm", "resp_rate", "sbp_mmhg",
    "dbp_mmhg",  "spo2_pct",      "gcs_total", "pain_0_10",
};
}

const char* numeric_field_name(NumericField f) {
    return kNames[static_cast<size_t>(f)];
}

std::optional<NumericField> numeric_field_from_name(const std::string& name) {
    for (size_t i = 0; i < kNumericFieldCount; ++i) {
        if (name == kNames[i]) return static_cast<NumericField>(i);
    }
    return std::nullopt;
}

CleaningTable CleaningTable::defaults() {
    CleaningTable t;
    t.set_window(NumericField::age_years, 0.0, 120.0);
    t.set_window(NumericField::temperature_c, 25.0, 45.0);
    t.set_window(NumericField::pulse_bpm, 20.0, 300.0);
    t.set_window(NumericField::resp_rate, 4.0, 80.0);
    t.set_window(NumericField::sbp_mmhg, 40.0, 300.0);
    t.set_window(NumericField::dbp_mmhg, 20.0, 200.0);
    t.set_window(NumericField::spo2_pct, 50.0, 100.0);
    t.set_window(NumericField::gcs_total, 3.0, 15.0);
    t.set_window(NumericField::pain_0_10, 0.0, 10.0);
    return t;
}

void CleaningTable::set_window(NumericField f, double min, double max) {
    windows[static_cast<size_t>(f)] = {min, max};
}

void CleaningTable::validate() const {
    for (size_t i = 0; i < kNumericFieldCount; ++i) {
        if (!(windows[i].min < windows[i].max)) {
            throw ValidationError(std::string("cleaning window for ") + kNames[i] +
                                  " has min >= max");
        }
    }
}

std::optional<double> clean_numeric(NumericField field, double value, const CleaningTable& table) {
    auto w = table.window(field);
    if (value < w.min || value > w.max) {
        return std::nullopt;
    }
    return value;
}

}  // namespace sepsis
