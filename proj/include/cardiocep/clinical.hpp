#pragma once

// Built-in cardiovascular model, clinical band table and the patient event
// schema with its dataset adapters.

#include "cardiocep/engine.hpp"
#include "cardiocep/fcl.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cardiocep {

// ---------------------------------------------------------------------------
// Guideline bands

struct Band {
    std::string label; // "Normally High"
    std::string text;  // as printed: "130-139", "<120", ">=70"
    std::optional<double> lo;
    std::optional<double> hi;

    bool operator==(const Band&) const = default;
};

struct VariableBands {
    std::string variable; // model variable name
    Unit unit = Unit::Code;
    std::vector<Band> bands;       // the partition, ordered
    std::vector<Band> annotations; // rows outside the partition (isolated hypertension)

    const Band* find(std::string_view label) const noexcept;
};

using ClinicalBandTable = std::vector<VariableBands>;

const ClinicalBandTable& band_table();
const VariableBands* find_bands(const ClinicalBandTable& table, std::string_view variable) noexcept;

struct HypertensionFlags {
    bool isolated_systolic = false;  // sbp >= 140 and dbp < 90
    bool isolated_diastolic = false; // sbp < 140 and dbp >= 90
};

HypertensionFlags isolated_hypertension(double sbp, double dbp) noexcept;

// ---------------------------------------------------------------------------
// Models

/// Seven inputs (age, sbp, dbp, gender, glucose, cholesterol, smoking), the
/// `risk` output and the ten published rules.
const FuzzyModel& builtin_model();

/// builtin_model() plus one generated rule for every remaining combination of
/// age x sbp x dbp x gender x glucose x smoking terms (1440 rules in total).
const FuzzyModel& extended_model();

/// Severity points of an antecedent over the clinical vocabulary: age rank +
/// max(sbp rank, min(dbp rank, 4)) + 2 if smoker + glucose rank + 1 if male.
int severity_points(const std::vector<Clause>& antecedent);

/// Consequent for a severity score: <=1 very low, 2-3 low, 4-6 medium,
/// 7-8 high, >=9 very high.
RiskCategory severity_category(int points) noexcept;

/// Output term name for a category ("medium_risk").
std::string_view risk_term(RiskCategory category) noexcept;

// ---------------------------------------------------------------------------
// Events

struct PatientEvent {
    std::uint64_t event_id = 0;
    std::int64_t timestamp_ms = 0;
    double age = 0.0; // years
    int gender = 1;   // 1 female, 2 male
    double height = 0.0; // cm
    double weight = 0.0; // kg
    double sbp = 0.0;    // mmHg
    double dbp = 0.0;    // mmHg
    double cholesterol = 0.0; // mmol/l
    double glucose = 0.0;     // g/l
    int smoking = 0;
    int alcohol = 0;
    int active = 0;
    std::optional<int> label;

    bool operator==(const PatientEvent&) const = default;
};

/// Numeric value of a field by its model variable name; nullopt for names
/// that are not event fields.
std::optional<double> event_field(const PatientEvent& event, std::string_view name) noexcept;

/// Throws FormatError naming the canonical column of the first violated
/// invariant (age >= 0, sbp > 0, dbp > 0, gender 1/2, flags 0/1).
void check_event(const PatientEvent& event);

enum class DatasetFormat { KaggleCardio, CanonicalCsv };

/// One data row to an event. Throws FormatError(column, reason).
PatientEvent parse_dataset_row(std::string_view line, DatasetFormat format);

/// True for header rows: kaggle-cardio when the first field is not numeric,
/// canonical-csv when the line equals the header.
bool is_header_row(std::string_view line, DatasetFormat format);

std::string_view canonical_csv_header() noexcept;
std::string to_canonical_csv(const PatientEvent& event);

std::string to_ndjson(const PatientEvent& event);
/// Throws FormatError (column 0) for malformed JSON or missing keys.
PatientEvent parse_event_json(std::string_view line);

} // namespace cardiocep
