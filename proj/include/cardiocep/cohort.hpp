#pragma once

// Deterministic synthetic patient cohorts.

#include "cardiocep/clinical.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cardiocep {

struct FieldRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct GeneratorSpec {
    std::size_t n = 1000;
    std::uint64_t seed = 42;
    FieldRange age{18, 90};
    FieldRange sbp{90, 200};
    FieldRange dbp{55, 120};
    FieldRange cholesterol{3.0, 8.0};
    FieldRange glucose{0.7, 2.0};
    FieldRange height{140, 200};
    FieldRange weight{40, 150};
    double p_male = 0.5;
    double p_smoking = 0.3;
    double p_alcohol = 0.2;
    double p_active = 0.6;
    std::int64_t interval_ms = 10; // timestamp spacing
};

/// Throws Error when n == 0, a range is inverted or leaves the clinical
/// universe, or a probability is outside [0, 1].
void check_spec(const GeneratorSpec& spec);

/// Every field draws from its own mt19937_64, seeded with
/// seed_seq{seed low 32 bits, seed high 32 bits, field id}. Continuous fields
/// are uniform, rounded to 0.1 (0.01 for cholesterol and glucose); flags are
/// Bernoulli. Event i (0-based) has id i+1 and timestamp i * interval_ms.
std::vector<PatientEvent> generate(const GeneratorSpec& spec);

enum class CohortFormat { CanonicalCsv, Ndjson };

void write_cohort(const std::vector<PatientEvent>& events, std::ostream& out, CohortFormat format);
/// Throws IoError.
void write_cohort(const std::vector<PatientEvent>& events, const std::string& path, CohortFormat format);

/// Strict reader: throws FormatError (prefixed with the line number) on the
/// first malformed record, IoError when unreadable.
std::vector<PatientEvent> read_cohort(const std::string& path, CohortFormat format);

} // namespace cardiocep
