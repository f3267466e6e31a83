#pragma once

// In-memory fuzzy model and the FCL (Fuzzy Control Language) subset that
// describes it: parser, canonical printer and validator.

#include "cardiocep/error.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cardiocep {

enum class TermShape { Triangle, LeftShoulder, RightShoulder, Singleton };

/// Membership shape over three vertices.
///
///   triangle        a < b < c, zero outside (a, c), apex 1 at b
///   left-shoulder   a <= b < c, 1 for x <= b, falls to 0 at c; a marks where
///                   the plateau starts inside the universe
///   right-shoulder  a < b <= c, rises from 0 at a, 1 for x >= b
///   singleton       a = b = c, 1 iff x == b
struct TriangularTerm {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    TermShape shape = TermShape::Triangle;

    static TriangularTerm triangle(double a, double b, double c) { return {a, b, c, TermShape::Triangle}; }
    static TriangularTerm left_shoulder(double a, double b, double c) { return {a, b, c, TermShape::LeftShoulder}; }
    static TriangularTerm right_shoulder(double a, double b, double c) { return {a, b, c, TermShape::RightShoulder}; }
    static TriangularTerm singleton(double v) { return {v, v, v, TermShape::Singleton}; }

    /// True when the vertices satisfy the ordering required by `shape`.
    bool well_formed() const noexcept;

    bool operator==(const TriangularTerm&) const = default;
};

struct Term {
    std::string name;
    TriangularTerm shape;

    bool operator==(const Term&) const = default;
};

enum class Unit { Code, Years, MmHg, GramsPerLitre, MmolPerLitre, Percent, Centimetres, Kilograms };

std::string_view to_string(Unit unit) noexcept;
std::optional<Unit> parse_unit(std::string_view text) noexcept;

struct Universe {
    double lo = 0.0;
    double hi = 1.0;
    Unit unit = Unit::Code;

    bool operator==(const Universe&) const = default;
};

enum class VariableKind { Fuzzy, CrispCoded };

struct LinguisticVariable {
    std::string name;
    Universe universe;
    std::vector<Term> terms;
    VariableKind kind = VariableKind::Fuzzy;

    const Term* find_term(std::string_view term) const noexcept;
    std::optional<std::size_t> term_index(std::string_view term) const noexcept;

    bool operator==(const LinguisticVariable&) const = default;
};

struct Clause {
    std::string variable;
    std::string term;

    bool operator==(const Clause&) const = default;
};

struct Rule {
    std::string id;
    std::vector<Clause> antecedent; // AND-conjunction
    Clause consequent;
    double weight = 1.0;

    bool operator==(const Rule&) const = default;
};

enum class AndMethod { Min };
enum class ActivationMethod { Min };
enum class AccumulationMethod { Max };
enum class DefuzzifyMethod { Cog };

struct InferenceSettings {
    AndMethod and_method = AndMethod::Min;
    ActivationMethod activation = ActivationMethod::Min;
    AccumulationMethod accumulation = AccumulationMethod::Max;
    DefuzzifyMethod defuzzifier = DefuzzifyMethod::Cog;
    int cog_resolution = 1000;
    /// Crisp value reported when no rule fires; the output midpoint when unset.
    std::optional<double> default_value;

    bool operator==(const InferenceSettings&) const = default;
};

struct FuzzyModel {
    std::string name;
    std::vector<LinguisticVariable> inputs;
    LinguisticVariable output;
    std::vector<Rule> rules;
    InferenceSettings settings;

    const LinguisticVariable* find_variable(std::string_view variable) const noexcept;
    const LinguisticVariable* find_input(std::string_view variable) const noexcept;
    const Rule* find_rule(std::string_view id) const noexcept;

    bool operator==(const FuzzyModel&) const = default;
};

// ---------------------------------------------------------------------------
// Diagnostics

enum class Severity { Error, Warning };

struct Diagnostic {
    Severity severity = Severity::Error;
    std::string location; // "rule RULE_3", "variable age", "variable age, term young", "settings"
    std::string message;
};

std::string to_string(const Diagnostic& diagnostic);
bool has_errors(const std::vector<Diagnostic>& diagnostics) noexcept;

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t line, std::size_t column, std::string expected, std::string found);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& expected() const noexcept { return expected_; }
    const std::string& found() const noexcept { return found_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string expected_;
    std::string found_;
};

/// Well-formed text describing an invalid model. `subject()` names the first
/// offending rule or variable; every error diagnostic is kept.
class SemanticError : public Error {
public:
    SemanticError(std::string subject, std::vector<Diagnostic> diagnostics);

    const std::string& subject() const noexcept { return subject_; }
    const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string subject_;
    std::vector<Diagnostic> diagnostics_;
};

// ---------------------------------------------------------------------------
// Operations

/// Parses FCL text. Throws SyntaxError for malformed text and SemanticError
/// when the result fails validate_model with at least one error. Warnings are
/// not fatal; call validate_model to see them.
FuzzyModel parse_fcl(std::string_view text);

/// Reads and parses a file. Throws IoError when it cannot be read.
FuzzyModel parse_fcl_file(const std::string& path);

/// Canonical text: LF line endings, two-space indentation, fixed block order.
std::string print_fcl(const FuzzyModel& model);

/// Every type invariant as a diagnostic; empty iff the model is fully valid.
/// Coverage gaps in a fuzzy variable's universe are warnings.
std::vector<Diagnostic> validate_model(const FuzzyModel& model);

/// Number of grid points used by the coverage check.
inline constexpr std::size_t kCoverageGridPoints = 1001;

} // namespace cardiocep
