#pragma once

// Mamdani inference over a FuzzyModel: triangular membership, fuzzification,
// MIN/MIN/MAX rule evaluation, centroid defuzzification and risk categories.

#include "cardiocep/error.hpp"
#include "cardiocep/fcl.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cardiocep {

class NotFinite : public Error {
public:
    explicit NotFinite(std::string variable)
        : Error("value for '" + variable + "' is not finite"), variable_(std::move(variable)) {}
    const std::string& variable() const noexcept { return variable_; }

private:
    std::string variable_;
};

class MissingVariable : public Error {
public:
    explicit MissingVariable(std::vector<std::string> variables);
    const std::vector<std::string>& variables() const noexcept { return variables_; }

private:
    std::vector<std::string> variables_;
};

class NoRuleFired : public Error {
public:
    NoRuleFired() : Error("no rule fired") {}
};

class EmptyActivation : public Error {
public:
    EmptyActivation() : Error("every clip level is zero") {}
};

class OutOfUniverse : public Error {
public:
    using Error::Error;
};

double membership(const TriangularTerm& term, double x) noexcept;

struct MembershipVector {
    std::string variable;
    double value = 0.0; // after clamping
    bool clamped = false;
    std::vector<std::pair<std::string, double>> entries; // term order

    std::optional<double> degree(std::string_view term) const noexcept;

    bool operator==(const MembershipVector&) const = default;
};

/// Out-of-universe values are clamped and flagged. Throws NotFinite.
MembershipVector fuzzify(const LinguisticVariable& variable, double x);

/// min over clause degrees times the rule weight. Throws MissingVariable when a
/// clause variable (or its term) has no entry.
double rule_strength(const Rule& rule, const std::vector<MembershipVector>& memberships);

enum class RiskCategory { VeryLow, Low, Medium, High, VeryHigh };

inline constexpr std::array kRiskCategories{
    RiskCategory::VeryLow, RiskCategory::Low, RiskCategory::Medium, RiskCategory::High, RiskCategory::VeryHigh,
};

std::string_view to_string(RiskCategory category) noexcept;
std::optional<RiskCategory> parse_category(std::string_view text) noexcept;

/// The decided `risk` output: [0,100] percent, very_low_risk .. very_high_risk.
const LinguisticVariable& risk_output();

/// Argmax of the five risk terms at `score`, exact ties to the more severe
/// category. Throws OutOfUniverse outside [0,100].
RiskCategory classify_risk(double score);

/// Same argmax against an arbitrary output; nullopt unless it has 5 terms.
/// `score` is clamped into the universe first.
std::optional<RiskCategory> category_for(const LinguisticVariable& output, double score) noexcept;

struct FiredRule {
    std::string rule;
    double strength = 0.0;

    bool operator==(const FiredRule&) const = default;
};

struct CrispResult {
    double score = 0.0;
    std::optional<RiskCategory> category;
    std::vector<FiredRule> fired; // rule order, strength > 0 only
    std::vector<MembershipVector> memberships;
};

using InputMap = std::map<std::string, double, std::less<>>;

/// Centroid of the pointwise max of each output term clipped at its level,
/// over `resolution` equally spaced samples of the output universe.
/// Throws EmptyActivation when the envelope is zero everywhere.
double defuzzify_cog(const std::map<std::string, double>& activated, const LinguisticVariable& output, int resolution);

/// Streaming form of an inference: rule indices instead of ids, no
/// membership listing. Buffers are reused across calls.
struct Evaluation {
    double score = 0.0;
    std::optional<RiskCategory> category;
    std::vector<std::pair<std::size_t, double>> fired; // (rule index, strength)
    bool clamped = false;
    bool unruled = false; // nothing fired; score is the fallback value
};

/// A model compiled for repeated evaluation. Immutable and thread-safe once built.
class InferenceEngine {
public:
    /// Throws SemanticError when validate_model reports errors.
    explicit InferenceEngine(FuzzyModel model);

    const FuzzyModel& model() const noexcept { return model_; }

    /// Score used when no rule fires: DEFAULT, else the output midpoint.
    double fallback_score() const noexcept { return fallback_; }

    /// `values` follows model().inputs order. Throws NotFinite.
    void evaluate(std::span<const double> values, Evaluation& out) const;

    /// Throws MissingVariable (every rule-referenced input must be present),
    /// NotFinite and NoRuleFired.
    CrispResult infer(const InputMap& inputs) const;

private:
    struct CompiledRule {
        std::size_t first; // into clause_degree_
        std::size_t count;
        double weight;
        std::size_t output_term;
    };

    void fuzzify_into(std::span<const double> values, std::vector<double>& degrees, bool& clamped) const;
    double centroid(std::span<const double> clips) const;

    FuzzyModel model_;
    std::vector<std::size_t> degree_offset_; // per input, into the flat degree array
    std::size_t degree_count_ = 0;
    std::vector<std::size_t> clause_degree_;
    std::vector<CompiledRule> rules_;
    std::vector<bool> referenced_; // per input
    std::vector<double> grid_x_;
    std::vector<double> grid_mu_; // term-major, terms x resolution
    double fallback_ = 0.0;
};

/// One-shot form of InferenceEngine(model).infer(inputs).
CrispResult infer(const FuzzyModel& model, const InputMap& inputs);

} // namespace cardiocep
