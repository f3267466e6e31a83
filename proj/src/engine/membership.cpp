#include "cardiocep/engine.hpp"
#include "cardiocep/number_format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cardiocep {

namespace {

std::string join_names(const std::vector<std::string>& names)
{
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) {
            out += ", ";
        }
        out += n;
    }
    return out;
}

} // namespace

MissingVariable::MissingVariable(std::vector<std::string> variables)
    : Error("missing input: " + join_names(variables)), variables_(std::move(variables))
{
}

double membership(const TriangularTerm& t, double x) noexcept
{
    switch (t.shape) {
    case TermShape::Singleton:
        return x == t.b ? 1.0 : 0.0;
    case TermShape::LeftShoulder:
        if (x <= t.b) return 1.0;
        if (x >= t.c) return 0.0;
        return (t.c - x) / (t.c - t.b);
    case TermShape::RightShoulder:
        if (x >= t.b) return 1.0;
        if (x <= t.a) return 0.0;
        return (x - t.a) / (t.b - t.a);
    case TermShape::Triangle:
        if (x <= t.a || x >= t.c) return 0.0;
        if (x == t.b) return 1.0;
        return x < t.b ? (x - t.a) / (t.b - t.a) : (t.c - x) / (t.c - t.b);
    }
    return 0.0;
}

std::optional<double> MembershipVector::degree(std::string_view term) const noexcept
{
    for (const auto& [name, d] : entries) {
        if (name == term) {
            return d;
        }
    }
    return std::nullopt;
}

MembershipVector fuzzify(const LinguisticVariable& variable, double x)
{
    if (!std::isfinite(x)) {
        throw NotFinite(variable.name);
    }
    MembershipVector out;
    out.variable = variable.name;
    out.value = std::clamp(x, variable.universe.lo, variable.universe.hi);
    out.clamped = out.value != x;
    out.entries.reserve(variable.terms.size());
    for (const auto& term : variable.terms) {
        out.entries.emplace_back(term.name, membership(term.shape, out.value));
    }
    return out;
}

double rule_strength(const Rule& rule, const std::vector<MembershipVector>& memberships)
{
    double strength = 1.0;
    std::vector<std::string> missing;
    for (const auto& clause : rule.antecedent) {
        auto it = std::find_if(memberships.begin(), memberships.end(),
                               [&](const MembershipVector& m) { return m.variable == clause.variable; });
        std::optional<double> d;
        if (it != memberships.end()) {
            d = it->degree(clause.term);
        }
        if (!d) {
            missing.push_back(it == memberships.end() ? clause.variable : clause.variable + "." + clause.term);
            continue;
        }
        strength = std::min(strength, *d);
    }
    if (!missing.empty()) {
        throw MissingVariable(std::move(missing));
    }
    return strength * rule.weight;
}

std::string_view to_string(RiskCategory category) noexcept
{
    switch (category) {
    case RiskCategory::VeryLow: return "VeryLow";
    case RiskCategory::Low: return "Low";
    case RiskCategory::Medium: return "Medium";
    case RiskCategory::High: return "High";
    case RiskCategory::VeryHigh: return "VeryHigh";
    }
    return "?";
}

std::optional<RiskCategory> parse_category(std::string_view text) noexcept
{
    for (RiskCategory c : kRiskCategories) {
        if (to_string(c) == text) {
            return c;
        }
    }
    return std::nullopt;
}

const LinguisticVariable& risk_output()
{
    static const LinguisticVariable risk{
        "risk",
        Universe{0.0, 100.0, Unit::Percent},
        {
            {"very_low_risk", TriangularTerm::left_shoulder(0, 0, 20)},
            {"low_risk", TriangularTerm::triangle(15, 30, 45)},
            {"medium_risk", TriangularTerm::triangle(35, 50, 65)},
            {"high_risk", TriangularTerm::triangle(55, 70, 85)},
            {"very_high_risk", TriangularTerm::right_shoulder(75, 100, 100)},
        },
        VariableKind::Fuzzy,
    };
    return risk;
}

std::optional<RiskCategory> category_for(const LinguisticVariable& output, double score) noexcept
{
    if (output.terms.size() != kRiskCategories.size() || std::isnan(score)) {
        return std::nullopt;
    }
    const double x = std::clamp(score, output.universe.lo, output.universe.hi);
    std::size_t best = 0;
    double best_degree = -1.0;
    for (std::size_t i = 0; i < output.terms.size(); ++i) {
        const double d = membership(output.terms[i].shape, x);
        if (d >= best_degree) {
            best = i;
            best_degree = d;
        }
    }
    return kRiskCategories[best];
}

RiskCategory classify_risk(double score)
{
    const auto& risk = risk_output();
    if (!(score >= risk.universe.lo && score <= risk.universe.hi)) {
        throw OutOfUniverse(std::isfinite(score) ? "risk score " + format_number(score) + " outside [0, 100]"
                                                  : std::string("risk score is not finite"));
    }
    return *category_for(risk, score);
}

} // namespace cardiocep
