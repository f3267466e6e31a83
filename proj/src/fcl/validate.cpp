#include "cardiocep/engine.hpp"
#include "cardiocep/fcl.hpp"
#include "cardiocep/number_format.hpp"

#include "lexer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace cardiocep {

namespace {

struct UnitName {
    Unit unit;
    std::string_view text;
};

constexpr std::array kUnitNames{
    UnitName{Unit::Code, "code"},
    UnitName{Unit::Years, "years"},
    UnitName{Unit::MmHg, "mmHg"},
    UnitName{Unit::GramsPerLitre, "g/l"},
    UnitName{Unit::MmolPerLitre, "mmol/l"},
    UnitName{Unit::Percent, "percent"},
    UnitName{Unit::Centimetres, "cm"},
    UnitName{Unit::Kilograms, "kg"},
};

} // namespace

std::string_view to_string(Unit unit) noexcept
{
    for (const auto& entry : kUnitNames) {
        if (entry.unit == unit) {
            return entry.text;
        }
    }
    return "code";
}

std::optional<Unit> parse_unit(std::string_view text) noexcept
{
    for (const auto& entry : kUnitNames) {
        if (entry.text == text) {
            return entry.unit;
        }
    }
    return std::nullopt;
}

bool TriangularTerm::well_formed() const noexcept
{
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
        return false;
    }
    switch (shape) {
    case TermShape::Triangle: return a < b && b < c;
    case TermShape::LeftShoulder: return a <= b && b < c;
    case TermShape::RightShoulder: return a < b && b <= c;
    case TermShape::Singleton: return a == b && b == c;
    }
    return false;
}

const Term* LinguisticVariable::find_term(std::string_view term) const noexcept
{
    for (const auto& t : terms) {
        if (t.name == term) {
            return &t;
        }
    }
    return nullptr;
}

std::optional<std::size_t> LinguisticVariable::term_index(std::string_view term) const noexcept
{
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].name == term) {
            return i;
        }
    }
    return std::nullopt;
}

const LinguisticVariable* FuzzyModel::find_input(std::string_view variable) const noexcept
{
    for (const auto& v : inputs) {
        if (v.name == variable) {
            return &v;
        }
    }
    return nullptr;
}

const LinguisticVariable* FuzzyModel::find_variable(std::string_view variable) const noexcept
{
    if (output.name == variable) {
        return &output;
    }
    return find_input(variable);
}

const Rule* FuzzyModel::find_rule(std::string_view id) const noexcept
{
    for (const auto& r : rules) {
        if (r.id == id) {
            return &r;
        }
    }
    return nullptr;
}

std::string to_string(const Diagnostic& diagnostic)
{
    std::string out = diagnostic.severity == Severity::Error ? "error: " : "warning: ";
    if (!diagnostic.location.empty()) {
        out += diagnostic.location + ": ";
    }
    return out + diagnostic.message;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) noexcept
{
    return std::any_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

namespace {

class Validator {
public:
    explicit Validator(const FuzzyModel& model) : model_(model) {}

    std::vector<Diagnostic> run()
    {
        if (!fcl::is_identifier(model_.name)) {
            error("model", "name '" + model_.name + "' is not an identifier");
        }
        if (model_.inputs.empty()) {
            error("model", "no input variables");
        }
        std::set<std::string> names;
        for (const auto& var : model_.inputs) {
            if (!names.insert(var.name).second) {
                error("variable " + var.name, "name used by more than one variable");
            }
            check_variable(var);
        }
        if (!names.insert(model_.output.name).second) {
            error("variable " + model_.output.name, "output shares its name with an input");
        }
        check_variable(model_.output);
        if (model_.output.kind != VariableKind::Fuzzy) {
            error("variable " + model_.output.name, "output must be a fuzzy variable");
        }
        check_settings();
        check_rules();
        return std::move(out_);
    }

private:
    void error(std::string location, std::string message) { out_.push_back({Severity::Error, std::move(location), std::move(message)}); }
    void warning(std::string location, std::string message) { out_.push_back({Severity::Warning, std::move(location), std::move(message)}); }

    void check_variable(const LinguisticVariable& var)
    {
        const std::string where = "variable " + var.name;
        if (!fcl::is_identifier(var.name)) {
            error(where, "name is not an identifier");
        }
        const Universe& u = var.universe;
        const bool universe_ok = std::isfinite(u.lo) && std::isfinite(u.hi) && u.lo < u.hi;
        if (!universe_ok) {
            error(where, "universe [" + format_number(u.lo) + ", " + format_number(u.hi) + "] is empty");
        }
        if (var.terms.empty()) {
            error(where, "no terms");
            return;
        }
        std::set<std::string> term_names;
        bool shapes_ok = true;
        for (const auto& term : var.terms) {
            const std::string term_where = where + ", term " + term.name;
            if (!fcl::is_identifier(term.name)) {
                error(term_where, "name is not an identifier");
            }
            if (!term_names.insert(term.name).second) {
                error(term_where, "term name repeated");
            }
            if (!term.shape.well_formed()) {
                shapes_ok = false;
                error(term_where, "vertices (" + format_number(term.shape.a) + ", " + format_number(term.shape.b) + ", "
                                      + format_number(term.shape.c) + ") are out of order for its shape");
            } else if (universe_ok && (term.shape.a < u.lo || term.shape.c > u.hi)) {
                shapes_ok = false;
                error(term_where, "support [" + format_number(term.shape.a) + ", " + format_number(term.shape.c)
                                      + "] extends beyond the universe [" + format_number(u.lo) + ", " + format_number(u.hi) + "]");
            }
        }
        const std::size_t singletons = static_cast<std::size_t>(std::count_if(
            var.terms.begin(), var.terms.end(), [](const Term& t) { return t.shape.shape == TermShape::Singleton; }));
        if (var.kind == VariableKind::CrispCoded && singletons != var.terms.size()) {
            error(where, "crisp-coded variable has non-singleton terms");
        }
        if (var.kind == VariableKind::Fuzzy && singletons != 0) {
            error(where, "fuzzy variable has singleton terms");
        }
        if (var.kind == VariableKind::Fuzzy && universe_ok && shapes_ok) {
            check_coverage(var, where);
        }
    }

    void check_coverage(const LinguisticVariable& var, const std::string& where)
    {
        const double lo = var.universe.lo;
        const double hi = var.universe.hi;
        const std::size_t n = kCoverageGridPoints;
        std::vector<std::pair<double, double>> gaps;
        bool open = false;
        double gap_start = 0.0;
        double last = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
            double best = 0.0;
            for (const auto& t : var.terms) {
                best = std::max(best, membership(t.shape, x));
            }
            if (best <= 0.0) {
                if (!open) {
                    open = true;
                    gap_start = x;
                }
                last = x;
            } else if (open) {
                gaps.emplace_back(gap_start, last);
                open = false;
            }
        }
        if (open) {
            gaps.emplace_back(gap_start, last);
        }
        if (gaps.empty()) {
            return;
        }
        std::string message = "universe not covered by any term on";
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            message += i == 0 ? " " : ", ";
            message += "[" + format_number(gaps[i].first) + ", " + format_number(gaps[i].second) + "]";
        }
        warning(where, message);
    }

    void check_settings()
    {
        if (model_.settings.cog_resolution < 100) {
            error("settings", "COG resolution " + std::to_string(model_.settings.cog_resolution) + " is below 100");
        }
        if (const auto& d = model_.settings.default_value) {
            const Universe& u = model_.output.universe;
            if (!std::isfinite(*d) || *d < u.lo || *d > u.hi) {
                error("settings", "default value " + format_number(*d) + " lies outside the output universe");
            }
        }
    }

    void check_rules()
    {
        if (model_.rules.empty()) {
            error("model", "no rules");
        }
        std::set<std::string> ids;
        for (const auto& rule : model_.rules) {
            const std::string where = "rule " + rule.id;
            if (!fcl::is_identifier(rule.id)) {
                error(where, "id is not an identifier");
            }
            if (!ids.insert(rule.id).second) {
                error(where, "id repeated");
            }
            if (rule.antecedent.empty()) {
                error(where, "empty antecedent");
            }
            std::set<std::string> used;
            for (const auto& clause : rule.antecedent) {
                if (!used.insert(clause.variable).second) {
                    error(where, "variable '" + clause.variable + "' appears more than once in the antecedent");
                }
                if (clause.variable == model_.output.name) {
                    error(where, "antecedent refers to the output variable '" + clause.variable + "'");
                    continue;
                }
                const LinguisticVariable* var = model_.find_input(clause.variable);
                if (var == nullptr) {
                    error(where, "unknown input variable '" + clause.variable + "'");
                } else if (var->find_term(clause.term) == nullptr) {
                    error(where, "variable '" + clause.variable + "' has no term '" + clause.term + "'");
                }
            }
            if (rule.consequent.variable != model_.output.name) {
                error(where, "consequent must refer to the output variable '" + model_.output.name + "', not '"
                                 + rule.consequent.variable + "'");
            } else if (model_.output.find_term(rule.consequent.term) == nullptr) {
                error(where, "output has no term '" + rule.consequent.term + "'");
            }
            if (!std::isfinite(rule.weight) || rule.weight <= 0.0 || rule.weight > 1.0) {
                error(where, "weight " + format_number(rule.weight) + " is outside (0, 1]");
            }
        }
    }

    const FuzzyModel& model_;
    std::vector<Diagnostic> out_;
};

} // namespace

std::vector<Diagnostic> validate_model(const FuzzyModel& model)
{
    return Validator(model).run();
}

} // namespace cardiocep
