#include "cardiocep/fcl.hpp"
#include "cardiocep/number_format.hpp"

#include <cctype>
#include <string>

namespace cardiocep {

namespace {

bool numbered_rule(const std::string& id)
{
    constexpr std::string_view prefix = "RULE_";
    if (id.size() <= prefix.size() || id.compare(0, prefix.size(), prefix) != 0) {
        return false;
    }
    for (std::size_t i = prefix.size(); i < id.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(id[i]))) {
            return false;
        }
    }
    return true;
}

void point(std::string& out, double x, int level)
{
    out += '(';
    out += format_number(x);
    out += ", ";
    out += std::to_string(level);
    out += ')';
}

std::string term_text(const TriangularTerm& t)
{
    std::string out;
    switch (t.shape) {
    case TermShape::Singleton: return format_number(t.b);
    case TermShape::Triangle:
        point(out, t.a, 0);
        out += ' ';
        point(out, t.b, 1);
        out += ' ';
        point(out, t.c, 0);
        break;
    case TermShape::LeftShoulder:
        if (t.a != t.b) {
            point(out, t.a, 1);
            out += ' ';
        }
        point(out, t.b, 1);
        out += ' ';
        point(out, t.c, 0);
        break;
    case TermShape::RightShoulder:
        point(out, t.a, 0);
        out += ' ';
        point(out, t.b, 1);
        if (t.b != t.c) {
            out += ' ';
            point(out, t.c, 1);
        }
        break;
    }
    return out;
}

void variable_body(std::string& out, const LinguisticVariable& var)
{
    out += "    UNIT := '";
    out += to_string(var.universe.unit);
    out += "';\n";
    out += "    RANGE := (" + format_number(var.universe.lo) + " .. " + format_number(var.universe.hi) + ");\n";
    for (const auto& term : var.terms) {
        out += "    TERM " + term.name + " := " + term_text(term.shape) + ";\n";
    }
}

std::string clause_text(const Clause& clause)
{
    return clause.variable + " IS " + clause.term;
}

} // namespace

std::string print_fcl(const FuzzyModel& model)
{
    std::string out;
    out += "FUNCTION_BLOCK " + model.name + "\n";
    out += "  VAR_INPUT\n";
    for (const auto& var : model.inputs) {
        out += "    " + var.name + " : REAL;\n";
    }
    out += "  END_VAR\n";
    out += "  VAR_OUTPUT\n";
    out += "    " + model.output.name + " : REAL;\n";
    out += "  END_VAR\n";
    for (const auto& var : model.inputs) {
        out += "  FUZZIFY " + var.name + "\n";
        variable_body(out, var);
        out += "  END_FUZZIFY\n";
    }
    out += "  DEFUZZIFY " + model.output.name + "\n";
    variable_body(out, model.output);
    out += "    METHOD : COG;\n";
    if (model.settings.default_value) {
        out += "    DEFAULT := " + format_number(*model.settings.default_value) + ";\n";
    }
    out += "    RESOLUTION := " + std::to_string(model.settings.cog_resolution) + ";\n";
    out += "  END_DEFUZZIFY\n";
    out += "  RULEBLOCK rules\n";
    out += "    AND : MIN;\n";
    out += "    ACT : MIN;\n";
    out += "    ACCU : MAX;\n";
    for (const auto& rule : model.rules) {
        out += "    RULE ";
        out += numbered_rule(rule.id) ? rule.id.substr(5) : rule.id;
        out += " : IF ";
        for (std::size_t i = 0; i < rule.antecedent.size(); ++i) {
            if (i > 0) {
                out += " AND ";
            }
            out += clause_text(rule.antecedent[i]);
        }
        out += " THEN " + clause_text(rule.consequent);
        if (rule.weight != 1.0) {
            out += " WITH " + format_number(rule.weight);
        }
        out += ";\n";
    }
    out += "  END_RULEBLOCK\n";
    out += "END_FUNCTION_BLOCK\n";
    return out;
}

} // namespace cardiocep
