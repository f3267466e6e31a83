#include "cardiocep/clinical.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace cardiocep {

namespace {

using T = TriangularTerm;

LinguisticVariable fuzzy(std::string name, double lo, double hi, Unit unit, std::vector<Term> terms)
{
    return {std::move(name), Universe{lo, hi, unit}, std::move(terms), VariableKind::Fuzzy};
}

LinguisticVariable coded(std::string name, Universe universe, std::vector<Term> terms)
{
    return {std::move(name), universe, std::move(terms), VariableKind::CrispCoded};
}

std::vector<LinguisticVariable> clinical_inputs()
{
    return {
        fuzzy("age", 0, 120, Unit::Years,
              {
                  {"young", T::left_shoulder(0, 40, 52.5)},
                  {"medium", T::triangle(40, 52.5, 67.5)},
                  {"old", T::triangle(52.5, 67.5, 72.5)},
                  {"very_old", T::right_shoulder(67.5, 72.5, 120)},
              }),
        fuzzy("sbp", 60, 220, Unit::MmHg,
              {
                  {"optimal_sbp", T::left_shoulder(60, 90, 124.5)},
                  {"normal_sbp", T::triangle(90, 124.5, 134.5)},
                  {"normally_high_sbp", T::triangle(124.5, 134.5, 149.5)},
                  {"grade1_sbp", T::triangle(134.5, 149.5, 169.5)},
                  {"grade2_sbp", T::right_shoulder(149.5, 169.5, 220)},
              }),
        fuzzy("dbp", 30, 140, Unit::MmHg,
              {
                  {"optimal_dbp", T::left_shoulder(30, 55, 82)},
                  {"normal_dbp", T::triangle(55, 82, 87)},
                  {"normally_high_dbp", T::triangle(82, 87, 94.5)},
                  {"grade1_dbp", T::triangle(87, 94.5, 104.5)},
                  {"grade2_dbp", T::triangle(94.5, 104.5, 114.5)},
                  {"grade3_dbp", T::right_shoulder(104.5, 114.5, 140)},
              }),
        coded("gender", Universe{1, 2, Unit::Code},
              {
                  {"female", T::singleton(1)},
                  {"male", T::singleton(2)},
              }),
        fuzzy("glucose", 0.4, 3.0, Unit::GramsPerLitre,
              {
                  {"non_diabetic", T::left_shoulder(0.4, 0.9, 1.125)},
                  {"prediabetic", T::triangle(0.9, 1.125, 1.375)},
                  {"diabetic", T::right_shoulder(1.125, 1.375, 3.0)},
              }),
        fuzzy("cholesterol", 2.0, 10.0, Unit::MmolPerLitre,
              {
                  {"normal_cholesterol", T::left_shoulder(2.0, 3.6, 5.65)},
                  {"medium_cholesterol", T::triangle(3.6, 5.65, 6.65)},
                  {"high_cholesterol", T::right_shoulder(5.65, 6.65, 10.0)},
              }),
        coded("smoking", Universe{0, 1, Unit::Code},
              {
                  {"non_smoker", T::singleton(0)},
                  {"smoker", T::singleton(1)},
              }),
    };
}

// Antecedent variables in clause order.
constexpr std::array<std::string_view, 6> kRuleVariables{"age", "sbp", "dbp", "gender", "glucose", "smoking"};

Rule make_rule(std::string id, const std::array<std::string_view, 6>& terms, RiskCategory consequent)
{
    Rule rule;
    rule.id = std::move(id);
    for (std::size_t i = 0; i < kRuleVariables.size(); ++i) {
        rule.antecedent.push_back({std::string(kRuleVariables[i]), std::string(terms[i])});
    }
    rule.consequent = {"risk", std::string(risk_term(consequent))};
    return rule;
}

std::vector<Rule> published_rules()
{
    using C = RiskCategory;
    return {
        make_rule("RULE_1", {"young", "optimal_sbp", "optimal_dbp", "female", "non_diabetic", "non_smoker"}, C::Low),
        make_rule("RULE_2", {"young", "normal_sbp", "normal_dbp", "male", "prediabetic", "smoker"}, C::Medium),
        make_rule("RULE_3", {"young", "normally_high_sbp", "normally_high_dbp", "male", "diabetic", "smoker"}, C::High),
        make_rule("RULE_4", {"young", "normal_sbp", "normal_dbp", "female", "non_diabetic", "non_smoker"}, C::Low),
        make_rule("RULE_5", {"young", "normally_high_sbp", "normally_high_dbp", "female", "prediabetic", "non_smoker"}, C::High),
        make_rule("RULE_6", {"medium", "optimal_sbp", "optimal_dbp", "female", "non_diabetic", "non_smoker"}, C::Medium),
        make_rule("RULE_7", {"medium", "normal_sbp", "normal_dbp", "male", "prediabetic", "smoker"}, C::Medium),
        make_rule("RULE_8", {"medium", "normally_high_sbp", "normally_high_dbp", "male", "diabetic", "smoker"}, C::High),
        make_rule("RULE_9", {"medium", "normal_sbp", "normal_dbp", "female", "non_diabetic", "non_smoker"}, C::Low),
        make_rule("RULE_10", {"medium", "normally_high_sbp", "normally_high_dbp", "female", "prediabetic", "non_smoker"}, C::High),
    };
}

FuzzyModel make_builtin()
{
    FuzzyModel model;
    model.name = "cardio_risk";
    model.inputs = clinical_inputs();
    model.output = risk_output();
    model.rules = published_rules();
    model.settings.cog_resolution = 1000;
    model.settings.default_value = 50.0;
    return model;
}

FuzzyModel make_extended()
{
    FuzzyModel model = make_builtin();
    model.name = "cardio_risk_extended";

    std::array<const LinguisticVariable*, 6> vars{};
    for (std::size_t i = 0; i < kRuleVariables.size(); ++i) {
        vars[i] = model.find_input(kRuleVariables[i]);
    }
    const std::vector<Rule> published = model.rules;
    auto is_published = [&](const std::vector<Clause>& antecedent) {
        return std::any_of(published.begin(), published.end(), [&](const Rule& r) { return r.antecedent == antecedent; });
    };

    std::array<std::size_t, 6> idx{};
    std::size_t next_id = published.size() + 1;
    for (;;) {
        std::vector<Clause> antecedent;
        for (std::size_t i = 0; i < vars.size(); ++i) {
            antecedent.push_back({vars[i]->name, vars[i]->terms[idx[i]].name});
        }
        if (!is_published(antecedent)) {
            Rule rule;
            rule.id = "RULE_" + std::to_string(next_id++);
            rule.consequent = {"risk", std::string(risk_term(severity_category(severity_points(antecedent))))};
            rule.antecedent = std::move(antecedent);
            model.rules.push_back(std::move(rule));
        }
        // odometer over the term indices, last variable fastest
        std::size_t k = vars.size();
        while (k > 0) {
            --k;
            if (++idx[k] < vars[k]->terms.size()) {
                break;
            }
            idx[k] = 0;
            if (k == 0) {
                return model;
            }
        }
    }
}

std::size_t rank_of(const LinguisticVariable& var, const std::string& term)
{
    auto idx = var.term_index(term);
    if (!idx) {
        throw Error("variable '" + var.name + "' has no term '" + term + "'");
    }
    return *idx;
}

} // namespace

std::string_view risk_term(RiskCategory category) noexcept
{
    return risk_output().terms[static_cast<std::size_t>(category)].name;
}

const FuzzyModel& builtin_model()
{
    static const FuzzyModel model = make_builtin();
    return model;
}

const FuzzyModel& extended_model()
{
    static const FuzzyModel model = make_extended();
    return model;
}

int severity_points(const std::vector<Clause>& antecedent)
{
    const FuzzyModel& model = builtin_model();
    int age = 0;
    int sbp = 0;
    int dbp = 0;
    int points = 0;
    for (const auto& clause : antecedent) {
        const LinguisticVariable* var = model.find_input(clause.variable);
        if (var == nullptr) {
            throw Error("unknown clinical variable '" + clause.variable + "'");
        }
        const int rank = static_cast<int>(rank_of(*var, clause.term));
        if (var->name == "age") {
            age = rank;
        } else if (var->name == "sbp") {
            sbp = rank;
        } else if (var->name == "dbp") {
            dbp = std::min(rank, 4);
        } else if (var->name == "smoking") {
            points += 2 * rank;
        } else if (var->name == "glucose" || var->name == "gender") {
            points += rank;
        }
    }
    return points + age + std::max(sbp, dbp);
}

RiskCategory severity_category(int points) noexcept
{
    if (points <= 1) return RiskCategory::VeryLow;
    if (points <= 3) return RiskCategory::Low;
    if (points <= 6) return RiskCategory::Medium;
    if (points <= 8) return RiskCategory::High;
    return RiskCategory::VeryHigh;
}

} // namespace cardiocep
