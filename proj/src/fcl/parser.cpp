#include "cardiocep/fcl.hpp"
#include "cardiocep/number_format.hpp"

#include "lexer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

namespace cardiocep {

SyntaxError::SyntaxError(std::size_t line, std::size_t column, std::string expected, std::string found)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": expected " + expected + ", found " + found),
      line_(line), column_(column), expected_(std::move(expected)), found_(std::move(found))
{
}

namespace {

std::string semantic_message(const std::string& subject, const std::vector<Diagnostic>& diagnostics)
{
    std::string msg = "invalid model";
    if (!subject.empty()) {
        msg += " (" + subject + ")";
    }
    for (const auto& d : diagnostics) {
        if (d.severity == Severity::Error) {
            msg += "\n  " + to_string(d);
        }
    }
    return msg;
}

} // namespace

SemanticError::SemanticError(std::string subject, std::vector<Diagnostic> diagnostics)
    : Error(semantic_message(subject, diagnostics)), subject_(std::move(subject)), diagnostics_(std::move(diagnostics))
{
}

namespace {

using fcl::Keyword;
using fcl::Token;
using fcl::TokenKind;

struct VariableDraft {
    std::optional<Universe> range;
    std::optional<Unit> unit;
    std::vector<Term> terms;
    bool seen = false;
};

class Parser {
public:
    explicit Parser(std::string_view text) : tokens_(fcl::tokenize(text)) {}

    FuzzyModel run()
    {
        expect_keyword(Keyword::FunctionBlock);
        model_.name = expect_identifier("function block name");
        for (;;) {
            const Token& tok = peek();
            if (tok.kind != TokenKind::Keyword) {
                fail("VAR_INPUT, VAR_OUTPUT, FUZZIFY, DEFUZZIFY, RULEBLOCK or END_FUNCTION_BLOCK");
            }
            switch (tok.keyword) {
            case Keyword::VarInput: parse_var_block(input_names_); break;
            case Keyword::VarOutput: parse_var_block(output_names_); break;
            case Keyword::Fuzzify: parse_variable_block(false); break;
            case Keyword::Defuzzify: parse_variable_block(true); break;
            case Keyword::RuleBlock: parse_rule_block(); break;
            case Keyword::EndFunctionBlock:
                next();
                if (peek().kind != TokenKind::End) {
                    fail("end of input");
                }
                return assemble();
            default:
                fail("VAR_INPUT, VAR_OUTPUT, FUZZIFY, DEFUZZIFY, RULEBLOCK or END_FUNCTION_BLOCK");
            }
        }
    }

private:
    // -- token plumbing ------------------------------------------------------

    const Token& peek() const { return tokens_[pos_]; }

    const Token& next()
    {
        const Token& tok = tokens_[pos_];
        if (pos_ + 1 < tokens_.size()) {
            ++pos_;
        }
        return tok;
    }

    [[noreturn]] void fail(const std::string& expected) const
    {
        const Token& tok = peek();
        throw SyntaxError(tok.line, tok.column, expected, describe(tok));
    }

    bool at_keyword(Keyword keyword) const { return peek().kind == TokenKind::Keyword && peek().keyword == keyword; }

    void expect_keyword(Keyword keyword)
    {
        if (!at_keyword(keyword)) {
            fail(std::string(fcl::spelling(keyword)));
        }
        next();
    }

    const Token& expect(TokenKind kind, const char* what)
    {
        if (peek().kind != kind) {
            fail(what);
        }
        return next();
    }

    std::string expect_identifier(const char* what)
    {
        if (peek().kind != TokenKind::Identifier) {
            fail(what);
        }
        return next().text;
    }

    double expect_number()
    {
        const Token& tok = expect(TokenKind::Number, "a number");
        auto value = parse_decimal(tok.text);
        if (!value) {
            throw SyntaxError(tok.line, tok.column, "a decimal number", describe(tok));
        }
        return *value;
    }

    // -- blocks --------------------------------------------------------------

    void parse_var_block(std::vector<std::pair<std::string, std::size_t>>& names)
    {
        next(); // VAR_INPUT / VAR_OUTPUT
        while (!at_keyword(Keyword::EndVar)) {
            const std::size_t line = peek().line;
            std::string name = expect_identifier("a variable name or END_VAR");
            expect(TokenKind::Colon, "':'");
            expect_keyword(Keyword::Real);
            expect(TokenKind::Semicolon, "';'");
            names.emplace_back(std::move(name), line);
        }
        next();
    }

    void parse_variable_block(bool output)
    {
        next(); // FUZZIFY / DEFUZZIFY
        const std::size_t line = peek().line;
        const std::string name = expect_identifier("a variable name");
        auto& draft = drafts_[name];
        if (draft.seen) {
            diagnostics_.push_back({Severity::Error, "variable " + name,
                                    std::string(output ? "DEFUZZIFY" : "FUZZIFY") + " block repeated (line " + std::to_string(line) + ")"});
        }
        draft.seen = true;
        (output ? defuzzified_ : fuzzified_).emplace_back(name, line);

        const Keyword end = output ? Keyword::EndDefuzzify : Keyword::EndFuzzify;
        const char* expected = output ? "TERM, RANGE, UNIT, METHOD, DEFAULT, RESOLUTION or END_DEFUZZIFY"
                                      : "TERM, RANGE, UNIT or END_FUZZIFY";
        for (;;) {
            if (peek().kind != TokenKind::Keyword) {
                fail(expected);
            }
            const Keyword kw = peek().keyword;
            if (kw == end) {
                next();
                return;
            }
            switch (kw) {
            case Keyword::Term: draft.terms.push_back(parse_term()); break;
            case Keyword::Range: {
                next();
                expect(TokenKind::Assign, "':='");
                expect(TokenKind::LParen, "'('");
                const double lo = expect_number();
                expect(TokenKind::Ellipsis, "'..'");
                const double hi = expect_number();
                expect(TokenKind::RParen, "')'");
                expect(TokenKind::Semicolon, "';'");
                draft.range = Universe{lo, hi, Unit::Code};
                break;
            }
            case Keyword::Unit: {
                next();
                expect(TokenKind::Assign, "':='");
                const Token& tok = expect(TokenKind::String, "a quoted unit");
                auto unit = parse_unit(tok.text);
                if (!unit) {
                    throw SyntaxError(tok.line, tok.column, "one of 'years', 'mmHg', 'g/l', 'mmol/l', 'percent', 'cm', 'kg', 'code'",
                                      describe(tok));
                }
                expect(TokenKind::Semicolon, "';'");
                draft.unit = *unit;
                break;
            }
            case Keyword::Method:
                if (!output) {
                    fail(expected);
                }
                next();
                expect(TokenKind::Colon, "':'");
                expect_keyword(Keyword::Cog);
                expect(TokenKind::Semicolon, "';'");
                break;
            case Keyword::Default:
                if (!output) {
                    fail(expected);
                }
                next();
                expect(TokenKind::Assign, "':='");
                settings_.default_value = expect_number();
                expect(TokenKind::Semicolon, "';'");
                break;
            case Keyword::Resolution: {
                if (!output) {
                    fail(expected);
                }
                next();
                expect(TokenKind::Assign, "':='");
                const Token& tok = expect(TokenKind::Number, "a positive integer");
                auto value = parse_integer(tok.text);
                if (!value || *value <= 0 || *value > std::numeric_limits<int>::max()) {
                    throw SyntaxError(tok.line, tok.column, "a positive integer", describe(tok));
                }
                settings_.cog_resolution = static_cast<int>(*value);
                expect(TokenKind::Semicolon, "';'");
                break;
            }
            default:
                fail(expected);
            }
        }
    }

    Term parse_term()
    {
        next(); // TERM
        Term term;
        term.name = expect_identifier("a term name");
        expect(TokenKind::Assign, "':='");
        if (peek().kind == TokenKind::Number) {
            term.shape = TriangularTerm::singleton(expect_number());
            expect(TokenKind::Semicolon, "';'");
            return term;
        }
        const Token first = peek();
        std::vector<std::pair<double, bool>> points; // (x, membership is 1)
        while (peek().kind == TokenKind::LParen) {
            if (points.size() == 3) {
                fail("';' (at most three points)");
            }
            next();
            const double x = expect_number();
            expect(TokenKind::Comma, "','");
            const Token& level_tok = peek();
            const double level = expect_number();
            if (level != 0.0 && level != 1.0) {
                throw SyntaxError(level_tok.line, level_tok.column, "membership 0 or 1", describe(level_tok));
            }
            expect(TokenKind::RParen, "')'");
            points.emplace_back(x, level == 1.0);
        }
        if (points.size() < 2) {
            fail(points.empty() ? "a number or '('" : "'(' (at least two points)");
        }
        expect(TokenKind::Semicolon, "';'");

        auto bad_shape = [&]() -> Term {
            throw SyntaxError(first.line, first.column, "a triangle (0 1 0) or shoulder (1 0 / 0 1 / 1 1 0 / 0 1 1) membership pattern",
                              "term '" + term.name + "'");
        };
        const auto& p = points;
        if (p.size() == 2) {
            if (p[0].second && !p[1].second) {
                term.shape = TriangularTerm::left_shoulder(p[0].first, p[0].first, p[1].first);
            } else if (!p[0].second && p[1].second) {
                term.shape = TriangularTerm::right_shoulder(p[0].first, p[1].first, p[1].first);
            } else {
                return bad_shape();
            }
        } else if (!p[0].second && p[1].second && !p[2].second) {
            term.shape = TriangularTerm::triangle(p[0].first, p[1].first, p[2].first);
        } else if (p[0].second && p[1].second && !p[2].second) {
            term.shape = TriangularTerm::left_shoulder(p[0].first, p[1].first, p[2].first);
        } else if (!p[0].second && p[1].second && p[2].second) {
            term.shape = TriangularTerm::right_shoulder(p[0].first, p[1].first, p[2].first);
        } else {
            return bad_shape();
        }
        return term;
    }

    void parse_rule_block()
    {
        next(); // RULEBLOCK
        expect_identifier("a rule block name");
        const char* expected = "AND, ACT, ACCU, RULE or END_RULEBLOCK";
        for (;;) {
            if (peek().kind != TokenKind::Keyword) {
                fail(expected);
            }
            switch (peek().keyword) {
            case Keyword::EndRuleBlock: next(); return;
            case Keyword::And:
                next();
                expect(TokenKind::Colon, "':'");
                expect_keyword(Keyword::Min);
                expect(TokenKind::Semicolon, "';'");
                break;
            case Keyword::Act:
                next();
                expect(TokenKind::Colon, "':'");
                expect_keyword(Keyword::Min);
                expect(TokenKind::Semicolon, "';'");
                break;
            case Keyword::Accu:
                next();
                expect(TokenKind::Colon, "':'");
                expect_keyword(Keyword::Max);
                expect(TokenKind::Semicolon, "';'");
                break;
            case Keyword::Rule: rules_.push_back(parse_rule()); break;
            default: fail(expected);
            }
        }
    }

    Clause parse_clause()
    {
        Clause clause;
        clause.variable = expect_identifier("a variable name");
        expect_keyword(Keyword::Is);
        clause.term = expect_identifier("a term name");
        return clause;
    }

    Rule parse_rule()
    {
        next(); // RULE
        Rule rule;
        const Token& label = peek();
        if (label.kind == TokenKind::Number) {
            if (!parse_integer(label.text) || label.text.starts_with('-')) {
                fail("a rule number or name");
            }
            rule.id = "RULE_" + label.text;
        } else if (label.kind == TokenKind::Identifier) {
            rule.id = label.text;
        } else {
            fail("a rule number or name");
        }
        next();
        expect(TokenKind::Colon, "':'");
        expect_keyword(Keyword::If);
        rule.antecedent.push_back(parse_clause());
        while (at_keyword(Keyword::And)) {
            next();
            rule.antecedent.push_back(parse_clause());
        }
        if (!at_keyword(Keyword::Then)) {
            fail("AND or THEN");
        }
        next();
        rule.consequent = parse_clause();
        if (at_keyword(Keyword::With)) {
            next();
            rule.weight = expect_number();
        }
        expect(TokenKind::Semicolon, "';'");
        return rule;
    }

    // -- assembly ------------------------------------------------------------

    LinguisticVariable build_variable(const std::string& name)
    {
        LinguisticVariable var;
        var.name = name;
        auto it = drafts_.find(name);
        if (it == drafts_.end()) {
            return var;
        }
        VariableDraft& draft = it->second;
        var.terms = std::move(draft.terms);
        if (draft.range) {
            var.universe = *draft.range;
        } else if (!var.terms.empty()) {
            double lo = var.terms.front().shape.a;
            double hi = var.terms.front().shape.c;
            for (const auto& t : var.terms) {
                lo = std::min(lo, t.shape.a);
                hi = std::max(hi, t.shape.c);
            }
            var.universe = Universe{lo, hi, Unit::Code};
        }
        var.universe.unit = draft.unit.value_or(Unit::Code);
        const bool all_singletons = !var.terms.empty()
            && std::all_of(var.terms.begin(), var.terms.end(), [](const Term& t) { return t.shape.shape == TermShape::Singleton; });
        var.kind = all_singletons ? VariableKind::CrispCoded : VariableKind::Fuzzy;
        return var;
    }

    FuzzyModel assemble()
    {
        std::map<std::string, std::size_t> declared;
        auto declare = [&](const std::pair<std::string, std::size_t>& entry) {
            if (!declared.emplace(entry.first, entry.second).second) {
                diagnostics_.push_back({Severity::Error, "variable " + entry.first,
                                        "declared more than once (line " + std::to_string(entry.second) + ")"});
                return false;
            }
            return true;
        };
        for (const auto& entry : input_names_) {
            if (declare(entry)) {
                model_.inputs.push_back(build_variable(entry.first));
            }
        }
        if (output_names_.size() != 1) {
            diagnostics_.push_back({Severity::Error, "VAR_OUTPUT",
                                    "exactly one output variable is required, found " + std::to_string(output_names_.size())});
        }
        if (!output_names_.empty() && declare(output_names_.front())) {
            model_.output = build_variable(output_names_.front().first);
        }
        auto is_input = [&](const std::string& n) {
            return std::any_of(input_names_.begin(), input_names_.end(), [&](const auto& e) { return e.first == n; });
        };
        auto is_output = [&](const std::string& n) { return !output_names_.empty() && output_names_.front().first == n; };
        for (const auto& [name, line] : fuzzified_) {
            if (!is_input(name)) {
                diagnostics_.push_back({Severity::Error, "variable " + name,
                                        "FUZZIFY block for a name not declared in VAR_INPUT (line " + std::to_string(line) + ")"});
            }
        }
        for (const auto& [name, line] : defuzzified_) {
            if (!is_output(name)) {
                diagnostics_.push_back({Severity::Error, "variable " + name,
                                        "DEFUZZIFY block for a name not declared in VAR_OUTPUT (line " + std::to_string(line) + ")"});
            }
        }
        auto has_block = [](const auto& blocks, const std::string& n) {
            return std::any_of(blocks.begin(), blocks.end(), [&](const auto& e) { return e.first == n; });
        };
        for (const auto& [name, line] : input_names_) {
            if (!has_block(fuzzified_, name)) {
                diagnostics_.push_back({Severity::Error, "variable " + name,
                                        "input declared on line " + std::to_string(line) + " has no FUZZIFY block"});
            }
        }
        if (output_names_.size() == 1 && !has_block(defuzzified_, output_names_.front().first)) {
            diagnostics_.push_back({Severity::Error, "variable " + output_names_.front().first, "output has no DEFUZZIFY block"});
        }

        model_.rules = std::move(rules_);
        model_.settings = settings_;

        auto diagnostics = std::move(diagnostics_);
        if (!has_errors(diagnostics)) {
            auto more = validate_model(model_);
            diagnostics.insert(diagnostics.end(), more.begin(), more.end());
        }
        if (has_errors(diagnostics)) {
            const auto first = std::find_if(diagnostics.begin(), diagnostics.end(),
                                            [](const Diagnostic& d) { return d.severity == Severity::Error; });
            throw SemanticError(first->location, std::move(diagnostics));
        }
        return std::move(model_);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;

    FuzzyModel model_;
    InferenceSettings settings_;
    std::vector<std::pair<std::string, std::size_t>> input_names_;
    std::vector<std::pair<std::string, std::size_t>> output_names_;
    std::vector<std::pair<std::string, std::size_t>> fuzzified_;
    std::vector<std::pair<std::string, std::size_t>> defuzzified_;
    std::map<std::string, VariableDraft> drafts_;
    std::vector<Rule> rules_;
    std::vector<Diagnostic> diagnostics_;
};

} // namespace

FuzzyModel parse_fcl(std::string_view text)
{
    return Parser(text).run();
}

FuzzyModel parse_fcl_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoError("cannot read '" + path + "'");
    }
    return parse_fcl(buf.str());
}

} // namespace cardiocep
