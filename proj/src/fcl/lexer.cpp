#include "lexer.hpp"

#include "cardiocep/fcl.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace cardiocep::fcl {

namespace {

struct KeywordEntry {
    std::string_view text;
    Keyword keyword;
};

constexpr std::array kKeywords{
    KeywordEntry{"FUNCTION_BLOCK", Keyword::FunctionBlock},
    KeywordEntry{"END_FUNCTION_BLOCK", Keyword::EndFunctionBlock},
    KeywordEntry{"VAR_INPUT", Keyword::VarInput},
    KeywordEntry{"VAR_OUTPUT", Keyword::VarOutput},
    KeywordEntry{"END_VAR", Keyword::EndVar},
    KeywordEntry{"REAL", Keyword::Real},
    KeywordEntry{"FUZZIFY", Keyword::Fuzzify},
    KeywordEntry{"END_FUZZIFY", Keyword::EndFuzzify},
    KeywordEntry{"DEFUZZIFY", Keyword::Defuzzify},
    KeywordEntry{"END_DEFUZZIFY", Keyword::EndDefuzzify},
    KeywordEntry{"TERM", Keyword::Term},
    KeywordEntry{"RANGE", Keyword::Range},
    KeywordEntry{"UNIT", Keyword::Unit},
    KeywordEntry{"METHOD", Keyword::Method},
    KeywordEntry{"COG", Keyword::Cog},
    KeywordEntry{"DEFAULT", Keyword::Default},
    KeywordEntry{"RESOLUTION", Keyword::Resolution},
    KeywordEntry{"RULEBLOCK", Keyword::RuleBlock},
    KeywordEntry{"END_RULEBLOCK", Keyword::EndRuleBlock},
    KeywordEntry{"AND", Keyword::And},
    KeywordEntry{"ACT", Keyword::Act},
    KeywordEntry{"ACCU", Keyword::Accu},
    KeywordEntry{"MIN", Keyword::Min},
    KeywordEntry{"MAX", Keyword::Max},
    KeywordEntry{"RULE", Keyword::Rule},
    KeywordEntry{"IF", Keyword::If},
    KeywordEntry{"IS", Keyword::Is},
    KeywordEntry{"THEN", Keyword::Then},
    KeywordEntry{"WITH", Keyword::With},
};

constexpr std::array<std::string_view, 34> kUnsupported{
    "OR", "NOT", "PROD", "BSUM", "NSUM", "ASUM", "BDIF", "SUM", "NIPMIN", "NIPMAX",
    "COA", "COGS", "COGF", "LM", "RM", "MM", "NC", "TRIAN", "TRAPE", "GAUSS",
    "GBELL", "SIGM", "DSIGM", "SINGLETONS", "OPTION", "END_OPTION", "VAR", "END_VAR_INPUT",
    "CONSTANT", "VAR_IN_OUT", "ACCUMULATION", "ACTIVATION", "EINSTEIN", "HAMACHER",
};

std::string upper(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    return out;
}

Keyword classify(std::string_view word)
{
    const std::string key = upper(word);
    for (const auto& entry : kKeywords) {
        if (entry.text == key) {
            return entry.keyword;
        }
    }
    if (std::find(kUnsupported.begin(), kUnsupported.end(), key) != kUnsupported.end()) {
        return Keyword::Unsupported;
    }
    return Keyword::None;
}

bool ident_start(char ch) { return std::isalpha(static_cast<unsigned char>(ch)) || ch == '_'; }
bool ident_char(char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'; }
bool digit(char ch) { return ch >= '0' && ch <= '9'; }

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run()
    {
        std::vector<Token> tokens;
        for (;;) {
            skip_space_and_comments();
            Token token;
            token.line = line_;
            token.column = column_;
            if (pos_ >= text_.size()) {
                token.kind = TokenKind::End;
                tokens.push_back(std::move(token));
                return tokens;
            }
            lex_one(token);
            tokens.push_back(std::move(token));
        }
    }

private:
    char peek(std::size_t ahead = 0) const { return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0'; }

    void advance()
    {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else if (text_[pos_] != '\r') {
            ++column_;
        }
        ++pos_;
    }

    void skip_space_and_comments()
    {
        while (pos_ < text_.size()) {
            const char ch = peek();
            if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
                advance();
            } else if (ch == '(' && peek(1) == '*') {
                const std::size_t line = line_;
                const std::size_t column = column_;
                advance();
                advance();
                while (pos_ < text_.size() && !(peek() == '*' && peek(1) == ')')) {
                    advance();
                }
                if (pos_ >= text_.size()) {
                    throw SyntaxError(line, column, "'*)' closing the comment", "end of input");
                }
                advance();
                advance();
            } else if (ch == '/' && peek(1) == '/') {
                while (pos_ < text_.size() && peek() != '\n') {
                    advance();
                }
            } else {
                return;
            }
        }
    }

    void lex_one(Token& token)
    {
        const char ch = peek();
        const std::size_t start = pos_;
        if (ident_start(ch)) {
            while (pos_ < text_.size() && ident_char(peek())) {
                advance();
            }
            token.text = std::string(text_.substr(start, pos_ - start));
            token.keyword = classify(token.text);
            token.kind = token.keyword == Keyword::None ? TokenKind::Identifier : TokenKind::Keyword;
            return;
        }
        if (digit(ch) || (ch == '-' && digit(peek(1)))) {
            advance();
            while (digit(peek())) {
                advance();
            }
            // A '.' only belongs to the number when a digit follows; "0 .. 1"
            // and "0..1" both lex as NUMBER ELLIPSIS NUMBER.
            if (peek() == '.' && digit(peek(1))) {
                advance();
                while (digit(peek())) {
                    advance();
                }
            }
            if (ident_char(peek()) || (peek() == '.' && peek(1) != '.')) {
                throw SyntaxError(token.line, token.column, "a decimal number", "'" + std::string(text_.substr(start, pos_ - start + 1)) + "'");
            }
            token.kind = TokenKind::Number;
            token.text = std::string(text_.substr(start, pos_ - start));
            return;
        }
        if (ch == '\'' || ch == '"') {
            const char quote = ch;
            advance();
            const std::size_t body = pos_;
            while (pos_ < text_.size() && peek() != quote && peek() != '\n') {
                advance();
            }
            if (peek() != quote) {
                throw SyntaxError(token.line, token.column, "closing quote", "end of line");
            }
            token.kind = TokenKind::String;
            token.text = std::string(text_.substr(body, pos_ - body));
            advance();
            return;
        }
        switch (ch) {
        case ':':
            advance();
            if (peek() == '=') {
                advance();
                token.kind = TokenKind::Assign;
                token.text = ":=";
            } else {
                token.kind = TokenKind::Colon;
                token.text = ":";
            }
            return;
        case ';': token.kind = TokenKind::Semicolon; break;
        case '(': token.kind = TokenKind::LParen; break;
        case ')': token.kind = TokenKind::RParen; break;
        case ',': token.kind = TokenKind::Comma; break;
        case '.':
            if (peek(1) == '.') {
                advance();
                advance();
                token.kind = TokenKind::Ellipsis;
                token.text = "..";
                return;
            }
            [[fallthrough]];
        default:
            throw SyntaxError(token.line, token.column, "a token", "'" + std::string(1, ch) + "'");
        }
        token.text = std::string(1, ch);
        advance();
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

} // namespace

std::string_view spelling(Keyword keyword) noexcept
{
    for (const auto& entry : kKeywords) {
        if (entry.keyword == keyword) {
            return entry.text;
        }
    }
    return "?";
}

std::string describe(const Token& token)
{
    switch (token.kind) {
    case TokenKind::End: return "end of input";
    case TokenKind::String: return "string '" + token.text + "'";
    case TokenKind::Number: return "number " + token.text;
    case TokenKind::Identifier: return "identifier '" + token.text + "'";
    default: return "'" + token.text + "'";
    }
}

std::vector<Token> tokenize(std::string_view text)
{
    return Lexer(text).run();
}

bool is_identifier(std::string_view text)
{
    if (text.empty() || !ident_start(text.front())) {
        return false;
    }
    return std::all_of(text.begin(), text.end(), ident_char) && classify(text) == Keyword::None;
}

} // namespace cardiocep::fcl
