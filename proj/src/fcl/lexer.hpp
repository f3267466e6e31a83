#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cardiocep::fcl {

enum class Keyword {
    None,
    FunctionBlock, EndFunctionBlock,
    VarInput, VarOutput, EndVar, Real,
    Fuzzify, EndFuzzify, Defuzzify, EndDefuzzify,
    Term, Range, Unit, Method, Cog, Default, Resolution,
    RuleBlock, EndRuleBlock, And, Act, Accu, Min, Max,
    Rule, If, Is, Then, With,
    // Recognised FCL vocabulary outside the supported subset. Lexed as
    // keywords so they are rejected rather than mistaken for identifiers.
    Unsupported,
};

enum class TokenKind { Identifier, Keyword, Number, String, Colon, Semicolon, Assign, LParen, RParen, Comma, Ellipsis, End };

struct Token {
    TokenKind kind = TokenKind::End;
    Keyword keyword = Keyword::None;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

/// Human-readable rendering of a token for diagnostics ("'END_VAR'", "end of input").
std::string describe(const Token& token);

/// Spelling of a supported keyword in canonical (upper) case.
std::string_view spelling(Keyword keyword) noexcept;

/// Splits FCL text into tokens; the last token is always End. Comments
/// `(* ... *)` and `// ...` are skipped. Throws SyntaxError on characters
/// that cannot start a token or on an unterminated comment/string.
std::vector<Token> tokenize(std::string_view text);

/// True when `text` lexes as a single identifier (not a keyword).
bool is_identifier(std::string_view text);

} // namespace cardiocep::fcl
