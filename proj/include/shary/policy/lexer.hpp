#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace shary::policy {

enum class TokenKind { ident, string, integer, duration, lbrace, rbrace, semicolon, greater, error, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;       // identifier name, decoded string, or error message
  std::int64_t value = 0; // integer value, or duration in minutes
  int line = 1;
  int column = 1;
};

/// Lexes the whole source. Always ends with an `end` token; malformed input becomes `error` tokens.
std::vector<Token> tokenize(std::string_view source);

std::string_view describe(TokenKind kind);

}  // namespace shary::policy
