#include "shary/policy/lexer.hpp"

namespace shary::policy {
namespace {

constexpr std::int64_t kMaxMagnitude = 100'000'000;

bool is_ident_start(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9') || c == '-'; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      if (pos_ >= src_.size()) {
        out.push_back(make(TokenKind::end, line_, col_));
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  Token make(TokenKind kind, int line, int col, std::string text = {}, std::int64_t value = 0) const {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.value = value;
    t.line = line;
    t.column = col;
    return t;
  }

  unsigned char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? static_cast<unsigned char>(src_[pos_ + ahead]) : 0;
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      const unsigned char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  Token next() {
    const int line = line_, col = col_;
    const unsigned char c = peek();
    switch (c) {
      case '{': advance(); return make(TokenKind::lbrace, line, col);
      case '}': advance(); return make(TokenKind::rbrace, line, col);
      case ';': advance(); return make(TokenKind::semicolon, line, col);
      case '>': advance(); return make(TokenKind::greater, line, col);
      case '"': return string_literal(line, col);
      default: break;
    }
    if (is_digit(c)) return number(line, col);
    if (is_ident_start(c)) {
      std::string text;
      while (pos_ < src_.size() && is_ident_char(peek())) {
        text.push_back(static_cast<char>(peek()));
        advance();
      }
      return make(TokenKind::ident, line, col, std::move(text));
    }
    advance();
    std::string msg = "unexpected character";
    if (c >= 0x20 && c < 0x7f) msg += std::string(" '") + static_cast<char>(c) + "'";
    return make(TokenKind::error, line, col, std::move(msg));
  }

  Token string_literal(int line, int col) {
    advance();  // opening quote
    std::string value;
    bool bad_escape = false;
    while (pos_ < src_.size()) {
      const unsigned char c = peek();
      if (c == '\n') break;
      if (c == '"') {
        advance();
        if (bad_escape) return make(TokenKind::error, line, col, "invalid escape in string (only \\\" is allowed)");
        return make(TokenKind::string, line, col, std::move(value));
      }
      if (c == '\\') {
        if (peek(1) == '"') {
          value.push_back('"');
          advance();
          advance();
          continue;
        }
        bad_escape = true;
      }
      value.push_back(static_cast<char>(c));
      advance();
    }
    return make(TokenKind::error, line, col, "unterminated string");
  }

  Token number(int line, int col) {
    std::int64_t value = 0;
    bool overflow = false;
    while (pos_ < src_.size() && is_digit(peek())) {
      if (value > kMaxMagnitude) overflow = true;
      if (!overflow) value = value * 10 + (peek() - '0');
      advance();
    }
    std::string suffix;
    while (pos_ < src_.size() && is_ident_char(peek())) {
      suffix.push_back(static_cast<char>(peek()));
      advance();
    }
    if (overflow || value > kMaxMagnitude) return make(TokenKind::error, line, col, "integer literal too large");
    if (suffix.empty()) return make(TokenKind::integer, line, col, {}, value);
    std::int64_t scale = 0;
    if (suffix == "m") scale = 1;
    else if (suffix == "h") scale = 60;
    else if (suffix == "d") scale = 1440;
    if (scale == 0)
      return make(TokenKind::error, line, col,
                  "bad duration literal '" + std::to_string(value) + suffix + "' (use m, h or d)");
    return make(TokenKind::duration, line, col, {}, value * scale);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

std::string_view describe(TokenKind kind) {
  switch (kind) {
    case TokenKind::ident: return "identifier";
    case TokenKind::string: return "string";
    case TokenKind::integer: return "integer";
    case TokenKind::duration: return "duration";
    case TokenKind::lbrace: return "'{'";
    case TokenKind::rbrace: return "'}'";
    case TokenKind::semicolon: return "';'";
    case TokenKind::greater: return "'>'";
    case TokenKind::error: return "invalid token";
    case TokenKind::end: return "end of input";
  }
  return "token";
}

}  // namespace shary::policy
