// Recursive-descent parser for the reservation-policy language.
//
//   policy     = "policy" string "{" { stmt } "}" ;
//   stmt       = applies | tier | maxdur | maxact | reclaim | contention | ownerrule ;
//   applies    = "applies" "to" ( "kind" ident | "resource" string ) ";" ;
//   tier       = "tier" string "advance" duration [ "priority" int ] ";" ;
//   maxdur     = "max_duration" duration ";" ;
//   maxact     = "max_active" int ";" ;
//   reclaim    = "reclaim" "if" "idle" ">" duration "grace" duration ";" ;
//   contention = "on_contention" ( "queue" | "auction" "deadline" duration ) ";" ;
//   ownerrule  = "owner" "may_reclaim" ( "always" | "never" ) ";" ;
//   duration   = int ( "m" | "h" | "d" ) ;
//
// After a malformed statement the parser resynchronises at the next ';' or '}', so one
// pass reports every independent problem.

#include "shary/policy/lexer.hpp"
#include "shary/policy/policy.hpp"

#include <set>

namespace shary::policy {
namespace {

struct Position {
  int line = 1;
  int column = 1;
};

struct TierDecl {
  Tier tier;
  bool explicit_rank = false;
  Position at;
  Position rank_at;
};

class Parser {
 public:
  explicit Parser(std::string_view source) : tokens_(tokenize(source)) {}

  ParseResult run() {
    ParseResult result;
    parse_document();
    if (!has_error()) validate();
    result.diagnostics = std::move(diags_);
    if (!has_error(result.diagnostics)) result.policy = std::move(policy_);
    return result;
  }

 private:
  // --- token plumbing ---------------------------------------------------------------

  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() {
    const Token& t = tokens_[pos_];
    if (t.kind != TokenKind::end) ++pos_;
    return t;
  }
  bool at(TokenKind kind) const { return peek().kind == kind; }
  bool at_keyword(std::string_view word) const { return at(TokenKind::ident) && peek().text == word; }

  void error_at(const Token& t, std::string message) {
    diags_.push_back({t.line, t.column, std::move(message), Severity::error});
  }
  void error_at(Position p, std::string message) {
    diags_.push_back({p.line, p.column, std::move(message), Severity::error});
  }

  static std::string found(const Token& t) {
    switch (t.kind) {
      case TokenKind::ident: return "'" + t.text + "'";
      case TokenKind::string: return "string";
      default: return std::string(describe(t.kind));
    }
  }

  void unexpected(const Token& t, std::string_view expected) {
    if (t.kind == TokenKind::error) {
      error_at(t, t.text);
    } else {
      error_at(t, "expected " + std::string(expected) + ", found " + found(t));
    }
  }

  bool expect(TokenKind kind, std::string_view what) {
    if (at(kind)) {
      take();
      return true;
    }
    unexpected(peek(), what);
    return false;
  }

  bool expect_keyword(std::string_view word) {
    if (at_keyword(word)) {
      take();
      return true;
    }
    unexpected(peek(), "'" + std::string(word) + "'");
    return false;
  }

  bool expect_duration(Minute& out) {
    if (at(TokenKind::duration)) {
      out = take().value;
      return true;
    }
    if (at(TokenKind::integer)) {
      error_at(peek(), "bad duration literal '" + std::to_string(peek().value) + "' (missing unit m, h or d)");
      return false;
    }
    unexpected(peek(), "duration (e.g. 30m, 8h, 7d)");
    return false;
  }

  bool expect_int(std::int64_t& out) {
    if (at(TokenKind::integer)) {
      out = take().value;
      return true;
    }
    unexpected(peek(), "integer");
    return false;
  }

  void synchronize() {
    while (!at(TokenKind::end) && !at(TokenKind::rbrace)) {
      if (take().kind == TokenKind::semicolon) return;
    }
  }

  bool has_error() const { return has_error(diags_); }
  static bool has_error(const std::vector<ParseDiagnostic>& diags) {
    for (const auto& d : diags)
      if (d.severity == Severity::error) return true;
    return false;
  }

  // --- grammar --------------------------------------------------------------------

  void parse_document() {
    const Token& first = peek();
    policy_at_ = {first.line, first.column};
    if (!at_keyword("policy")) {
      if (first.kind == TokenKind::error)
        error_at(first, first.text + "; expected 'policy'");
      else
        error_at(first, "expected 'policy'");
      return;
    }
    take();
    if (!at(TokenKind::string)) {
      unexpected(peek(), "policy name string");
      return;
    }
    policy_.name = take().text;
    if (policy_.name.empty()) error_at(tokens_[pos_ - 1], "policy name must not be empty");
    if (!expect(TokenKind::lbrace, "'{'")) return;

    while (!at(TokenKind::rbrace) && !at(TokenKind::end)) {
      if (!statement()) synchronize();
    }
    if (at(TokenKind::end)) {
      error_at(peek(), "expected '}' before end of input");
      return;
    }
    take();  // '}'
    if (!at(TokenKind::end)) {
      const Token& extra = peek();
      if (extra.kind == TokenKind::error)
        error_at(extra, extra.text);
      else
        error_at(extra, "unexpected " + found(extra) + " after policy body");
    }
  }

  bool statement() {
    const Token& head = peek();
    if (head.kind != TokenKind::ident) {
      unexpected(head, "statement");
      if (head.kind == TokenKind::semicolon) take();
      return head.kind == TokenKind::semicolon;
    }
    const Position p{head.line, head.column};
    const std::string word = head.text;
    if (word == "applies") return applies(p);
    if (word == "tier") return tier(p);
    if (word == "max_duration") return max_duration(p);
    if (word == "max_active") return max_active(p);
    if (word == "reclaim") return reclaim(p);
    if (word == "on_contention") return contention(p);
    if (word == "owner") return owner_rule(p);
    error_at(head, "unknown keyword '" + word + "'");
    take();
    return false;
  }

  bool once(const char* stmt, std::optional<Position>& seen, Position p) {
    if (seen) {
      error_at(p, std::string("duplicate '") + stmt + "' statement (first at line " + std::to_string(seen->line) +
                      ")");
      return false;
    }
    seen = p;
    return true;
  }

  bool applies(Position p) {
    take();
    if (!expect_keyword("to")) return false;
    AppliesTo target;
    if (at_keyword("kind")) {
      take();
      if (!at(TokenKind::ident)) {
        unexpected(peek(), "resource kind");
        return false;
      }
      const Token& k = take();
      if (!catalog::parse_kind(k.text)) {
        error_at(k, "unknown resource kind '" + k.text + "' (gpu, p4-switch, smartnic, compute)");
        return false;
      }
      target = {AppliesTo::Target::kind, k.text};
    } else if (at_keyword("resource")) {
      take();
      if (!at(TokenKind::string)) {
        unexpected(peek(), "resource id string");
        return false;
      }
      const Token& r = take();
      if (r.text.empty()) {
        error_at(r, "resource id must not be empty");
        return false;
      }
      target = {AppliesTo::Target::resource, r.text};
    } else {
      unexpected(peek(), "'kind' or 'resource'");
      return false;
    }
    if (!expect(TokenKind::semicolon, "';'")) return false;
    if (once("applies", applies_at_, p)) policy_.applies_to = target;
    return true;
  }

  bool tier(Position p) {
    take();
    if (!at(TokenKind::string)) {
      unexpected(peek(), "tier name string");
      return false;
    }
    TierDecl decl;
    decl.at = p;
    const Token& name = take();
    decl.tier.name = name.text;
    if (decl.tier.name.empty()) {
      error_at(name, "tier name must not be empty");
      return false;
    }
    if (!expect_keyword("advance")) return false;
    const Token& adv = peek();
    if (!expect_duration(decl.tier.advance)) return false;
    if (decl.tier.advance <= 0) {
      error_at(adv, "advance window must be positive");
      return false;
    }
    if (at_keyword("priority")) {
      take();
      decl.rank_at = {peek().line, peek().column};
      std::int64_t rank = 0;
      if (!expect_int(rank)) return false;
      if (rank > 1'000'000) {
        error_at(decl.rank_at, "priority out of range");
        return false;
      }
      decl.tier.rank = static_cast<int>(rank);
      decl.explicit_rank = true;
    }
    if (!expect(TokenKind::semicolon, "';'")) return false;
    tiers_.push_back(std::move(decl));
    return true;
  }

  bool max_duration(Position p) {
    take();
    const Token& at_tok = peek();
    Minute d = 0;
    if (!expect_duration(d)) return false;
    if (!expect(TokenKind::semicolon, "';'")) return false;
    if (d < kGranularity) {
      error_at(at_tok, "max_duration must be at least " + format_duration(kGranularity));
      return false;
    }
    if (once("max_duration", max_duration_at_, p)) policy_.max_duration = d;
    return true;
  }

  bool max_active(Position p) {
    take();
    const Token& at_tok = peek();
    std::int64_t n = 0;
    if (!expect_int(n)) return false;
    if (!expect(TokenKind::semicolon, "';'")) return false;
    if (n < 1 || n > 1'000'000) {
      error_at(at_tok, "max_active must be between 1 and 1000000");
      return false;
    }
    if (once("max_active", max_active_at_, p)) policy_.max_active = static_cast<int>(n);
    return true;
  }

  bool reclaim(Position p) {
    take();
    if (!expect_keyword("if") || !expect_keyword("idle") || !expect(TokenKind::greater, "'>'")) return false;
    const Token& idle_tok = peek();
    Minute idle = 0, grace = 0;
    if (!expect_duration(idle)) return false;
    if (!expect_keyword("grace")) return false;
    const Token& grace_tok = peek();
    if (!expect_duration(grace)) return false;
    if (!expect(TokenKind::semicolon, "';'")) return false;
    if (idle <= 0) {
      error_at(idle_tok, "idle threshold must be positive");
      return false;
    }
    if (grace > idle) {
      error_at(grace_tok, "reclaim grace (" + format_duration(grace) + ") exceeds idle threshold (" +
                              format_duration(idle) + ")");
      return false;
    }
    if (once("reclaim", reclaim_at_, p)) {
      policy_.reclaim_idle_after = idle;
      policy_.reclaim_grace = grace;
    }
    return true;
  }

  bool contention(Position p) {
    take();
    ContentionMode mode = ContentionMode::queue;
    Minute deadline = 0;
    if (at_keyword("queue")) {
      take();
    } else if (at_keyword("auction")) {
      take();
      if (!expect_keyword("deadline")) return false;
      const Token& d = peek();
      if (!expect_duration(deadline)) return false;
      if (deadline <= 0) {
        error_at(d, "auction deadline must be positive");
        return false;
      }
      mode = ContentionMode::auction;
    } else {
      unexpected(peek(), "'queue' or 'auction'");
      return false;
    }
    if (!expect(TokenKind::semicolon, "';'")) return false;
    if (once("on_contention", contention_at_, p)) {
      policy_.contention = mode;
      policy_.auction_deadline = deadline;
    }
    return true;
  }

  bool owner_rule(Position p) {
    take();
    if (!expect_keyword("may_reclaim")) return false;
    bool value = true;
    if (at_keyword("always")) {
      take();
    } else if (at_keyword("never")) {
      take();
      value = false;
    } else {
      unexpected(peek(), "'always' or 'never'");
      return false;
    }
    if (!expect(TokenKind::semicolon, "';'")) return false;
    if (once("owner", owner_at_, p)) policy_.owner_reclaim = value;
    return true;
  }

  // --- semantic checks ------------------------------------------------------------

  void validate() {
    if (!applies_at_) error_at(policy_at_, "policy \"" + policy_.name + "\" is missing 'applies to'");

    std::map<std::string, int> names;
    std::map<int, int> ranks;
    for (std::size_t i = 0; i < tiers_.size(); ++i) {
      auto& decl = tiers_[i];
      if (!decl.explicit_rank) decl.tier.rank = static_cast<int>(i + 1);
      if (auto it = names.find(decl.tier.name); it != names.end()) {
        error_at(decl.at, "duplicate tier \"" + decl.tier.name + "\" (first declared at line " +
                              std::to_string(it->second) + ")");
        continue;
      }
      names.emplace(decl.tier.name, decl.at.line);
      if (auto it = ranks.find(decl.tier.rank); it != ranks.end()) {
        error_at(decl.explicit_rank ? decl.rank_at : decl.at,
                 "duplicate priority " + std::to_string(decl.tier.rank) + " (already used at line " +
                     std::to_string(it->second) + ")");
        continue;
      }
      ranks.emplace(decl.tier.rank, decl.at.line);
      policy_.tiers.push_back(decl.tier);
    }
    if (tiers_.empty()) policy_.tiers = builtin_default_policy().tiers;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<ParseDiagnostic> diags_;

  Policy policy_;
  std::vector<TierDecl> tiers_;
  Position policy_at_;
  std::optional<Position> applies_at_, max_duration_at_, max_active_at_, reclaim_at_, contention_at_, owner_at_;
};

}  // namespace

ParseResult parse_policy(std::string_view source) {
  try {
    return Parser(source).run();
  } catch (const std::exception& e) {
    ParseResult r;
    r.diagnostics.push_back({1, 1, std::string("internal parser error: ") + e.what(), Severity::error});
    return r;
  }
}

}  // namespace shary::policy
