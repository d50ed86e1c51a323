#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "shary/time.hpp"

namespace shary::economy {

using Tokens = std::int64_t;

inline constexpr Tokens kAccrualScale = 100;
inline constexpr Tokens kNoShowPenalty = 50;
inline constexpr Tokens kEarlyReleaseScale = 25;
inline constexpr Tokens kPreemptionCompensation = 25;
inline constexpr Tokens kInitialGrant = 500;

enum class EntryReason { accrual, no_show_penalty, early_release_bonus, auction_payment, preemption_compensation, grant };

std::string_view to_string(EntryReason r);
std::optional<EntryReason> parse_reason(std::string_view text);

struct LedgerEntry {
  Minute ts = 0;
  std::string user;
  Tokens delta = 0;
  EntryReason reason = EntryReason::grant;
  std::string ref;  // "reservation:12", "auction:3", ...

  bool operator==(const LedgerEntry&) const = default;
};

/// Append-only. Cached balances always equal the per-user sum of deltas. Auction payments are burned:
/// the sink is the negated sum of auction_payment deltas, not an account.
class TokenLedger {
 public:
  void append(LedgerEntry entry);

  Tokens balance(const std::string& user) const;
  bool has_account(const std::string& user) const { return balances_.count(user) != 0; }
  void open_account(const std::string& user) { balances_.try_emplace(user, 0); }

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  const std::map<std::string, Tokens>& balances() const { return balances_; }
  Tokens burned() const { return burned_; }
  Tokens total_user_tokens() const;

  /// Balances folded from the entry list alone.
  std::map<std::string, Tokens> recompute_balances() const;

  /// Rebuilds from persisted entries; accounts with no entries are listed in `accounts`.
  static TokenLedger from_entries(std::vector<LedgerEntry> entries, const std::set<std::string>& accounts);

  bool operator==(const TokenLedger&) const = default;

 private:
  std::vector<LedgerEntry> entries_;
  std::map<std::string, Tokens> balances_;
  Tokens burned_ = 0;
};

/// e = min(B/R, 1); delta = floor(100 e) - (50 if B == 0). Throws zero-reserved when R <= 0.
Tokens accrual_delta(Minute reserved_minutes, Minute busy_minutes);

/// floor(25 F / R). Throws zero-reserved when R <= 0, invalid-request when F is outside [0, R].
Tokens early_release_delta(Minute freed_minutes, Minute reserved_minutes);

}  // namespace shary::economy
