#include "shary/economy/ledger.hpp"

#include "shary/error.hpp"

namespace shary::economy {

std::string_view to_string(EntryReason r) {
  switch (r) {
    case EntryReason::accrual: return "accrual";
    case EntryReason::no_show_penalty: return "no_show_penalty";
    case EntryReason::early_release_bonus: return "early_release_bonus";
    case EntryReason::auction_payment: return "auction_payment";
    case EntryReason::preemption_compensation: return "preemption_compensation";
    case EntryReason::grant: return "grant";
  }
  return "grant";
}

std::optional<EntryReason> parse_reason(std::string_view t) {
  for (auto r : {EntryReason::accrual, EntryReason::no_show_penalty, EntryReason::early_release_bonus,
                 EntryReason::auction_payment, EntryReason::preemption_compensation, EntryReason::grant})
    if (to_string(r) == t) return r;
  return std::nullopt;
}

void TokenLedger::append(LedgerEntry entry) {
  balances_[entry.user] += entry.delta;
  if (entry.reason == EntryReason::auction_payment) burned_ -= entry.delta;
  entries_.push_back(std::move(entry));
}

Tokens TokenLedger::balance(const std::string& user) const {
  auto it = balances_.find(user);
  return it == balances_.end() ? 0 : it->second;
}

Tokens TokenLedger::total_user_tokens() const {
  Tokens sum = 0;
  for (const auto& [user, b] : balances_) sum += b;
  return sum;
}

std::map<std::string, Tokens> TokenLedger::recompute_balances() const {
  std::map<std::string, Tokens> out;
  for (const auto& [user, b] : balances_) out[user] = 0;
  for (const auto& e : entries_) out[e.user] += e.delta;
  return out;
}

TokenLedger TokenLedger::from_entries(std::vector<LedgerEntry> entries, const std::set<std::string>& accounts) {
  TokenLedger l;
  for (const auto& a : accounts) l.open_account(a);
  for (auto& e : entries) l.append(std::move(e));
  return l;
}

Tokens accrual_delta(Minute reserved, Minute busy) {
  if (reserved <= 0) throw Error(ErrorCode::zero_reserved, "reserved minutes must be positive");
  if (busy < 0) throw Error(ErrorCode::invalid_request, "busy minutes must be non-negative");
  const Tokens score = busy >= reserved ? kAccrualScale : (kAccrualScale * busy) / reserved;
  return score - (busy == 0 ? kNoShowPenalty : 0);
}

Tokens early_release_delta(Minute freed, Minute reserved) {
  if (reserved <= 0) throw Error(ErrorCode::zero_reserved, "reserved minutes must be positive");
  if (freed < 0 || freed > reserved)
    throw Error(ErrorCode::invalid_request, "freed minutes must lie within [0, reserved]");
  return (kEarlyReleaseScale * freed) / reserved;
}

}  // namespace shary::economy
