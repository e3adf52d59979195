#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "supplysim/rng.hpp"
#include "supplysim/types.hpp"

namespace supplysim {

struct ValidatedBid {
  Bid bid;  // unknown-item lines removed
  Money cost{0};
};

// Budget overrun voids the whole bid. A normal outcome, not an error.
struct BudgetViolation {
  Money cost{0};
  Money funds{0};
  Money overspend{0};
};

using BidValidation = std::variant<ValidatedBid, BudgetViolation>;

// Drops lines naming items absent from offers, then checks total cost <= funds.
// Throws std::invalid_argument on a negative qty or price.
BidValidation validate_bid(const Bid& bid, Money funds, std::span<const ItemSpec> offers);

Bid drop_unknown_items(const Bid& bid, std::span<const ItemSpec> offers);

struct AgentBid {
  AgentId agent_id;
  Bid bid;
};

// Per-item first-price settlement with reserve. Lines priced below reserve
// receive nothing; the rest are ranked by price descending, tied groups are
// shuffled with rng, and quantity is granted greedily. Input order is the
// canonical agent order and must be stable for replay.
Allocation settle(std::span<const ItemSpec> offers, std::span<const AgentBid> valid_bids, Rng& rng);

// Deducts spend, credits inventory, and folds the purchase price into the
// weighted-average unit cost. Returns supplier revenue. Throws
// InvariantViolation if an awarded agent is unknown or ends with funds < 0.
Money apply_allocations(std::span<AgentState> states, const Allocation& allocation);

struct ItemFeedback {
  std::optional<Money> highest_bid_price;
  Units total_qty_demanded{0};
  Money reserve_price{0};

  bool operator==(const ItemFeedback&) const = default;
};

struct AgentFeedback {
  bool overspent{false};
  std::map<ItemId, bool> provisional_win;

  bool operator==(const AgentFeedback&) const = default;
};

// Summary of a non-final bidding round. Item-level aggregates are public;
// the agents map is private and must be filtered with for_agent() before
// it is shown to a policy.
struct RoundFeedback {
  int round{0};
  std::map<ItemId, ItemFeedback> items;
  std::map<AgentId, AgentFeedback> agents;

  RoundFeedback for_agent(const AgentId& agent_id) const;
  bool operator==(const RoundFeedback&) const = default;
};

RoundFeedback make_round_feedback(int round, std::span<const ItemSpec> offers, std::span<const AgentBid> valid_bids,
                                  std::span<const AgentId> overspent, const Allocation& provisional);

void to_json(nlohmann::json& j, const ItemFeedback& v);
void from_json(const nlohmann::json& j, ItemFeedback& v);
void to_json(nlohmann::json& j, const AgentFeedback& v);
void from_json(const nlohmann::json& j, AgentFeedback& v);
void to_json(nlohmann::json& j, const RoundFeedback& v);
void from_json(const nlohmann::json& j, RoundFeedback& v);

}  // namespace supplysim
