#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "supplysim/auction.hpp"
#include "supplysim/config.hpp"
#include "supplysim/rng.hpp"
#include "supplysim/types.hpp"

namespace supplysim {

// One agent's public outcome in one prior step.
struct HistoryEntry {
  int step{0};
  AgentId agent_id;
  std::map<ItemId, Money> prices;
  std::string slogan;
  Units units_sold{0};
  Money revenue{0};

  bool operator==(const HistoryEntry&) const = default;
};

struct InventoryLine {
  ItemId item_id;
  Units qty{0};

  bool operator==(const InventoryLine&) const = default;
};

struct BidObservation {
  AgentId agent_id;
  int step{0};
  int round{1};
  int round_max{1};
  Money funds{0};
  bool overspent_last_round{false};
  Catalog offers;
  std::vector<InventoryLine> inventory;  // every catalog item, zeros included
  std::vector<HistoryEntry> history;
  std::optional<RoundFeedback> feedback;  // this agent's view of the previous round
};

struct RetailObservation {
  AgentId agent_id;
  int step{0};
  Money funds{0};
  std::vector<InventoryLine> inventory;  // held items only
  std::map<ItemId, Rational> unit_cost;
  Catalog catalog;
  std::vector<HistoryEntry> history;
};

// Raised by a policy that could not produce an action. The engine substitutes
// the zero action and logs a fault.
class PolicyFaultError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual Bid decide_bid(const BidObservation& obs) = 0;
  virtual RetailPosting decide_retail(const RetailObservation& obs) = 0;
  // True when decisions leave the process and are worth running concurrently.
  virtual bool is_remote() const { return false; }
};

class ZeroPolicy final : public Policy {
 public:
  std::string name() const override { return "zero"; }
  Bid decide_bid(const BidObservation&) override { return {}; }
  RetailPosting decide_retail(const RetailObservation&) override { return {}; }
};

// Random bids that always pass validate_bid, and random markups and slogans.
class RandomValidPolicy final : public Policy {
 public:
  explicit RandomValidPolicy(Rng rng) : rng_(std::move(rng)) {}
  std::string name() const override { return "random"; }
  Bid decide_bid(const BidObservation& obs) override;
  RetailPosting decide_retail(const RetailObservation& obs) override;

 private:
  Rng rng_;
};

// Bids base_price + 1 on items in ascending base-price order, taking as much
// of each offer as the remaining budget allows.
Bid greedy_value_bid(const BidObservation& obs);

// ceil(markup * unit_cost) on every held item.
std::map<ItemId, Money> markup_prices(const RetailObservation& obs, double markup);

class GreedyValuePolicy final : public Policy {
 public:
  static constexpr const char* kSlogan = "Everyday value on the goods you need.";
  std::string name() const override { return "greedy"; }
  Bid decide_bid(const BidObservation& obs) override { return greedy_value_bid(obs); }
  RetailPosting decide_retail(const RetailObservation& obs) override;
};

class MarginPricerPolicy final : public Policy {
 public:
  static constexpr const char* kSlogan = "Fair prices and honest quality.";
  explicit MarginPricerPolicy(double markup = 1.5) : markup_(markup) {}
  std::string name() const override { return "margin"; }
  Bid decide_bid(const BidObservation& obs) override { return greedy_value_bid(obs); }
  RetailPosting decide_retail(const RetailObservation& obs) override;

 private:
  double markup_;
};

// Copies the slogan of the previous step's top-revenue agent.
class MimicSloganPolicy final : public Policy {
 public:
  static constexpr const char* kDefaultSlogan = "Quality goods at a fair price.";
  explicit MimicSloganPolicy(double markup = 1.5) : markup_(markup) {}
  std::string name() const override { return "mimic"; }
  Bid decide_bid(const BidObservation& obs) override { return greedy_value_bid(obs); }
  RetailPosting decide_retail(const RetailObservation& obs) override;

 private:
  double markup_;
};

// Builds a policy from a spec string: zero, random, greedy, margin[:markup],
// mimic, external:stdio:<command>, external:http:<url>. Throws ConfigError on
// an unknown spec.
std::unique_ptr<Policy> make_policy(const std::string& spec, const AgentId& agent_id, const RngStreams& streams,
                                    const ExternalConfig& external);
// Throws ConfigError when the spec would be rejected by make_policy.
void check_policy_spec(const std::string& spec);

void to_json(nlohmann::json& j, const HistoryEntry& v);
void from_json(const nlohmann::json& j, HistoryEntry& v);
void to_json(nlohmann::json& j, const InventoryLine& v);
void from_json(const nlohmann::json& j, InventoryLine& v);
void to_json(nlohmann::json& j, const BidObservation& v);
void from_json(const nlohmann::json& j, BidObservation& v);
void to_json(nlohmann::json& j, const RetailObservation& v);
void from_json(const nlohmann::json& j, RetailObservation& v);

}  // namespace supplysim
