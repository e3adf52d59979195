#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "supplysim/auction.hpp"
#include "supplysim/config.hpp"
#include "supplysim/types.hpp"

namespace supplysim {

inline constexpr int kSchemaVersion = 1;
inline constexpr int kProtocolVersion = 1;

struct RoundRecord {
  int round{0};
  std::map<AgentId, Bid> bids;          // as submitted
  std::map<AgentId, Money> overspend;   // agents whose bid was voided
  std::optional<RoundFeedback> feedback;  // only for non-final rounds

  bool operator==(const RoundRecord&) const = default;
};

struct ConsideredSeller {
  AgentId seller_id;
  double sim{0.0};

  bool operator==(const ConsideredSeller&) const = default;
};

struct BuyerRecord {
  std::string buyer_id;
  std::string tribe;
  double lambda{0.0};
  double rho{0.0};
  Demand demand;
  std::vector<ConsideredSeller> consideration;  // draw order

  bool operator==(const BuyerRecord&) const = default;
};

struct PolicyFault {
  AgentId agent_id;
  std::string stage;  // bid | retail
  int round{0};       // 0 for retail
  std::string message;

  bool operator==(const PolicyFault&) const = default;
};

struct AgentSnapshot {
  Money funds{0};
  std::map<ItemId, Units> inventory;
  std::map<ItemId, Rational> unit_cost;
  bool bankrupt{false};

  bool operator==(const AgentSnapshot&) const = default;
};

AgentSnapshot snapshot_of(const AgentState& state);

struct StepRecord {
  int step{0};
  Catalog offers;
  std::vector<RoundRecord> rounds;
  Allocation allocation;
  Money supplier_revenue{0};
  std::map<AgentId, RetailPosting> postings;
  std::vector<BuyerRecord> buyers;
  std::vector<PurchaseEvent> purchases;
  std::vector<StockoutAttempt> stockouts;
  std::map<AgentId, Money> holding_costs;
  std::map<AgentId, AgentSnapshot> snapshot;  // end of step
  std::vector<PolicyFault> faults;

  bool operator==(const StepRecord&) const = default;
};

struct TrajectoryHeader {
  int schema_version{kSchemaVersion};
  int protocol_version{kProtocolVersion};
  EpisodeConfig config;
  std::string config_hash;
  std::vector<AgentId> agents;
  std::map<AgentId, std::string> policies;
  Money initial_funds{0};

  bool operator==(const TrajectoryHeader&) const = default;
};

// Holding charge for one agent: round(rate * sum of inventory * base_price).
Money holding_cost(const std::map<ItemId, Units>& inventory, std::span<const ItemSpec> catalog, double rate);

void to_json(nlohmann::json& j, const RoundRecord& v);
void from_json(const nlohmann::json& j, RoundRecord& v);
void to_json(nlohmann::json& j, const ConsideredSeller& v);
void from_json(const nlohmann::json& j, ConsideredSeller& v);
void to_json(nlohmann::json& j, const BuyerRecord& v);
void from_json(const nlohmann::json& j, BuyerRecord& v);
void to_json(nlohmann::json& j, const PolicyFault& v);
void from_json(const nlohmann::json& j, PolicyFault& v);
void to_json(nlohmann::json& j, const AgentSnapshot& v);
void from_json(const nlohmann::json& j, AgentSnapshot& v);
void to_json(nlohmann::json& j, const StepRecord& v);
void from_json(const nlohmann::json& j, StepRecord& v);
void to_json(nlohmann::json& j, const TrajectoryHeader& v);
void from_json(const nlohmann::json& j, TrajectoryHeader& v);

}  // namespace supplysim
