#include "supplysim/step_record.hpp"

#include <cmath>

namespace supplysim {

AgentSnapshot snapshot_of(const AgentState& state) {
  return AgentSnapshot{state.funds, state.inventory, state.unit_cost, state.bankrupt};
}

Money holding_cost(const std::map<ItemId, Units>& inventory, std::span<const ItemSpec> catalog, double rate) {
  if (rate == 0.0) return 0;
  Money value = 0;
  for (const auto& [item, qty] : inventory) {
    if (const ItemSpec* spec = find_item(catalog, item)) value += qty * spec->base_price;
  }
  return static_cast<Money>(std::llround(rate * static_cast<double>(value)));
}

void to_json(nlohmann::json& j, const RoundRecord& v) {
  nlohmann::json bids = nlohmann::json::object();
  for (const auto& [id, bid] : v.bids) bids[id] = bid;
  j = {{"round", v.round},
       {"bids", bids},
       {"overspend", v.overspend},
       {"feedback", v.feedback ? nlohmann::json(*v.feedback) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, RoundRecord& v) {
  j.at("round").get_to(v.round);
  v.bids.clear();
  for (const auto& [id, bid] : j.at("bids").items()) v.bids[id] = bid.get<Bid>();
  j.at("overspend").get_to(v.overspend);
  const auto& fb = j.at("feedback");
  v.feedback = fb.is_null() ? std::nullopt : std::optional<RoundFeedback>(fb.get<RoundFeedback>());
}

void to_json(nlohmann::json& j, const ConsideredSeller& v) { j = {{"seller_id", v.seller_id}, {"sim", v.sim}}; }

void from_json(const nlohmann::json& j, ConsideredSeller& v) {
  j.at("seller_id").get_to(v.seller_id);
  j.at("sim").get_to(v.sim);
}

void to_json(nlohmann::json& j, const BuyerRecord& v) {
  j = {{"buyer_id", v.buyer_id}, {"tribe", v.tribe},   {"lambda", v.lambda},
       {"rho", v.rho},           {"demand", v.demand}, {"consideration", v.consideration}};
}

void from_json(const nlohmann::json& j, BuyerRecord& v) {
  j.at("buyer_id").get_to(v.buyer_id);
  j.at("tribe").get_to(v.tribe);
  j.at("lambda").get_to(v.lambda);
  j.at("rho").get_to(v.rho);
  j.at("demand").get_to(v.demand);
  j.at("consideration").get_to(v.consideration);
}

void to_json(nlohmann::json& j, const PolicyFault& v) {
  j = {{"agent_id", v.agent_id}, {"stage", v.stage}, {"round", v.round}, {"message", v.message}};
}

void from_json(const nlohmann::json& j, PolicyFault& v) {
  j.at("agent_id").get_to(v.agent_id);
  j.at("stage").get_to(v.stage);
  j.at("round").get_to(v.round);
  j.at("message").get_to(v.message);
}

void to_json(nlohmann::json& j, const AgentSnapshot& v) {
  nlohmann::json costs = nlohmann::json::object();
  for (const auto& [item, cost] : v.unit_cost) costs[item] = rational_to_string(cost);
  j = {{"funds", v.funds}, {"inventory", v.inventory}, {"unit_cost", costs}, {"bankrupt", v.bankrupt}};
}

void from_json(const nlohmann::json& j, AgentSnapshot& v) {
  j.at("funds").get_to(v.funds);
  j.at("inventory").get_to(v.inventory);
  v.unit_cost.clear();
  for (const auto& [item, cost] : j.at("unit_cost").items()) v.unit_cost[item] = rational_from_string(cost.get<std::string>());
  j.at("bankrupt").get_to(v.bankrupt);
}

void to_json(nlohmann::json& j, const StepRecord& v) {
  nlohmann::json postings = nlohmann::json::object();
  for (const auto& [id, p] : v.postings) postings[id] = p;
  nlohmann::json snapshot = nlohmann::json::object();
  for (const auto& [id, s] : v.snapshot) snapshot[id] = s;
  j = {{"step", v.step},
       {"offers", v.offers},
       {"rounds", v.rounds},
       {"allocation", v.allocation},
       {"supplier_revenue", v.supplier_revenue},
       {"postings", postings},
       {"buyers", v.buyers},
       {"purchases", v.purchases},
       {"stockouts", v.stockouts},
       {"holding_costs", v.holding_costs},
       {"snapshot", snapshot},
       {"faults", v.faults}};
}

void from_json(const nlohmann::json& j, StepRecord& v) {
  j.at("step").get_to(v.step);
  j.at("offers").get_to(v.offers);
  j.at("rounds").get_to(v.rounds);
  j.at("allocation").get_to(v.allocation);
  j.at("supplier_revenue").get_to(v.supplier_revenue);
  v.postings.clear();
  for (const auto& [id, p] : j.at("postings").items()) v.postings[id] = p.get<RetailPosting>();
  j.at("buyers").get_to(v.buyers);
  j.at("purchases").get_to(v.purchases);
  j.at("stockouts").get_to(v.stockouts);
  j.at("holding_costs").get_to(v.holding_costs);
  v.snapshot.clear();
  for (const auto& [id, s] : j.at("snapshot").items()) v.snapshot[id] = s.get<AgentSnapshot>();
  j.at("faults").get_to(v.faults);
}

void to_json(nlohmann::json& j, const TrajectoryHeader& v) {
  j = {{"schema_version", v.schema_version},
       {"protocol_version", v.protocol_version},
       {"config", v.config},
       {"config_hash", v.config_hash},
       {"agents", v.agents},
       {"policies", v.policies},
       {"initial_funds", v.initial_funds}};
}

void from_json(const nlohmann::json& j, TrajectoryHeader& v) {
  j.at("schema_version").get_to(v.schema_version);
  j.at("protocol_version").get_to(v.protocol_version);
  j.at("config").get_to(v.config);
  j.at("config_hash").get_to(v.config_hash);
  j.at("agents").get_to(v.agents);
  j.at("policies").get_to(v.policies);
  j.at("initial_funds").get_to(v.initial_funds);
}

}  // namespace supplysim
