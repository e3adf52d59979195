#include "supplysim/auction.hpp"

#include <algorithm>
#include <string>

namespace supplysim {

Bid drop_unknown_items(const Bid& bid, std::span<const ItemSpec> offers) {
  Bid out;
  for (const auto& [item, line] : bid.lines) {
    if (find_item(offers, item) != nullptr) out.lines.emplace(item, line);
  }
  return out;
}

BidValidation validate_bid(const Bid& bid, Money funds, std::span<const ItemSpec> offers) {
  for (const auto& [item, line] : bid.lines) {
    if (line.qty < 0 || line.price < 0) throw std::invalid_argument("bid line '" + item + "' has a negative field");
  }
  Bid known = drop_unknown_items(bid, offers);
  const Money cost = known.total_cost();
  if (cost > funds) return BudgetViolation{cost, funds, cost - funds};
  return ValidatedBid{std::move(known), cost};
}

Allocation settle(std::span<const ItemSpec> offers, std::span<const AgentBid> valid_bids, Rng& rng) {
  struct Entry {
    const AgentId* agent;
    BidLine line;
  };

  Allocation allocation;
  std::vector<Entry> entries;
  for (const auto& item : offers) {
    entries.clear();
    for (const auto& ab : valid_bids) {
      auto it = ab.bid.lines.find(item.item_id);
      if (it == ab.bid.lines.end()) continue;
      if (it->second.qty <= 0 || it->second.price < item.base_price) continue;
      entries.push_back({&ab.agent_id, it->second});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.line.price > b.line.price; });
    for (std::size_t lo = 0; lo < entries.size();) {
      std::size_t hi = lo + 1;
      while (hi < entries.size() && entries[hi].line.price == entries[lo].line.price) ++hi;
      if (hi - lo > 1) rng.shuffle(std::span<Entry>(entries.data() + lo, hi - lo));
      lo = hi;
    }

    Units remaining = item.quantity;
    for (const auto& e : entries) {
      if (remaining <= 0) break;
      const Units won = std::min(e.line.qty, remaining);
      remaining -= won;
      allocation.awards[{*e.agent, item.item_id}] = Award{won, e.line.price};
    }
  }
  return allocation;
}

Money apply_allocations(std::span<AgentState> states, const Allocation& allocation) {
  Money revenue = 0;
  for (const auto& [key, award] : allocation.awards) {
    const auto& [agent_id, item_id] = key;
    auto it = std::find_if(states.begin(), states.end(), [&](const AgentState& s) { return s.agent_id == agent_id; });
    if (it == states.end()) throw InvariantViolation("allocation names unknown agent '" + agent_id + "'");
    if (award.qty <= 0) continue;

    const Money spend = award.qty * award.unit_price;
    it->funds -= spend;
    revenue += spend;

    const Units held = it->units(item_id);
    auto cost_it = it->unit_cost.find(item_id);
    if (held > 0 && cost_it != it->unit_cost.end()) {
      cost_it->second = (cost_it->second * held + Rational(spend)) / (held + award.qty);
    } else {
      it->unit_cost[item_id] = Rational(award.unit_price);
    }
    it->inventory[item_id] = held + award.qty;
  }
  for (const auto& s : states) {
    if (s.funds < 0 && allocation.cost_for(s.agent_id) > 0)
      throw InvariantViolation("agent '" + s.agent_id + "' has negative funds after settlement (" +
                               std::to_string(s.funds) + ")");
  }
  return revenue;
}

RoundFeedback RoundFeedback::for_agent(const AgentId& agent_id) const {
  RoundFeedback out;
  out.round = round;
  out.items = items;
  if (auto it = agents.find(agent_id); it != agents.end()) out.agents.emplace(agent_id, it->second);
  return out;
}

RoundFeedback make_round_feedback(int round, std::span<const ItemSpec> offers, std::span<const AgentBid> valid_bids,
                                  std::span<const AgentId> overspent, const Allocation& provisional) {
  RoundFeedback fb;
  fb.round = round;
  for (const auto& item : offers) {
    ItemFeedback f;
    f.reserve_price = item.base_price;
    for (const auto& ab : valid_bids) {
      auto it = ab.bid.lines.find(item.item_id);
      if (it == ab.bid.lines.end() || it->second.qty <= 0) continue;
      f.total_qty_demanded += it->second.qty;
      if (!f.highest_bid_price || it->second.price > *f.highest_bid_price) f.highest_bid_price = it->second.price;
    }
    fb.items.emplace(item.item_id, f);
  }
  for (const auto& ab : valid_bids) {
    AgentFeedback af;
    for (const auto& [item, line] : ab.bid.lines) {
      if (line.qty <= 0) continue;
      auto it = provisional.awards.find({ab.agent_id, item});
      af.provisional_win[item] = it != provisional.awards.end() && it->second.qty > 0;
    }
    fb.agents[ab.agent_id] = std::move(af);
  }
  for (const auto& id : overspent) fb.agents[id].overspent = true;
  return fb;
}

void to_json(nlohmann::json& j, const ItemFeedback& v) {
  j = {{"highest_bid_price", v.highest_bid_price ? nlohmann::json(*v.highest_bid_price) : nlohmann::json(nullptr)},
       {"total_qty_demanded", v.total_qty_demanded},
       {"reserve_price", v.reserve_price}};
}

void from_json(const nlohmann::json& j, ItemFeedback& v) {
  const auto& h = j.at("highest_bid_price");
  v.highest_bid_price = h.is_null() ? std::nullopt : std::optional<Money>(h.get<Money>());
  j.at("total_qty_demanded").get_to(v.total_qty_demanded);
  j.at("reserve_price").get_to(v.reserve_price);
}

void to_json(nlohmann::json& j, const AgentFeedback& v) {
  j = {{"overspent", v.overspent}, {"provisional_win", v.provisional_win}};
}

void from_json(const nlohmann::json& j, AgentFeedback& v) {
  j.at("overspent").get_to(v.overspent);
  j.at("provisional_win").get_to(v.provisional_win);
}

void to_json(nlohmann::json& j, const RoundFeedback& v) {
  nlohmann::json items = nlohmann::json::object();
  for (const auto& [id, f] : v.items) items[id] = f;
  nlohmann::json agents = nlohmann::json::object();
  for (const auto& [id, f] : v.agents) agents[id] = f;
  j = {{"round", v.round}, {"items", items}, {"agents", agents}};
}

void from_json(const nlohmann::json& j, RoundFeedback& v) {
  j.at("round").get_to(v.round);
  v.items.clear();
  for (const auto& [id, f] : j.at("items").items()) v.items[id] = f.get<ItemFeedback>();
  v.agents.clear();
  for (const auto& [id, f] : j.at("agents").items()) v.agents[id] = f.get<AgentFeedback>();
}

}  // namespace supplysim
