#include "supplysim/prompts.hpp"

#include <sstream>

namespace supplysim {

const char* const kBidSystemPrompt =
    "You are a retail agent participating in a multi-round sealed-bid auction for supplier inventory. "
    "Output ONLY valid, parseable JSON. No prose.\n"
    "\n"
    "Output schema (strict):\n"
    "{\n"
    " \"bids\": {\n"
    "  \"<item_id>\": {\"qty\":<int>,\"price\":<int>}\n"
    " }\n"
    "}\n"
    "\n"
    "Rules:\n"
    "1. Only bid on items in the supplier offers.\n"
    "2. qty and price must be non-negative integers.\n"
    "3. Do NOT overspend: total spend must not exceed Funds.\n"
    "4. Do NOT bid below base_price.\n"
    "5. JSON must be strict (no trailing commas).";

const char* const kRetailSystemPrompt =
    "You are setting retail prices and a marketing slogan for your current catalog. "
    "Output ONLY valid, parseable JSON.\n"
    "\n"
    "Output schema (strict):\n"
    "{\n"
    "  \"prices\": { \"<item_id>\": <int>, ... },\n"
    "  \"slogan\": \"<string>\"\n"
    "}\n"
    "\n"
    "Rules:\n"
    "1. You do NOT know buyer personas; infer from market_history.\n"
    "2. price must be a non-negative integer.\n"
    "3. Slogan should resonate with inferred personas.\n"
    "4. Keep slogan short (≤ 25 words).";

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_history(const std::vector<HistoryEntry>& history, int step) {
  if (history.empty()) return step == 0 ? "Historical sales: (empty at step 0)" : "Historical sales: (empty)";
  std::ostringstream out;
  out << "Historical sales:\nstep,agent_id,prices,slogan,units_sold,revenue";
  for (const auto& h : history) {
    std::string prices;
    for (const auto& [item, price] : h.prices) {
      if (!prices.empty()) prices += ';';
      prices += item + ":" + std::to_string(price);
    }
    out << '\n'
        << h.step << ',' << h.agent_id << ',' << csv_field(prices) << ',' << csv_field(h.slogan) << ','
        << h.units_sold << ',' << h.revenue;
  }
  return out.str();
}

Prompt render_bid_prompt(const BidObservation& obs) {
  std::ostringstream out;
  out << "Step: " << obs.step << '\n'
      << "Round: " << obs.round << " of " << obs.round_max << '\n'
      << "Funds: " << obs.funds << '\n'
      << "Overspent on most recent bid: " << (obs.overspent_last_round ? "True" : "False") << '\n'
      << "Supplier offers:\n"
      << "item_id,qty,base_price\n";
  for (const auto& o : obs.offers) out << o.item_id << ',' << o.quantity << ',' << o.base_price << '\n';
  out << "Current inventory: ";
  for (std::size_t i = 0; i < obs.inventory.size(); ++i) {
    if (i > 0) out << "; ";
    out << obs.inventory[i].item_id << ',' << obs.inventory[i].qty;
  }
  out << '\n' << render_history(obs.history, obs.step);
  if (obs.feedback) {
    out << "\nPrevious round feedback:\nitem_id,highest_bid,total_qty_demanded,reserve_price,provisional_win";
    const AgentFeedback* mine = nullptr;
    if (auto it = obs.feedback->agents.find(obs.agent_id); it != obs.feedback->agents.end()) mine = &it->second;
    for (const auto& [item, f] : obs.feedback->items) {
      out << '\n' << item << ',';
      if (f.highest_bid_price) {
        out << *f.highest_bid_price;
      } else {
        out << "none";
      }
      bool won = false;
      if (mine != nullptr) {
        auto w = mine->provisional_win.find(item);
        won = w != mine->provisional_win.end() && w->second;
      }
      out << ',' << f.total_qty_demanded << ',' << f.reserve_price << ',' << (won ? "True" : "False");
    }
  }
  return {kBidSystemPrompt, out.str()};
}

Prompt render_retail_prompt(const RetailObservation& obs) {
  std::ostringstream out;
  out << "Step: " << obs.step << '\n' << "Funds: " << obs.funds << '\n' << "Current inventory:\n";
  bool any = false;
  for (const auto& line : obs.inventory) {
    if (line.qty <= 0) continue;
    if (any) out << ", ";
    out << line.item_id << ": " << line.qty;
    any = true;
  }
  if (!any) out << "(none)";
  out << '\n' << render_history(obs.history, obs.step);
  return {kRetailSystemPrompt, out.str()};
}

void to_json(nlohmann::json& j, const Prompt& v) { j = {{"system", v.system}, {"user", v.user}}; }

}  // namespace supplysim
