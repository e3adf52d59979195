#include "supplysim/types.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace supplysim {

namespace {

Money saturating_product(Units qty, Money price) {
  const __int128 p = static_cast<__int128>(qty) * static_cast<__int128>(price);
  if (p > std::numeric_limits<Money>::max()) return std::numeric_limits<Money>::max();
  return static_cast<Money>(p);
}

Money saturating_add(Money a, Money b) {
  const __int128 s = static_cast<__int128>(a) + static_cast<__int128>(b);
  if (s > std::numeric_limits<Money>::max()) return std::numeric_limits<Money>::max();
  return static_cast<Money>(s);
}

}  // namespace

Money catalog_total_value(std::span<const ItemSpec> catalog) {
  Money total = 0;
  for (const auto& item : catalog) total += item.quantity * item.base_price;
  return total;
}

Units catalog_total_units(std::span<const ItemSpec> catalog) {
  Units total = 0;
  for (const auto& item : catalog) total += item.quantity;
  return total;
}

const ItemSpec* find_item(std::span<const ItemSpec> catalog, std::string_view item_id) {
  for (const auto& item : catalog) {
    if (item.item_id == item_id) return &item;
  }
  return nullptr;
}

void validate_catalog(std::span<const ItemSpec> catalog) {
  std::set<std::string_view> seen;
  for (const auto& item : catalog) {
    if (item.item_id.empty()) throw std::invalid_argument("catalog item with empty item_id");
    if (!seen.insert(item.item_id).second)
      throw std::invalid_argument("duplicate item_id '" + item.item_id + "'");
    if (item.base_price < 0)
      throw std::invalid_argument("item '" + item.item_id + "' has negative base_price");
    if (item.quantity < 0)
      throw std::invalid_argument("item '" + item.item_id + "' has negative quantity");
  }
}

Units AgentState::units(std::string_view item_id) const {
  auto it = inventory.find(std::string(item_id));
  return it == inventory.end() ? 0 : it->second;
}

Units AgentState::total_inventory() const {
  Units total = 0;
  for (const auto& [_, qty] : inventory) total += qty;
  return total;
}

Money Bid::total_cost() const {
  Money total = 0;
  for (const auto& [_, line] : lines) total = saturating_add(total, saturating_product(line.qty, line.price));
  return total;
}

Units Bid::total_qty() const {
  Units total = 0;
  for (const auto& [_, line] : lines) total = saturating_add(total, line.qty);
  return total;
}

Units Allocation::units_awarded(std::string_view item_id) const {
  Units total = 0;
  for (const auto& [key, award] : awards) {
    if (key.second == item_id) total += award.qty;
  }
  return total;
}

Money Allocation::cost_for(std::string_view agent_id) const {
  Money total = 0;
  for (const auto& [key, award] : awards) {
    if (key.first == agent_id) total += award.qty * award.unit_price;
  }
  return total;
}

Money Allocation::total_cost() const {
  Money total = 0;
  for (const auto& [_, award] : awards) total += award.qty * award.unit_price;
  return total;
}

std::string truncate_slogan(std::string_view slogan, std::size_t max_words) {
  std::size_t words = 0;
  std::size_t i = 0;
  const std::size_t n = slogan.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(slogan[i]))) ++i;
    if (i >= n) break;
    if (words == max_words) {
      // Cut at the end of the previous word.
      std::size_t end = i;
      while (end > 0 && std::isspace(static_cast<unsigned char>(slogan[end - 1]))) --end;
      return std::string(slogan.substr(0, end));
    }
    while (i < n && !std::isspace(static_cast<unsigned char>(slogan[i]))) ++i;
    ++words;
  }
  return std::string(slogan);
}

EmbeddingVector::EmbeddingVector(std::vector<double> components) : components_(std::move(components)) {
  for (double c : components_) {
    if (!std::isfinite(c)) throw std::invalid_argument("embedding component is not finite");
  }
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double c : components_) sum += c * c;
  return std::sqrt(sum);
}

std::string rational_to_string(const Rational& r) { return r.str(); }

Rational rational_from_string(const std::string& s) {
  try {
    return Rational(s);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed rational '" + s + "'");
  }
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

// ---- JSON ------------------------------------------------------------------

void to_json(nlohmann::json& j, const ItemSpec& v) {
  j = {{"item_id", v.item_id}, {"base_price", v.base_price}, {"quantity", v.quantity}, {"category", v.category}};
}

void from_json(const nlohmann::json& j, ItemSpec& v) {
  j.at("item_id").get_to(v.item_id);
  j.at("base_price").get_to(v.base_price);
  j.at("quantity").get_to(v.quantity);
  v.category = j.value("category", std::string{});
}

void to_json(nlohmann::json& j, const AgentState& v) {
  nlohmann::json costs = nlohmann::json::object();
  for (const auto& [item, cost] : v.unit_cost) costs[item] = rational_to_string(cost);
  j = {{"agent_id", v.agent_id},
       {"funds", v.funds},
       {"inventory", v.inventory},
       {"unit_cost", costs},
       {"bankrupt", v.bankrupt}};
}

void from_json(const nlohmann::json& j, AgentState& v) {
  j.at("agent_id").get_to(v.agent_id);
  j.at("funds").get_to(v.funds);
  j.at("inventory").get_to(v.inventory);
  v.unit_cost.clear();
  for (const auto& [item, cost] : j.at("unit_cost").items()) v.unit_cost[item] = rational_from_string(cost.get<std::string>());
  j.at("bankrupt").get_to(v.bankrupt);
}

void to_json(nlohmann::json& j, const BidLine& v) { j = {{"qty", v.qty}, {"price", v.price}}; }

void from_json(const nlohmann::json& j, BidLine& v) {
  j.at("qty").get_to(v.qty);
  j.at("price").get_to(v.price);
}

void to_json(nlohmann::json& j, const Bid& v) {
  nlohmann::json lines = nlohmann::json::object();
  for (const auto& [item, line] : v.lines) lines[item] = line;
  j = {{"bids", lines}};
}

void from_json(const nlohmann::json& j, Bid& v) {
  v.lines.clear();
  for (const auto& [item, line] : j.at("bids").items()) v.lines[item] = line.get<BidLine>();
}

void to_json(nlohmann::json& j, const Allocation& v) {
  j = nlohmann::json::array();
  for (const auto& [key, award] : v.awards) {
    j.push_back({{"agent_id", key.first}, {"item_id", key.second}, {"qty", award.qty}, {"unit_price", award.unit_price}});
  }
}

void from_json(const nlohmann::json& j, Allocation& v) {
  v.awards.clear();
  for (const auto& entry : j) {
    Award award{entry.at("qty").get<Units>(), entry.at("unit_price").get<Money>()};
    auto key = std::make_pair(entry.at("agent_id").get<AgentId>(), entry.at("item_id").get<ItemId>());
    if (!v.awards.emplace(std::move(key), award).second) throw std::invalid_argument("duplicate allocation entry");
  }
}

void to_json(nlohmann::json& j, const RetailPosting& v) { j = {{"prices", v.prices}, {"slogan", v.slogan}}; }

void from_json(const nlohmann::json& j, RetailPosting& v) {
  j.at("prices").get_to(v.prices);
  j.at("slogan").get_to(v.slogan);
}

void to_json(nlohmann::json& j, const Demand& v) { j = {{"item_id", v.item_id}, {"qty", v.qty}}; }

void from_json(const nlohmann::json& j, Demand& v) {
  j.at("item_id").get_to(v.item_id);
  j.at("qty").get_to(v.qty);
}

void to_json(nlohmann::json& j, const BuyerPersona& v) {
  j = {{"buyer_id", v.buyer_id}, {"tribe", v.tribe},   {"persona_text", v.persona_text},
       {"lambda", v.lambda},     {"rho", v.rho},       {"demand", v.demand}};
}

void from_json(const nlohmann::json& j, BuyerPersona& v) {
  j.at("buyer_id").get_to(v.buyer_id);
  j.at("tribe").get_to(v.tribe);
  v.persona_text = j.value("persona_text", std::string{});
  j.at("lambda").get_to(v.lambda);
  j.at("rho").get_to(v.rho);
  j.at("demand").get_to(v.demand);
}

void to_json(nlohmann::json& j, const PurchaseEvent& v) {
  j = {{"step", v.step},       {"buyer_id", v.buyer_id}, {"seller_id", v.seller_id},
       {"item_id", v.item_id}, {"qty", v.qty},           {"unit_price", v.unit_price}};
}

void from_json(const nlohmann::json& j, PurchaseEvent& v) {
  j.at("step").get_to(v.step);
  j.at("buyer_id").get_to(v.buyer_id);
  j.at("seller_id").get_to(v.seller_id);
  j.at("item_id").get_to(v.item_id);
  j.at("qty").get_to(v.qty);
  j.at("unit_price").get_to(v.unit_price);
}

void to_json(nlohmann::json& j, const StockoutAttempt& v) {
  j = {{"step", v.step},
       {"buyer_id", v.buyer_id},
       {"seller_id", v.seller_id},
       {"item_id", v.item_id},
       {"units_unfilled", v.units_unfilled}};
}

void from_json(const nlohmann::json& j, StockoutAttempt& v) {
  j.at("step").get_to(v.step);
  j.at("buyer_id").get_to(v.buyer_id);
  j.at("seller_id").get_to(v.seller_id);
  j.at("item_id").get_to(v.item_id);
  j.at("units_unfilled").get_to(v.units_unfilled);
}

void to_json(nlohmann::json& j, const EmbeddingVector& v) {
  j = std::vector<double>(v.components().begin(), v.components().end());
}

void from_json(const nlohmann::json& j, EmbeddingVector& v) { v = EmbeddingVector(j.get<std::vector<double>>()); }

}  // namespace supplysim
