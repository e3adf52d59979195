#include "supplysim/agents.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "supplysim/bridge.hpp"
#include "supplysim/persona.hpp"

namespace supplysim {

namespace {

constexpr std::array<const char*, 16> kSloganWords = {"cheap",  "deal",  "value",   "save",  "green",   "eco",
                                                      "fair",   "exclusive", "limited", "quality", "craft", "premium",
                                                      "style",  "fresh", "best",    "daily"};

Money ceil_rational(const Rational& r) {
  using boost::multiprecision::cpp_int;
  const cpp_int num = boost::multiprecision::numerator(r);
  const cpp_int den = boost::multiprecision::denominator(r);
  cpp_int q = num / den;
  if (num % den != 0 && num > 0) q += 1;
  return q.convert_to<Money>();
}

Rational markup_rational(double markup) {
  if (!std::isfinite(markup) || markup < 0) throw std::invalid_argument("markup must be a non-negative number");
  return Rational(static_cast<long long>(std::llround(markup * 1e6)), 1000000LL);
}

RetailPosting markup_posting(const RetailObservation& obs, double markup, std::string slogan) {
  RetailPosting posting;
  posting.prices = markup_prices(obs, markup);
  posting.slogan = std::move(slogan);
  return posting;
}

}  // namespace

Bid greedy_value_bid(const BidObservation& obs) {
  std::vector<const ItemSpec*> order;
  for (const auto& offer : obs.offers) order.push_back(&offer);
  std::stable_sort(order.begin(), order.end(),
                   [](const ItemSpec* a, const ItemSpec* b) { return a->base_price < b->base_price; });
  Bid bid;
  Money remaining = obs.funds;
  for (const ItemSpec* offer : order) {
    const Money price = offer->base_price + 1;
    const Units qty = std::min<Units>(offer->quantity, remaining / price);
    if (qty <= 0) continue;
    bid.lines[offer->item_id] = {qty, price};
    remaining -= qty * price;
  }
  return bid;
}

std::map<ItemId, Money> markup_prices(const RetailObservation& obs, double markup) {
  const Rational m = markup_rational(markup);
  std::map<ItemId, Money> prices;
  for (const auto& line : obs.inventory) {
    if (line.qty <= 0) continue;
    auto cost = obs.unit_cost.find(line.item_id);
    if (cost == obs.unit_cost.end()) continue;
    prices[line.item_id] = ceil_rational(m * cost->second);
  }
  return prices;
}

Bid RandomValidPolicy::decide_bid(const BidObservation& obs) {
  Bid bid;
  Money remaining = obs.funds;
  for (const auto& offer : obs.offers) {
    if (!rng_.bernoulli(0.7)) continue;
    Money price = offer.base_price + rng_.uniform_int(0, std::max<Money>(1, offer.base_price / 2));
    if (offer.base_price > 0 && rng_.bernoulli(0.05)) price = offer.base_price - 1;
    const Units max_qty = price > 0 ? std::min<Units>(offer.quantity, remaining / price) : offer.quantity;
    if (max_qty <= 0) continue;
    const Units qty = rng_.uniform_int(1, max_qty);
    bid.lines[offer.item_id] = {qty, price};
    remaining -= qty * price;
  }
  return bid;
}

RetailPosting RandomValidPolicy::decide_retail(const RetailObservation& obs) {
  RetailPosting posting;
  for (const auto& line : obs.inventory) {
    if (line.qty <= 0 || !rng_.bernoulli(0.9)) continue;
    auto cost = obs.unit_cost.find(line.item_id);
    const double basis = cost == obs.unit_cost.end() ? 1.0 : to_double(cost->second);
    const double factor = 0.8 + 1.2 * rng_.uniform01();
    posting.prices[line.item_id] = std::max<Money>(1, std::llround(basis * factor));
  }
  const auto words = rng_.uniform_int(1, 5);
  for (std::int64_t w = 0; w < words; ++w) {
    if (w > 0) posting.slogan += ' ';
    posting.slogan += kSloganWords[rng_.uniform_index(kSloganWords.size())];
  }
  return posting;
}

RetailPosting GreedyValuePolicy::decide_retail(const RetailObservation& obs) { return markup_posting(obs, 1.5, kSlogan); }

RetailPosting MarginPricerPolicy::decide_retail(const RetailObservation& obs) {
  return markup_posting(obs, markup_, kSlogan);
}

RetailPosting MimicSloganPolicy::decide_retail(const RetailObservation& obs) {
  std::string slogan = kDefaultSlogan;
  const HistoryEntry* top = nullptr;
  for (const auto& entry : obs.history) {
    if (entry.step != obs.step - 1) continue;
    if (entry.revenue > 0 && (top == nullptr || entry.revenue > top->revenue)) top = &entry;
  }
  if (top != nullptr) slogan = top->slogan;
  return markup_posting(obs, markup_, std::move(slogan));
}

namespace {

std::optional<double> parse_markup(const std::string& spec, const std::string& prefix) {
  if (spec == prefix) return 1.5;
  if (spec.rfind(prefix + ":", 0) != 0) return std::nullopt;
  const std::string text = spec.substr(prefix.size() + 1);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad markup in policy '" + spec + "'");
  }
  if (used != text.size() || !std::isfinite(value) || value < 0) throw ConfigError("bad markup in policy '" + spec + "'");
  return value;
}

}  // namespace

void check_policy_spec(const std::string& spec) {
  if (spec == "zero" || spec == "random" || spec == "greedy") return;
  if (parse_markup(spec, "margin") || parse_markup(spec, "mimic")) return;
  if (parse_external_spec(spec)) return;
  throw ConfigError("unknown policy '" + spec + "'");
}

std::unique_ptr<Policy> make_policy(const std::string& spec, const AgentId& agent_id, const RngStreams& streams,
                                    const ExternalConfig& external) {
  if (spec == "zero") return std::make_unique<ZeroPolicy>();
  if (spec == "random") return std::make_unique<RandomValidPolicy>(streams.policy_stream(agent_id));
  if (spec == "greedy") return std::make_unique<GreedyValuePolicy>();
  if (auto m = parse_markup(spec, "margin")) return std::make_unique<MarginPricerPolicy>(*m);
  if (auto m = parse_markup(spec, "mimic")) return std::make_unique<MimicSloganPolicy>(*m);
  if (auto ext = parse_external_spec(spec)) return make_external_policy(*ext, agent_id, external);
  throw ConfigError("unknown policy '" + spec + "'");
}

void to_json(nlohmann::json& j, const HistoryEntry& v) {
  j = {{"step", v.step},     {"agent_id", v.agent_id},     {"prices", v.prices},
       {"slogan", v.slogan}, {"units_sold", v.units_sold}, {"revenue", v.revenue}};
}

void from_json(const nlohmann::json& j, HistoryEntry& v) {
  j.at("step").get_to(v.step);
  j.at("agent_id").get_to(v.agent_id);
  j.at("prices").get_to(v.prices);
  j.at("slogan").get_to(v.slogan);
  j.at("units_sold").get_to(v.units_sold);
  j.at("revenue").get_to(v.revenue);
}

void to_json(nlohmann::json& j, const InventoryLine& v) { j = {{"item_id", v.item_id}, {"qty", v.qty}}; }

void from_json(const nlohmann::json& j, InventoryLine& v) {
  j.at("item_id").get_to(v.item_id);
  j.at("qty").get_to(v.qty);
}

void to_json(nlohmann::json& j, const BidObservation& v) {
  j = {{"agent_id", v.agent_id},
       {"step", v.step},
       {"round", v.round},
       {"round_max", v.round_max},
       {"funds", v.funds},
       {"overspent_last_round", v.overspent_last_round},
       {"offers", v.offers},
       {"inventory", v.inventory},
       {"history", v.history},
       {"feedback", v.feedback ? nlohmann::json(*v.feedback) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, BidObservation& v) {
  j.at("agent_id").get_to(v.agent_id);
  j.at("step").get_to(v.step);
  j.at("round").get_to(v.round);
  j.at("round_max").get_to(v.round_max);
  j.at("funds").get_to(v.funds);
  j.at("overspent_last_round").get_to(v.overspent_last_round);
  j.at("offers").get_to(v.offers);
  j.at("inventory").get_to(v.inventory);
  j.at("history").get_to(v.history);
  if (j.at("feedback").is_null()) {
    v.feedback.reset();
  } else {
    v.feedback = j.at("feedback").get<RoundFeedback>();
  }
}

void to_json(nlohmann::json& j, const RetailObservation& v) {
  nlohmann::json costs = nlohmann::json::object();
  for (const auto& [item, cost] : v.unit_cost) costs[item] = rational_to_string(cost);
  j = {{"agent_id", v.agent_id},   {"step", v.step},       {"funds", v.funds},     {"inventory", v.inventory},
       {"unit_cost", costs},       {"catalog", v.catalog}, {"history", v.history}};
}

void from_json(const nlohmann::json& j, RetailObservation& v) {
  j.at("agent_id").get_to(v.agent_id);
  j.at("step").get_to(v.step);
  j.at("funds").get_to(v.funds);
  j.at("inventory").get_to(v.inventory);
  v.unit_cost.clear();
  for (const auto& [item, cost] : j.at("unit_cost").items()) v.unit_cost[item] = rational_from_string(cost.get<std::string>());
  j.at("catalog").get_to(v.catalog);
  j.at("history").get_to(v.history);
}

}  // namespace supplysim
