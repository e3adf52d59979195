#include "supplysim/persona.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace supplysim {

std::vector<TribeSpec> default_tribes() {
  return {
      {"Thrifty", 0.4, 0.2, std::nullopt, {"cheap", "budget", "value", "save", "deal"},
       "A price-focused shopper who wants {keywords}."},
      {"Ethical", 0.3, 0.8, std::nullopt, {"green", "fair", "eco"},
       "A conscientious shopper who buys {keywords} products."},
      {"Hype", 0.2, 0.9, std::nullopt, {"exclusive", "limited"}, "A trend-driven shopper chasing {keywords} drops."},
      {"Quality", 0.1, 0.5, std::nullopt, {"quality", "craft"}, "A discerning shopper who pays for {keywords}."},
  };
}

void validate_tribes(std::span<const TribeSpec> tribes) {
  if (tribes.empty()) throw ConfigError("at least one tribe is required");
  double total = 0.0;
  std::set<std::string> names;
  for (const auto& t : tribes) {
    if (!names.insert(t.name).second) throw ConfigError("duplicate tribe '" + t.name + "'");
    if (!(t.weight >= 0.0 && t.weight <= 1.0)) throw ConfigError("tribe '" + t.name + "' weight outside [0,1]");
    if (!(t.lambda >= 0.0)) throw ConfigError("tribe '" + t.name + "' has negative lambda");
    if (t.rho && !(*t.rho >= 0.0 && *t.rho <= 1.0)) throw ConfigError("tribe '" + t.name + "' rho outside [0,1]");
    total += t.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("tribe weights sum to " + std::to_string(total) + ", expected 1");
}

std::string render_persona(const TribeSpec& tribe) {
  std::string joined;
  for (std::size_t i = 0; i < tribe.keywords.size(); ++i) {
    if (i > 0) joined += ", ";
    joined += tribe.keywords[i];
  }
  std::string text = tribe.persona_template;
  static constexpr std::string_view slot = "{keywords}";
  for (auto pos = text.find(slot); pos != std::string::npos; pos = text.find(slot, pos + joined.size()))
    text.replace(pos, slot.size(), joined);
  return text;
}

std::vector<BuyerPersona> sample_buyers(std::size_t k, std::span<const TribeSpec> tribes, double rho_default, Rng& rng,
                                        std::string_view id_prefix) {
  validate_tribes(tribes);
  std::vector<double> weights;
  std::vector<std::string> personas;
  for (const auto& t : tribes) {
    weights.push_back(t.weight);
    personas.push_back(render_persona(t));
  }

  std::vector<BuyerPersona> buyers;
  buyers.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t t = rng.weighted_index(weights);
    BuyerPersona b;
    b.buyer_id = std::string(id_prefix) + std::to_string(i);
    b.tribe = tribes[t].name;
    b.persona_text = personas[t];
    b.lambda = tribes[t].lambda;
    b.rho = tribes[t].rho.value_or(rho_default);
    buyers.push_back(std::move(b));
  }
  return buyers;
}

Units total_demand(std::span<const ItemSpec> offers, double ratio) {
  return static_cast<Units>(std::llround(ratio * static_cast<double>(catalog_total_units(offers))));
}

std::vector<BuyerPersona> allocate_demand(std::vector<BuyerPersona> buyers, std::span<const ItemSpec> offers,
                                          double ratio, Rng& rng) {
  if (!(ratio > 0.0)) throw std::invalid_argument("supply-demand ratio must be positive");
  const Units demand = total_demand(offers, ratio);
  if (demand <= 0 || buyers.empty()) return {};

  std::vector<double> supply;
  for (const auto& item : offers) supply.push_back(static_cast<double>(item.quantity));

  for (auto& b : buyers) b.demand = Demand{offers[rng.weighted_index(supply)].item_id, 0};
  for (Units u = 0; u < demand; ++u) buyers[rng.uniform_index(buyers.size())].demand.qty += 1;

  for (auto& b : buyers) {
    if (b.demand.qty > 0) continue;
    auto largest = std::max_element(buyers.begin(), buyers.end(), [](const BuyerPersona& a, const BuyerPersona& c) {
      return a.demand.qty < c.demand.qty;
    });
    if (largest->demand.qty < 2) break;
    largest->demand.qty -= 1;
    b.demand.qty = 1;
  }
  std::erase_if(buyers, [](const BuyerPersona& b) { return b.demand.qty == 0; });
  return buyers;
}

void to_json(nlohmann::json& j, const TribeSpec& v) {
  j = {{"name", v.name},
       {"weight", v.weight},
       {"lambda", v.lambda},
       {"rho", v.rho ? nlohmann::json(*v.rho) : nlohmann::json(nullptr)},
       {"keywords", v.keywords},
       {"persona_template", v.persona_template}};
}

void from_json(const nlohmann::json& j, TribeSpec& v) {
  j.at("name").get_to(v.name);
  j.at("weight").get_to(v.weight);
  j.at("lambda").get_to(v.lambda);
  const auto& rho = j.at("rho");
  v.rho = rho.is_null() ? std::nullopt : std::optional<double>(rho.get<double>());
  j.at("keywords").get_to(v.keywords);
  j.at("persona_template").get_to(v.persona_template);
}

}  // namespace supplysim
