#include "supplysim/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace supplysim {

void AttentionParams::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
}

double similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("embedding dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
  const auto x = a.components();
  const auto y = b.components();
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) return 0.0;
  return std::clamp(dot / denom, -1.0, 1.0);
}

double attention_weight(double sim, double lambda, double tau) { return std::exp(lambda * sim / tau); }

std::size_t consideration_set_size(double rho, int k_max, std::size_t n_sellers) {
  if (n_sellers == 0) return 0;
  const double raw = std::ceil(rho * static_cast<double>(k_max) - 1e-9);
  const auto wanted = static_cast<std::size_t>(std::max(1.0, raw));
  return std::min(n_sellers, wanted);
}

std::vector<AgentId> consideration_set(std::span<const WeightedSeller> weights, double rho, int k_max, Rng& rng) {
  const std::size_t size = consideration_set_size(rho, k_max, weights.size());
  std::vector<AgentId> chosen;
  chosen.reserve(size);
  std::vector<double> w;
  w.reserve(weights.size());
  for (const auto& ws : weights) w.push_back(ws.weight);
  for (std::size_t k = 0; k < size; ++k) {
    const std::size_t idx = rng.weighted_index(w);
    chosen.push_back(weights[idx].seller_id);
    w[idx] = 0.0;
  }
  return chosen;
}

PurchaseOutcome execute_purchases(int step, std::span<const BuyerVisit> visits,
                                  const std::map<AgentId, RetailPosting>& postings, std::span<AgentState> states,
                                  Rng& rng, bool cascade) {
  std::unordered_map<std::string, AgentState*> by_id;
  for (auto& s : states) by_id.emplace(s.agent_id, &s);

  struct Offer {
    AgentState* seller;
    Money price;
  };

  PurchaseOutcome out;
  std::vector<Offer> offers;
  for (const auto& visit : visits) {
    const BuyerPersona& buyer = *visit.buyer;
    const ItemId& item = buyer.demand.item_id;
    Units remaining = buyer.demand.qty;

    offers.clear();
    for (const auto& seller_id : visit.consideration) {
      auto p = postings.find(seller_id);
      if (p == postings.end()) continue;
      auto price = p->second.prices.find(item);
      if (price == p->second.prices.end()) continue;
      auto s = by_id.find(seller_id);
      if (s == by_id.end()) throw InvariantViolation("consideration set names unknown seller '" + seller_id + "'");
      offers.push_back({s->second, price->second});
    }

    while (remaining > 0 && !offers.empty()) {
      Money best = offers.front().price;
      for (const auto& o : offers) best = std::min(best, o.price);
      std::vector<std::size_t> tied;
      for (std::size_t i = 0; i < offers.size(); ++i) {
        if (offers[i].price == best) tied.push_back(i);
      }
      const std::size_t pick = tied.size() == 1 ? tied.front() : tied[rng.uniform_index(tied.size())];
      const Offer chosen = offers[pick];
      offers.erase(offers.begin() + static_cast<std::ptrdiff_t>(pick));

      AgentState& seller = *chosen.seller;
      const Units stock = seller.units(item);
      if (stock > 0) {
        const Units sold = std::min(remaining, stock);
        seller.inventory[item] = stock - sold;
        seller.funds += sold * chosen.price;
        remaining -= sold;
        out.purchases.push_back({step, buyer.buyer_id, seller.agent_id, item, sold, chosen.price});
      }
      if (remaining > 0 && seller.units(item) == 0) {
        out.stockouts.push_back({step, buyer.buyer_id, seller.agent_id, item, remaining});
        if (!cascade) break;
      }
    }
  }
  return out;
}

}  // namespace supplysim
