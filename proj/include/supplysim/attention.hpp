#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "supplysim/rng.hpp"
#include "supplysim/types.hpp"

namespace supplysim {

struct AttentionParams {
  double tau{1.0};
  int k_max{20};

  // Throws std::invalid_argument unless tau > 0 and k_max >= 1.
  void validate() const;
};

// Cosine similarity. Throws std::invalid_argument on a dimension mismatch;
// returns 0 when either vector is zero.
double similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// exp(lambda * sim / tau)
double attention_weight(double sim, double lambda, double tau);

// min(n_sellers, max(1, ceil(rho * k_max))); 0 when there are no sellers.
// The ceiling ignores float noise below 1e-9 so that e.g. 0.6 * 20 is 12.
std::size_t consideration_set_size(double rho, int k_max, std::size_t n_sellers);

struct WeightedSeller {
  AgentId seller_id;
  double weight{1.0};
};

// Successive weighted sampling without replacement. Output is in draw order.
std::vector<AgentId> consideration_set(std::span<const WeightedSeller> weights, double rho, int k_max, Rng& rng);

struct BuyerVisit {
  const BuyerPersona* buyer{nullptr};
  std::vector<AgentId> consideration;
};

struct PurchaseOutcome {
  std::vector<PurchaseEvent> purchases;
  std::vector<StockoutAttempt> stockouts;
};

// Serves buyers in the given order. Each buyer walks the sellers in its
// consideration set that posted a price for the demanded item, cheapest
// first (price ties drawn with rng). A seller with stock sells
// min(remaining, stock); whatever is left when a seller is empty, or runs
// empty, is a stockout against that seller. With cascade=false the buyer
// stops at its first stockout.
PurchaseOutcome execute_purchases(int step, std::span<const BuyerVisit> visits,
                                  const std::map<AgentId, RetailPosting>& postings, std::span<AgentState> states,
                                  Rng& rng, bool cascade = true);

}  // namespace supplysim
