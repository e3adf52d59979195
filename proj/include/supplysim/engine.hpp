#pragma once

#include <memory>
#include <vector>

#include "supplysim/agents.hpp"
#include "supplysim/attention.hpp"
#include "supplysim/embedding.hpp"
#include "supplysim/metrics.hpp"
#include "supplysim/step_record.hpp"

namespace supplysim {

// floor(alpha * catalog value / m)
Money initial_funds(std::span<const ItemSpec> catalog, int agents, double alpha);

// Per-step supplier offers under the configured schedule. Items with zero
// quantity in a step are omitted from that step's offers.
std::vector<Catalog> step_offers(const EpisodeConfig& config);

std::unique_ptr<Embedder> make_embedder(const EpisodeConfig& config);
std::vector<std::unique_ptr<Policy>> make_policies(const EpisodeConfig& config);

// Buyers for one step, personas drawn from buyer_rng and demand from demand_rng.
std::vector<BuyerPersona> generate_buyers(const EpisodeConfig& config, const Catalog& offers, int step,
                                          Rng& buyer_rng, Rng& demand_rng);

struct Matching {
  std::vector<BuyerRecord> records;
  std::vector<BuyerVisit> visits;  // point into the buyers passed in
};

// Consideration sets over the sellers that posted a price for each buyer's item.
Matching match_buyers(const EpisodeConfig& config, const std::vector<BuyerPersona>& buyers,
                      const std::map<AgentId, RetailPosting>& postings, const std::vector<AgentId>& agent_order,
                      Embedder& embedder, Rng& rng);

struct EpisodeResult {
  TrajectoryHeader header;
  std::vector<StepRecord> steps;
  std::vector<AgentMetrics> metrics;
  std::vector<MarketIndices> indices;
};

struct RunOptions {
  // Call remote policies of one stage concurrently.
  bool concurrent_policies{true};
};

// Runs one episode. policies[i] acts for config.agent_ids()[i]. Throws
// InvariantViolation, with the offending step record attached, if money or
// units fail to balance.
EpisodeResult run_episode(const EpisodeConfig& config, std::vector<std::unique_ptr<Policy>>& policies,
                          Embedder& embedder, const RunOptions& options = {});
EpisodeResult run_episode(const EpisodeConfig& config, const RunOptions& options = {});

}  // namespace supplysim
