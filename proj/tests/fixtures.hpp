#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "supplysim/metrics.hpp"
#include "supplysim/rng.hpp"

namespace fixtures {

using namespace supplysim;

// Three agents, three steps, two items (A base 10, B base 20). Every event is
// written out by hand; the expected metric values below follow from them.
struct SmallMarket {
  TrajectoryHeader header;
  std::vector<StepRecord> steps;
};

inline PurchaseEvent sale(int step, const char* buyer, const char* seller, const char* item, Units qty, Money price) {
  return {step, buyer, seller, item, qty, price};
}

inline SmallMarket small_market() {
  SmallMarket f;
  auto& cfg = f.header.config;
  cfg = default_config();
  cfg.agents = 3;
  cfg.steps = 3;
  cfg.catalog = {{"A", 10, 30, "Commodity"}, {"B", 20, 30, "Standard"}};
  f.header.agents = cfg.agent_ids();
  for (const auto& id : f.header.agents) f.header.policies[id] = "scripted";
  f.header.initial_funds = 1000;
  f.header.config_hash = config_hash(cfg);
  const Catalog offers = {{"A", 10, 10, "Commodity"}, {"B", 20, 10, "Standard"}};

  auto bid = [](std::map<ItemId, BidLine> lines) { return Bid{std::move(lines)}; };
  auto snap = [](Money funds, std::map<ItemId, Units> inv) { return AgentSnapshot{funds, std::move(inv), {}, false}; };

  StepRecord s0;
  s0.step = 0;
  s0.offers = offers;
  s0.rounds = {{2, {{"agent_01", bid({{"A", {10, 12}}})}, {"agent_02", bid({{"B", {8, 20}}})}, {"agent_03", bid({{"A", {5, 9}}})}}, {}, {}}};
  s0.allocation.awards = {{{"agent_01", "A"}, {10, 12}}, {{"agent_02", "B"}, {5, 20}}};
  s0.supplier_revenue = 220;
  s0.buyers = {{"s0_b0", "Thrifty", 0.2, 0.6, {"A", 4}, {{"agent_01", 0.8}, {"agent_02", 0.5}}},
               {"s0_b1", "Ethical", 0.8, 0.6, {"B", 2}, {{"agent_02", 0.6}}}};
  s0.purchases = {sale(0, "s0_b0", "agent_01", "A", 4, 20), sale(0, "s0_b1", "agent_02", "B", 2, 30)};
  s0.holding_costs = {{"agent_01", 2}, {"agent_02", 0}, {"agent_03", 0}};
  s0.snapshot = {{"agent_01", snap(958, {{"A", 6}})}, {"agent_02", snap(960, {{"B", 3}})}, {"agent_03", snap(1000, {})}};

  StepRecord s1;
  s1.step = 1;
  s1.offers = offers;
  s1.rounds = {{2, {{"agent_01", bid({{"A", {5, 15}}})}, {"agent_02", bid({})}, {"agent_03", bid({{"B", {4, 22}}})}}, {}, {}}};
  s1.allocation.awards = {{{"agent_01", "A"}, {5, 15}}, {{"agent_03", "B"}, {4, 22}}};
  s1.supplier_revenue = 163;
  s1.buyers = {{"s1_b0", "Hype", 0.9, 0.6, {"A", 8}, {{"agent_01", 0.9}}},
               {"s1_b1", "Quality", 0.5, 0.6, {"B", 5}, {{"agent_02", 0.4}, {"agent_03", 0.7}}}};
  s1.purchases = {sale(1, "s1_b0", "agent_01", "A", 8, 18), sale(1, "s1_b1", "agent_02", "B", 3, 35),
                  sale(1, "s1_b1", "agent_03", "B", 2, 40)};
  s1.stockouts = {{1, "s1_b1", "agent_02", "B", 2}};
  s1.holding_costs = {{"agent_01", 1}, {"agent_02", 0}, {"agent_03", 1}};
  s1.snapshot = {{"agent_01", snap(1026, {{"A", 3}})}, {"agent_02", snap(1065, {{"B", 0}})},
                 {"agent_03", snap(991, {{"B", 2}})}};

  StepRecord s2;
  s2.step = 2;
  s2.offers = offers;
  s2.rounds = {{2, {{"agent_01", bid({{"A", {2, 5}}})}, {"agent_02", bid({})}, {"agent_03", bid({})}}, {}, {}}};
  s2.buyers = {{"s2_b0", "Thrifty", 0.2, 0.6, {"A", 3}, {{"agent_01", 0.5}, {"agent_03", 0.2}}},
               {"s2_b1", "Hype", 0.9, 0.6, {"B", 4}, {{"agent_03", 0.3}}}};
  s2.purchases = {sale(2, "s2_b0", "agent_01", "A", 3, 18), sale(2, "s2_b1", "agent_03", "B", 2, 40)};
  s2.stockouts = {{2, "s2_b1", "agent_03", "B", 2}};
  s2.holding_costs = {{"agent_01", 0}, {"agent_02", 0}, {"agent_03", 0}};
  s2.snapshot = {{"agent_01", snap(1080, {{"A", 0}})}, {"agent_02", snap(1065, {{"B", 0}})},
                 {"agent_03", snap(1071, {{"B", 0}})}};

  f.steps = {s0, s1, s2};
  return f;
}

inline double oracle_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double oracle_pop_std(const std::vector<double>& xs) {
  const double mu = oracle_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

inline double oracle_cv(const std::vector<double>& xs) { return oracle_pop_std(xs) / (oracle_mean(xs) + 1e-9); }

inline double oracle_osi(const std::vector<double>& orders, const std::vector<double>& sales) {
  return 1.0 / (1.0 + std::abs(oracle_cv(orders) - oracle_cv(sales)));
}

// Hand-derived metrics for small_market(). Profits per step:
//   agent_01: 80-48-2, 144-8*147/11-1, 54-3*147/11  (cost basis 147/11 after step 1)
//   agent_02: 60-40, 105-60, 0
//   agent_03: 0, 80-44-1, 80-44
inline std::vector<AgentMetrics> small_market_expected() {
  const double eps = 1e-9;
  std::vector<AgentMetrics> out(3);

  const std::vector<double> p1 = {30.0, 397.0 / 11.0, 153.0 / 11.0};
  out[0] = {"agent_01",
            80.0 / (278.0 + eps),
            80.0,
            oracle_mean(p1) / (oracle_pop_std(p1) + eps),
            15.0 / (15.0 + 3.0 + eps),
            0.0 / (15.0 + eps),
            (15.0 / (17.0 + eps)) * (150.0 / (195.0 + eps)),
            oracle_osi({10, 5, 0}, {4, 8, 3}),
            15.0 / (15.0 + eps),
            (0.8 + 0.9 + 0.5) / 3.0,
            false};

  const std::vector<double> p2 = {20.0, 45.0, 0.0};
  out[1] = {"agent_02",
            65.0 / (165.0 + eps),
            65.0,
            oracle_mean(p2) / (oracle_pop_std(p2) + eps),
            5.0 / (5.0 + 1.0 + eps),
            2.0 / (7.0 + eps),
            (5.0 / (8.0 + eps)) * (100.0 / (100.0 + eps)),
            oracle_osi({5, 0, 0}, {2, 3, 0}),
            5.0 / (7.0 + eps),
            (0.5 + 0.6 + 0.4) / 3.0,
            false};

  const std::vector<double> p3 = {0.0, 35.0, 36.0};
  out[2] = {"agent_03",
            71.0 / (160.0 + eps),
            71.0,
            oracle_mean(p3) / (oracle_pop_std(p3) + eps),
            4.0 / (4.0 + 2.0 / 3.0 + eps),
            2.0 / (6.0 + eps),
            (4.0 / (9.0 + eps)) * (80.0 / (88.0 + eps)),
            oracle_osi({0, 4, 0}, {0, 2, 2}),
            4.0 / (6.0 + eps),
            (0.7 + 0.2 + 0.3) / 3.0,
            false};
  return out;
}

// Gini by the mean absolute pairwise difference.
inline double oracle_gini(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double diff = 0.0;
  for (double a : x) {
    for (double b : x) diff += std::abs(a - b);
  }
  return diff / (2.0 * n * n * oracle_mean(x));
}

inline double oracle_theil(const std::vector<double>& x) {
  const double mu = oracle_mean(x);
  double s = 0.0;
  for (double v : x) {
    if (v > 0) s += (v / mu) * std::log(v / mu);
  }
  return s / static_cast<double>(x.size());
}

// ---- settlement oracle -------------------------------------------------------

struct Line {
  std::string agent;
  Units qty;
  Money price;
};

// Every allocation reachable by some ordering of the lines that respects
// price priority, built by trying all permutations.
inline std::set<std::map<std::string, Units>> brute_force_outcomes(Units supply, Money base, std::vector<Line> lines) {
  std::set<std::map<std::string, Units>> outcomes;
  std::vector<std::size_t> perm(lines.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ordered = true;
    for (std::size_t k = 1; k < perm.size(); ++k) {
      if (lines[perm[k - 1]].price < lines[perm[k]].price) ordered = false;
    }
    if (!ordered) continue;
    std::map<std::string, Units> won;
    Units left = supply;
    for (std::size_t idx : perm) {
      const Line& l = lines[idx];
      if (l.price < base || l.qty <= 0) continue;
      const Units take = std::min(l.qty, left);
      left -= take;
      if (take > 0) won[l.agent] = take;
    }
    outcomes.insert(won);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return outcomes;
}

}  // namespace fixtures
