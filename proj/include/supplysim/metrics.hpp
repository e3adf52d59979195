#pragma once

#include <optional>
#include <span>
#include <vector>

#include "supplysim/step_record.hpp"

namespace supplysim {

inline constexpr double kDefaultEps = 1e-9;

struct AgentMetrics {
  AgentId agent_id;
  double npm{0.0};
  double pi{0.0};
  double rar{0.0};
  double iei{0.0};
  double stockout_rate{0.0};
  double bid_efficiency{0.0};
  double osi{1.0};
  double fill_rate{0.0};
  double mms{0.0};
  bool mms_flagged{false};  // no interactions; mms reported as 0

  bool operator==(const AgentMetrics&) const = default;
};

struct MarketIndices {
  int step{0};
  double gini{0.0};
  double theil{0.0};
  double cv{0.0};
  std::optional<double> hhi;  // null while cumulative revenue is zero
  std::optional<double> cr4;
  double active_ratio{0.0};

  bool operator==(const MarketIndices&) const = default;
};

// ---- per-agent primitives ---------------------------------------------------

// R - COGS - H, exact.
Rational step_profit(Money revenue, const Rational& cogs, Money holding);
double npm(std::span<const double> profits, std::span<const double> revenues, double eps = kDefaultEps);
// mean / (population std + eps); 0 for an empty series.
double rar(std::span<const double> profits, double eps = kDefaultEps);
double iei(double units_sold, double avg_inventory, double eps = kDefaultEps);
double stockout_rate(double stockout_units, double attempted_units, double eps = kDefaultEps);
double fill_rate(double units_sold, double units_directed, double eps = kDefaultEps);
double bid_efficiency(double qty_won, double qty_bid, double base_value_won, double spend, double eps = kDefaultEps);
// population std / (mean + eps)
double coefficient_of_variation(std::span<const double> xs, double eps = kDefaultEps);
// 1 / (1 + |CV(orders) - CV(sales)|); 1 with fewer than two points.
double osi(std::span<const double> orders, std::span<const double> sales, double eps = kDefaultEps);

struct MatchScore {
  double value{0.0};
  bool flagged{false};
};
MatchScore mms(std::span<const double> sims);

// ---- market primitives --------------------------------------------------------

// Sorted-rank Gini; 0 when the total is not positive.
double gini(std::span<const double> wealth);
// mean((x/mu) ln(x/mu)) over positive x only; 0 when mu <= 0.
double theil(std::span<const double> wealth);
// population std / mean; 0 when the mean is zero.
double wealth_cv(std::span<const double> wealth);
// Sum of squared shares; null when the total is zero.
std::optional<double> hhi(std::span<const double> values);
// Top-four share; null when the total is zero.
std::optional<double> cr4(std::span<const double> values);

// ---- trajectory-level ---------------------------------------------------------

// Per-step and total quantities extracted from one agent's trajectory.
struct AgentSeries {
  std::vector<Money> revenue;
  std::vector<Rational> cogs;
  std::vector<Money> holding;
  std::vector<double> profit;
  std::vector<Units> units_won;
  std::vector<Units> units_sold;
  std::vector<Units> end_inventory;
  Units qty_bid{0};
  Units qty_won{0};
  Money base_value_won{0};
  Money spend{0};
  Units stockout_units{0};
  Units directed_units{0};
  std::vector<double> interaction_sims;
};

std::vector<AgentSeries> agent_series(const TrajectoryHeader& header, std::span<const StepRecord> steps);
AgentMetrics agent_metrics_from_series(const AgentId& agent_id, const AgentSeries& series, double eps);
std::vector<AgentMetrics> compute_agent_metrics(const TrajectoryHeader& header, std::span<const StepRecord> steps);
std::vector<MarketIndices> compute_market_indices(const TrajectoryHeader& header, std::span<const StepRecord> steps);

void to_json(nlohmann::json& j, const AgentMetrics& v);
void from_json(const nlohmann::json& j, AgentMetrics& v);
void to_json(nlohmann::json& j, const MarketIndices& v);
void from_json(const nlohmann::json& j, MarketIndices& v);

}  // namespace supplysim
