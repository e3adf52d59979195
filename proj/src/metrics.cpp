#include "supplysim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_map>

namespace supplysim {

namespace {

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double pop_std(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double mu = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

std::optional<double> opt_from_json(const nlohmann::json& j) {
  return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

nlohmann::json opt_to_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

template <typename T>
std::vector<double> as_doubles(const std::vector<T>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(static_cast<double>(x));
  return out;
}

}  // namespace

Rational step_profit(Money revenue, const Rational& cogs, Money holding) {
  return Rational(revenue) - cogs - Rational(holding);
}

double npm(std::span<const double> profits, std::span<const double> revenues, double eps) {
  const double p = std::accumulate(profits.begin(), profits.end(), 0.0);
  const double r = std::accumulate(revenues.begin(), revenues.end(), 0.0);
  return p / (r + eps);
}

double rar(std::span<const double> profits, double eps) {
  if (profits.empty()) return 0.0;
  return mean_of(profits) / (pop_std(profits) + eps);
}

double iei(double units_sold, double avg_inventory, double eps) {
  return units_sold / (units_sold + avg_inventory + eps);
}

double stockout_rate(double stockout_units, double attempted_units, double eps) {
  return stockout_units / (attempted_units + eps);
}

double fill_rate(double units_sold, double units_directed, double eps) { return units_sold / (units_directed + eps); }

double bid_efficiency(double qty_won, double qty_bid, double base_value_won, double spend, double eps) {
  return (qty_won / (qty_bid + eps)) * (base_value_won / (spend + eps));
}

double coefficient_of_variation(std::span<const double> xs, double eps) {
  if (xs.empty()) return 0.0;
  return pop_std(xs) / (mean_of(xs) + eps);
}

double osi(std::span<const double> orders, std::span<const double> sales, double eps) {
  if (orders.size() < 2 || sales.size() < 2) return 1.0;
  return 1.0 / (1.0 + std::abs(coefficient_of_variation(orders, eps) - coefficient_of_variation(sales, eps)));
}

MatchScore mms(std::span<const double> sims) {
  if (sims.empty()) return {0.0, true};
  return {mean_of(sims), false};
}

double gini(std::span<const double> wealth) {
  const std::size_t n = wealth.size();
  if (n == 0) return 0.0;
  std::vector<double> x(wealth.begin(), wealth.end());
  std::sort(x.begin(), x.end());
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  if (!(total > 0.0)) return 0.0;
  // Rank-weighted sum over x - min(x); the rank weights sum to zero.
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weighted += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) * (x[i] - x[0]);
  }
  return weighted / (static_cast<double>(n) * total);
}

double theil(std::span<const double> wealth) {
  if (wealth.empty()) return 0.0;
  const double mu = mean_of(wealth);
  if (!(mu > 0.0)) return 0.0;
  double sum = 0.0;
  for (double x : wealth) {
    if (x > 0.0) sum += (x / mu) * std::log(x / mu);
  }
  return sum / static_cast<double>(wealth.size());
}

double wealth_cv(std::span<const double> wealth) {
  const double mu = mean_of(wealth);
  if (mu == 0.0) return 0.0;
  return pop_std(wealth) / mu;
}

std::optional<double> hhi(std::span<const double> values) {
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (!(total > 0.0)) return std::nullopt;
  // Relative to the largest value, so equal shares are exactly 1 each.
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  double squares = 0.0;
  for (double v : values) {
    sum += v / top;
    squares += (v / top) * (v / top);
  }
  return squares / (sum * sum);
}

std::optional<double> cr4(std::span<const double> values) {
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (!(total > 0.0)) return std::nullopt;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double top = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(4, sorted.size()); ++i) top += sorted[i];
  return top / total;
}

std::vector<AgentSeries> agent_series(const TrajectoryHeader& header, std::span<const StepRecord> steps) {
  const auto& agents = header.agents;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < agents.size(); ++i) index.emplace(agents[i], i);

  struct Basis {
    std::map<ItemId, Units> inventory;
    std::map<ItemId, Rational> unit_cost;
  };
  std::vector<Basis> basis(agents.size());
  std::vector<AgentSeries> out(agents.size());
  const bool purchasers_only = header.config.mms_interaction == MmsInteraction::purchasers;

  auto at = [&](const AgentId& id) -> std::size_t {
    auto it = index.find(id);
    if (it == index.end()) throw std::invalid_argument("trajectory names unknown agent '" + id + "'");
    return it->second;
  };

  for (const auto& step : steps) {
    const std::size_t n = agents.size();
    std::vector<Money> revenue(n, 0);
    std::vector<Rational> cogs(n, Rational(0));
    std::vector<Units> won(n, 0);
    std::vector<Units> sold(n, 0);

    if (!step.rounds.empty()) {
      for (const auto& [id, bid] : step.rounds.back().bids) {
        for (const auto& [item, line] : bid.lines) {
          if (find_item(step.offers, item) != nullptr) out[at(id)].qty_bid += line.qty;
        }
      }
    }

    for (const auto& [key, award] : step.allocation.awards) {
      const std::size_t i = at(key.first);
      const ItemSpec* spec = find_item(step.offers, key.second);
      if (spec == nullptr) throw std::invalid_argument("allocation for item not on offer: " + key.second);
      auto& b = basis[i];
      const Units held = b.inventory[key.second];
      const Money spend = award.qty * award.unit_price;
      auto cost = b.unit_cost.find(key.second);
      if (held > 0 && cost != b.unit_cost.end()) {
        cost->second = (cost->second * held + Rational(spend)) / (held + award.qty);
      } else {
        b.unit_cost[key.second] = Rational(award.unit_price);
      }
      b.inventory[key.second] = held + award.qty;
      won[i] += award.qty;
      out[i].qty_won += award.qty;
      out[i].spend += spend;
      out[i].base_value_won += award.qty * spec->base_price;
    }

    std::map<std::pair<std::string, AgentId>, bool> bought_from;
    for (const auto& p : step.purchases) {
      const std::size_t i = at(p.seller_id);
      auto& b = basis[i];
      auto cost = b.unit_cost.find(p.item_id);
      if (cost == b.unit_cost.end()) throw std::invalid_argument("sale of never-procured item by " + p.seller_id);
      cogs[i] += cost->second * p.qty;
      b.inventory[p.item_id] -= p.qty;
      revenue[i] += p.qty * p.unit_price;
      sold[i] += p.qty;
      bought_from[{p.buyer_id, p.seller_id}] = true;
    }
    for (const auto& s : step.stockouts) out[at(s.seller_id)].stockout_units += s.units_unfilled;

    for (const auto& buyer : step.buyers) {
      for (const auto& c : buyer.consideration) {
        if (purchasers_only && !bought_from.contains({buyer.buyer_id, c.seller_id})) continue;
        out[at(c.seller_id)].interaction_sims.push_back(c.sim);
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      auto it = step.holding_costs.find(agents[i]);
      const Money h = it == step.holding_costs.end() ? 0 : it->second;
      Units inv = 0;
      for (const auto& [_, q] : basis[i].inventory) inv += q;
      auto& s = out[i];
      s.revenue.push_back(revenue[i]);
      s.cogs.push_back(cogs[i]);
      s.holding.push_back(h);
      s.profit.push_back(to_double(step_profit(revenue[i], cogs[i], h)));
      s.units_won.push_back(won[i]);
      s.units_sold.push_back(sold[i]);
      s.end_inventory.push_back(inv);
    }
  }

  for (auto& s : out) {
    const Units total_sold = std::accumulate(s.units_sold.begin(), s.units_sold.end(), Units{0});
    s.directed_units = total_sold + s.stockout_units;
  }
  return out;
}

AgentMetrics agent_metrics_from_series(const AgentId& agent_id, const AgentSeries& s, double eps) {
  AgentMetrics m;
  m.agent_id = agent_id;
  const auto profits = s.profit;
  const auto revenues = as_doubles(s.revenue);
  m.npm = npm(profits, revenues, eps);
  // Pi is summed exactly before conversion.
  Rational total(0);
  for (std::size_t t = 0; t < s.revenue.size(); ++t) total += step_profit(s.revenue[t], s.cogs[t], s.holding[t]);
  m.pi = to_double(total);
  m.rar = rar(profits, eps);

  const double sold = static_cast<double>(std::accumulate(s.units_sold.begin(), s.units_sold.end(), Units{0}));
  const auto inventory = as_doubles(s.end_inventory);
  m.iei = iei(sold, mean_of(inventory), eps);
  m.stockout_rate = stockout_rate(static_cast<double>(s.stockout_units), static_cast<double>(s.directed_units), eps);
  m.bid_efficiency = bid_efficiency(static_cast<double>(s.qty_won), static_cast<double>(s.qty_bid),
                                    static_cast<double>(s.base_value_won), static_cast<double>(s.spend), eps);
  m.osi = osi(as_doubles(s.units_won), as_doubles(s.units_sold), eps);
  m.fill_rate = fill_rate(sold, static_cast<double>(s.directed_units), eps);
  const auto score = mms(s.interaction_sims);
  m.mms = score.value;
  m.mms_flagged = score.flagged;
  return m;
}

std::vector<AgentMetrics> compute_agent_metrics(const TrajectoryHeader& header, std::span<const StepRecord> steps) {
  const auto series = agent_series(header, steps);
  std::vector<AgentMetrics> out;
  out.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i)
    out.push_back(agent_metrics_from_series(header.agents[i], series[i], header.config.eps));
  return out;
}

std::vector<MarketIndices> compute_market_indices(const TrajectoryHeader& header, std::span<const StepRecord> steps) {
  const auto& agents = header.agents;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < agents.size(); ++i) index.emplace(agents[i], i);

  std::vector<double> cumulative(agents.size(), 0.0);
  std::vector<MarketIndices> out;
  for (const auto& step : steps) {
    std::vector<bool> sold(agents.size(), false);
    for (const auto& p : step.purchases) {
      auto it = index.find(p.seller_id);
      if (it == index.end()) throw std::invalid_argument("purchase from unknown agent '" + p.seller_id + "'");
      cumulative[it->second] += static_cast<double>(p.qty * p.unit_price);
      sold[it->second] = true;
    }
    std::vector<double> funds;
    std::size_t active = 0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      auto it = step.snapshot.find(agents[i]);
      if (it == step.snapshot.end()) throw std::invalid_argument("snapshot missing agent '" + agents[i] + "'");
      funds.push_back(static_cast<double>(it->second.funds));
      if (!it->second.bankrupt && sold[i]) ++active;
    }
    MarketIndices mi;
    mi.step = step.step;
    mi.gini = gini(funds);
    mi.theil = theil(funds);
    mi.cv = wealth_cv(funds);
    mi.hhi = hhi(cumulative);
    mi.cr4 = cr4(cumulative);
    mi.active_ratio = agents.empty() ? 0.0 : static_cast<double>(active) / static_cast<double>(agents.size());
    out.push_back(mi);
  }
  return out;
}

void to_json(nlohmann::json& j, const AgentMetrics& v) {
  j = {{"agent_id", v.agent_id},
       {"npm", v.npm},
       {"pi", v.pi},
       {"rar", v.rar},
       {"iei", v.iei},
       {"stockout_rate", v.stockout_rate},
       {"bid_efficiency", v.bid_efficiency},
       {"osi", v.osi},
       {"fill_rate", v.fill_rate},
       {"mms", v.mms},
       {"mms_flagged", v.mms_flagged}};
}

void from_json(const nlohmann::json& j, AgentMetrics& v) {
  j.at("agent_id").get_to(v.agent_id);
  j.at("npm").get_to(v.npm);
  j.at("pi").get_to(v.pi);
  j.at("rar").get_to(v.rar);
  j.at("iei").get_to(v.iei);
  j.at("stockout_rate").get_to(v.stockout_rate);
  j.at("bid_efficiency").get_to(v.bid_efficiency);
  j.at("osi").get_to(v.osi);
  j.at("fill_rate").get_to(v.fill_rate);
  j.at("mms").get_to(v.mms);
  j.at("mms_flagged").get_to(v.mms_flagged);
}

void to_json(nlohmann::json& j, const MarketIndices& v) {
  j = {{"step", v.step},
       {"gini", v.gini},
       {"theil", v.theil},
       {"cv", v.cv},
       {"hhi", opt_to_json(v.hhi)},
       {"cr4", opt_to_json(v.cr4)},
       {"active_ratio", v.active_ratio}};
}

void from_json(const nlohmann::json& j, MarketIndices& v) {
  j.at("step").get_to(v.step);
  j.at("gini").get_to(v.gini);
  j.at("theil").get_to(v.theil);
  j.at("cv").get_to(v.cv);
  v.hhi = opt_from_json(j.at("hhi"));
  v.cr4 = opt_from_json(j.at("cr4"));
  j.at("active_ratio").get_to(v.active_ratio);
}

}  // namespace supplysim
