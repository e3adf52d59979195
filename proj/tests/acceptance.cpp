// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "fixtures.hpp"
#include "log_tools.hpp"
#include "supplysim/attention.hpp"
#include "supplysim/auction.hpp"
#include "supplysim/cli.hpp"
#include "supplysim/engine.hpp"
#include "supplysim/metrics.hpp"
#include "supplysim/trajectory.hpp"

using namespace supplysim;
namespace fs = std::filesystem;

namespace {

constexpr double kA1BudgetMs = 1.0;
constexpr double kA2BudgetS = 5.0;
constexpr double kA3BudgetS = 60.0;
constexpr double kA5BudgetS = 30.0;
constexpr double kA5WeightTol = 1e-9;
constexpr double kChiSquareCritical = 13.816;  // df 2, p = 0.001
constexpr double kA6MetricTol = 1e-9;
constexpr double kA8BudgetS = 5.0;
constexpr int kA2Instances = 500;
constexpr int kA3Episodes = 1000;
constexpr int kA5Triples = 10000;
constexpr int kA5Draws = 100000;
constexpr int kA6Trajectories = 1000;
constexpr int kA7DefaultSamples = 150;

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("supplysim_acceptance_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  return run_cli(args, out, err);
}

EpisodeConfig random_default(std::uint64_t seed) {
  auto c = default_config();
  c.default_policy = "random";
  c.seed = seed;
  return c;
}

Outcome a1() {
  const auto start = Clock::now();
  const auto c = default_config();
  const Money value = catalog_total_value(c.catalog);
  const Money funds = initial_funds(c.catalog, c.agents, c.alpha);
  const double ms = seconds_since(start) * 1e3;
  const bool ok = value == 300000 && funds == 22500 && ms < kA1BudgetMs;
  return {ok, "catalog value " + std::to_string(value) + ", initial funds " + std::to_string(funds) + ", " +
                  fmt(ms, 4) + " ms"};
}

Outcome a2() {
  const auto start = Clock::now();
  Rng gen(2024, "acceptance_instances");
  int matched = 0;
  for (int trial = 0; trial < kA2Instances; ++trial) {
    const int n_items = static_cast<int>(gen.uniform_int(1, 3));
    const int n_agents = static_cast<int>(gen.uniform_int(1, 4));
    Catalog offers;
    for (int i = 0; i < n_items; ++i)
      offers.push_back({"i" + std::to_string(i), gen.uniform_int(1, 5), gen.uniform_int(0, 5), ""});
    std::vector<AgentBid> bids;
    for (int a = 0; a < n_agents; ++a) {
      AgentBid ab{"a" + std::to_string(a), {}};
      for (const auto& o : offers) {
        if (gen.bernoulli(0.8)) ab.bid.lines[o.item_id] = {gen.uniform_int(0, 5), gen.uniform_int(0, 7)};
      }
      bids.push_back(ab);
    }
    Rng rng(static_cast<std::uint64_t>(trial), "tie_break");
    const Allocation alloc = settle(offers, bids, rng);
    bool ok = true;
    for (const auto& o : offers) {
      std::vector<fixtures::Line> lines;
      for (const auto& ab : bids) {
        if (auto it = ab.bid.lines.find(o.item_id); it != ab.bid.lines.end())
          lines.push_back({ab.agent_id, it->second.qty, it->second.price});
      }
      std::map<std::string, Units> got;
      for (const auto& [key, award] : alloc.awards) {
        if (key.second != o.item_id) continue;
        got[key.first] = award.qty;
        const auto& line = std::find_if(bids.begin(), bids.end(), [&](const AgentBid& b) {
                             return b.agent_id == key.first;
                           })->bid.lines.at(o.item_id);
        ok = ok && award.unit_price == line.price;
      }
      ok = ok && fixtures::brute_force_outcomes(o.quantity, o.base_price, lines).contains(got);
    }
    matched += ok ? 1 : 0;
  }
  const double s = seconds_since(start);
  return {matched == kA2Instances && s < kA2BudgetS,
          std::to_string(matched) + "/" + std::to_string(kA2Instances) + " instances match, " + fmt(s) + " s"};
}

struct ConservationCounts {
  long money_violations{0};
  long unit_violations{0};
  long negative_funds{0};
  long steps{0};
};

// Checks A3 and A4 together over the same episodes.
ConservationCounts conservation_suite(double& elapsed) {
  const auto start = Clock::now();
  ConservationCounts c;
  for (int e = 0; e < kA3Episodes; ++e) {
    const auto config = random_default(static_cast<std::uint64_t>(e + 1));
    const auto r = run_episode(config);
    std::map<AgentId, Money> funds;
    std::map<AgentId, std::map<ItemId, Units>> procured;
    std::map<AgentId, std::map<ItemId, Units>> sold;
    for (const auto& id : r.header.agents) funds[id] = r.header.initial_funds;
    for (const auto& s : r.steps) {
      ++c.steps;
      Money before = 0;
      for (const auto& [_, f] : funds) before += f;
      Money buyer_spend = 0;
      for (const auto& p : s.purchases) {
        buyer_spend += p.qty * p.unit_price;
        sold[p.seller_id][p.item_id] += p.qty;
      }
      Money holding = 0;
      for (const auto& [_, h] : s.holding_costs) holding += h;
      for (const auto& [key, award] : s.allocation.awards) procured[key.first][key.second] += award.qty;
      Money after = 0;
      for (const auto& [id, snap] : s.snapshot) {
        after += snap.funds;
        funds[id] = snap.funds;
        if (snap.funds < 0) ++c.negative_funds;
        for (const auto& item : config.catalog) {
          const auto inv_it = snap.inventory.find(item.item_id);
          const Units inv = inv_it == snap.inventory.end() ? 0 : inv_it->second;
          if (procured[id][item.item_id] != inv + sold[id][item.item_id]) ++c.unit_violations;
        }
      }
      if (after - before != buyer_spend - s.supplier_revenue - holding) ++c.money_violations;
    }
  }
  elapsed = seconds_since(start);
  return c;
}

Outcome a5() {
  const auto start = Clock::now();
  Rng gen(5, "acceptance_weights");
  double worst = 0.0;
  for (int i = 0; i < kA5Triples; ++i) {
    const double sim = -1.0 + 2.0 * gen.uniform01();
    const double lambda = 2.0 * gen.uniform01();
    const double tau = 0.1 + 4.9 * gen.uniform01();
    const double want = std::exp(lambda * sim / tau);
    worst = std::max(worst, std::abs(attention_weight(sim, lambda, tau) - want) / std::max(1.0, want));
  }

  long grid_bad = 0;
  long grid_total = 0;
  for (int i = 0; i <= 100; ++i) {
    const double rho = i / 100.0;
    for (int k = 1; k <= 25; ++k) {
      const long ceil_rk = (static_cast<long>(i) * k + 99) / 100;
      for (std::size_t n = 1; n <= 25; ++n) {
        const auto want = std::min<long>(static_cast<long>(n), std::max<long>(1, ceil_rk));
        ++grid_total;
        if (static_cast<long>(consideration_set_size(rho, k, n)) != want) ++grid_bad;
      }
    }
  }

  const std::vector<WeightedSeller> weights = {{"s1", 1.0}, {"s2", 2.0}, {"s3", 5.0}};
  std::map<AgentId, long> counts;
  Rng draws(17, "consideration");
  for (int d = 0; d < kA5Draws; ++d) ++counts[consideration_set(weights, 0.01, 20, draws).at(0)];
  double chi2 = 0.0;
  for (const auto& w : weights) {
    const double expected = kA5Draws * w.weight / 8.0;
    const double diff = static_cast<double>(counts[w.seller_id]) - expected;
    chi2 += diff * diff / expected;
  }
  const double s = seconds_since(start);
  const bool ok = worst <= kA5WeightTol && grid_bad == 0 && chi2 < kChiSquareCritical && s < kA5BudgetS;
  std::ostringstream d;
  d << "max weight error " << std::scientific << std::setprecision(2) << worst << ", grid " << (grid_total - grid_bad)
    << "/" << grid_total << ", chi-square " << fmt(chi2) << " < " << fmt(kChiSquareCritical) << ", " << fmt(s) << " s";
  return {ok, d.str()};
}

EpisodeConfig random_small(Rng& gen, std::uint64_t seed) {
  auto c = default_config();
  c.agents = static_cast<int>(gen.uniform_int(2, 6));
  c.steps = static_cast<int>(gen.uniform_int(1, 4));
  c.bidding_rounds = static_cast<int>(gen.uniform_int(1, 3));
  c.buyers_per_step = static_cast<int>(gen.uniform_int(1, 60));
  c.supply_demand_ratio = 0.2 + 1.6 * gen.uniform01();
  c.holding_rate = gen.bernoulli(0.5) ? 0.0 : 0.05 * gen.uniform01();
  c.rho_default = gen.uniform01();
  const auto n_items = gen.uniform_int(1, 4);
  c.catalog.clear();
  for (std::int64_t i = 0; i < n_items; ++i)
    c.catalog.push_back({"g" + std::to_string(i), gen.uniform_int(1, 60), gen.uniform_int(0, 80), ""});
  const char* policies[] = {"random", "greedy", "margin:1.3", "mimic", "zero"};
  c.default_policy = policies[gen.uniform_index(5)];
  for (const auto& id : c.agent_ids()) {
    if (gen.bernoulli(0.5)) c.policy_overrides[id] = policies[gen.uniform_index(5)];
  }
  c.seed = seed;
  return c;
}

Outcome a6() {
  const auto f = fixtures::small_market();
  const auto got = compute_agent_metrics(f.header, f.steps);
  const auto want = fixtures::small_market_expected();
  double worst = 0.0;
  bool flags_ok = got.size() == want.size();
  for (std::size_t i = 0; flags_ok && i < got.size(); ++i) {
    const double diffs[] = {got[i].npm - want[i].npm,
                            got[i].pi - want[i].pi,
                            got[i].rar - want[i].rar,
                            got[i].iei - want[i].iei,
                            got[i].stockout_rate - want[i].stockout_rate,
                            got[i].bid_efficiency - want[i].bid_efficiency,
                            got[i].osi - want[i].osi,
                            got[i].fill_rate - want[i].fill_rate,
                            got[i].mms - want[i].mms};
    for (double d : diffs) worst = std::max(worst, std::abs(d));
    flags_ok = flags_ok && got[i].mms_flagged == want[i].mms_flagged && got[i].agent_id == want[i].agent_id;
  }

  Rng gen(6, "acceptance_trajectories");
  long out_of_range = 0;
  for (int e = 0; e < kA6Trajectories; ++e) {
    const auto r = run_episode(random_small(gen, static_cast<std::uint64_t>(e)));
    for (const auto& m : r.metrics) {
      if (!(m.iei >= 0.0 && m.iei <= 1.0)) ++out_of_range;
      if (!(m.osi > 0.0 && m.osi <= 1.0)) ++out_of_range;
      if (!(m.stockout_rate >= 0.0 && m.stockout_rate <= 1.0)) ++out_of_range;
      if (!(m.fill_rate >= 0.0 && m.fill_rate <= 1.0)) ++out_of_range;
    }
    for (const auto& idx : r.indices) {
      if (!(idx.active_ratio >= 0.0 && idx.active_ratio <= 1.0)) ++out_of_range;
      if (idx.hhi && !(*idx.hhi > 0.0 && *idx.hhi <= 1.0 + 1e-12)) ++out_of_range;
    }
  }

  bool exact = true;
  for (int m = 1; m <= 40; ++m) {
    for (double v : {1.0, 7.0, 22500.0, 0.3}) {
      const std::vector<double> equal(static_cast<std::size_t>(m), v);
      exact = exact && gini(equal) == 0.0 && *hhi(equal) == 1.0 / m;
    }
  }
  const bool ok = worst <= kA6MetricTol && flags_ok && out_of_range == 0 && exact;
  std::ostringstream d;
  d << "fixture max error " << std::scientific << std::setprecision(2) << worst << ", " << out_of_range
    << " range violations over " << kA6Trajectories << " trajectories, equal-share gini/hhi exact: "
    << (exact ? "yes" : "no");
  return {ok, d.str()};
}

Outcome a7() {
  const auto start = Clock::now();
  std::vector<std::string> problems;

  const auto once = to_jsonl(run_episode(random_default(7)));
  if (once != to_jsonl(run_episode(random_default(7)))) problems.push_back("repeat run differs");

  const auto dir1 = scratch("jobs1");
  const auto dir8 = scratch("jobs8");
  const std::string config = (fs::path(SUPPLYSIM_SOURCE_DIR) / "configs/default.yaml").string();
  const int rc1 = cli({"run", "--config", config, "--policy", "all=random", "--seeds", "1..8", "--jobs", "1", "--out", dir1.string()});
  const int rc8 = cli({"run", "--config", config, "--policy", "all=random", "--seeds", "1..8", "--jobs", "8", "--out", dir8.string()});
  if (rc1 != 0 || rc8 != 0) problems.push_back("run failed");
  int identical = 0;
  int pristine_ok = 0;
  for (int s = 1; s <= 8; ++s) {
    const auto name = "episode_seed" + std::to_string(s) + ".jsonl";
    if (fs::exists(dir1 / name) && read_file(dir1 / name) == read_file(dir8 / name)) ++identical;
    if (cli({"replay", "--log", (dir1 / name).string(), "--check"}) == 0) ++pristine_ok;
  }
  if (identical != 8) problems.push_back("jobs 1 vs 8 logs differ");
  if (pristine_ok != 8) problems.push_back("pristine log rejected");

  // Single-field edits, written to disk and checked with replay --check.
  const auto work = scratch("mutations");
  long edits = 0;
  long caught = 0;
  long resealed = 0;
  long resealed_caught = 0;
  auto check_file = [&](const std::string& text) {
    const auto path = work / "edited.jsonl";
    std::ofstream(path, std::ios::trunc) << text;
    return cli({"replay", "--log", path.string(), "--check"});
  };
  auto edit = [&](const std::vector<nlohmann::json>& lines, const logtools::Leaf& leaf) {
    auto copy = lines;
    copy[leaf.line][leaf.pointer] = logtools::perturb(copy[leaf.line][leaf.pointer]);
    std::string text;
    for (const auto& l : copy) text += l.dump() + "\n";
    ++edits;
    if (check_file(text) == 1) ++caught;
    if (!logtools::is_decision(leaf)) {
      ++resealed;
      if (check_file(logtools::mutate(lines, leaf)) == 1) ++resealed_caught;
    }
  };

  {
    auto small = default_config();
    small.agents = 3;
    small.steps = 2;
    small.buyers_per_step = 10;
    small.catalog = {{"tea", 5, 30, "Commodity"}, {"mug", 12, 12, "Standard"}};
    small.default_policy = "random";
    small.seed = 11;
    const auto lines = logtools::split_lines(to_jsonl(run_episode(small)));
    for (const auto& leaf : logtools::leaves(lines)) edit(lines, leaf);
  }
  {
    const auto lines = logtools::split_lines(once);
    const auto all = logtools::leaves(lines);
    Rng pick(77, "acceptance_mutations");
    for (int i = 0; i < kA7DefaultSamples; ++i) edit(lines, all[pick.uniform_index(all.size())]);
  }
  if (caught != edits) problems.push_back("undetected edit");
  if (resealed_caught != resealed) problems.push_back("undetected resealed edit");

  fs::remove_all(dir1);
  fs::remove_all(dir8);
  fs::remove_all(work);
  std::ostringstream d;
  d << "runs identical, jobs 1 vs 8 identical " << identical << "/8, pristine accepted " << pristine_ok << "/8, edits caught "
    << caught << "/" << edits << ", resealed derived edits caught " << resealed_caught << "/" << resealed << ", "
    << fmt(seconds_since(start)) << " s";
  for (const auto& p : problems) d << "; " << p;
  return {problems.empty(), d.str()};
}

Outcome a8() {
  const auto start = Clock::now();
  const auto r = run_episode(default_config());
  const double s = seconds_since(start);
  bool complete = r.metrics.size() == 20 && r.indices.size() == 6;
  for (const auto& m : r.metrics) {
    for (double v : {m.npm, m.pi, m.rar, m.iei, m.stockout_rate, m.bid_efficiency, m.osi, m.fill_rate, m.mms})
      complete = complete && std::isfinite(v);
  }
  for (const auto& idx : r.indices) {
    complete = complete && std::isfinite(idx.gini) && std::isfinite(idx.theil) && std::isfinite(idx.cv) &&
               idx.hhi.has_value() && idx.cr4.has_value() && std::isfinite(idx.active_ratio);
  }
  return {complete && s < kA8BudgetS, std::to_string(r.metrics.size()) + " agents x 9 metrics, " +
                                          std::to_string(r.indices.size()) + " steps x 6 indices, " + fmt(s) + " s"};
}

Outcome a9() {
  auto c = default_config();
  c.default_policy = std::string("external:stdio:") + FAKE_AGENT_PATH + " malformed";
  c.external.timeout_seconds = 10.0;
  try {
    const auto r = run_episode(c);
    bool zero = true;
    for (const auto& m : r.metrics) zero = zero && m.pi == 0.0 && m.bid_efficiency == 0.0 && m.fill_rate == 0.0;
    std::size_t faults = 0;
    for (const auto& s : r.steps) faults += s.faults.size();
    const bool replay_ok = !check_log(to_jsonl(r)).has_value();
    return {zero && faults > 0 && r.steps.size() == 6 && replay_ok,
            "6 steps completed, all 20 agents Pi=0 BidEff=0 FillRate=0: " + std::string(zero ? "yes" : "no") + ", " +
                std::to_string(faults) + " faults logged, replay " + (replay_ok ? "ok" : "failed")};
  } catch (const std::exception& e) {
    return {false, std::string("episode threw: ") + e.what()};
  }
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> checks;
  checks.emplace_back("A1 initialization constants", a1);
  checks.emplace_back("A2 settlement oracle", a2);

  double conservation_s = 0.0;
  std::optional<ConservationCounts> counts;
  auto conservation = [&]() -> const ConservationCounts& {
    if (!counts) counts = conservation_suite(conservation_s);
    return *counts;
  };
  checks.emplace_back("A3 conservation", [&] {
    const auto& c = conservation();
    return Outcome{c.money_violations == 0 && c.unit_violations == 0 && conservation_s < kA3BudgetS,
                   std::to_string(kA3Episodes) + " episodes, " + std::to_string(c.steps) + " steps, " +
                       std::to_string(c.money_violations) + " money and " + std::to_string(c.unit_violations) +
                       " unit violations, " + fmt(conservation_s) + " s"};
  });
  checks.emplace_back("A4 budget safety", [&] {
    const auto& c = conservation();
    return Outcome{c.negative_funds == 0, std::to_string(c.negative_funds) + " negative balances over " +
                                              std::to_string(kA3Episodes) + " episodes at holding rate 0"};
  });
  checks.emplace_back("A5 attention math", a5);
  checks.emplace_back("A6 metric fixtures", a6);
  checks.emplace_back("A7 determinism and replay", a7);
  checks.emplace_back("A8 default episode throughput", a8);
  checks.emplace_back("A9 malformed external agent", a9);

  int failed = 0;
  for (const auto& [name, fn] : checks) {
    Outcome o{false, ""};
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
