#include "doctest.h"
#include "supplysim/embedding.hpp"
#include "supplysim/engine.hpp"
#include "supplysim/trajectory.hpp"

using namespace supplysim;

namespace {

EpisodeConfig small_config(const std::string& policy, std::uint64_t seed = 1) {
  auto c = default_config();
  c.agents = 4;
  c.steps = 3;
  c.buyers_per_step = 40;
  c.seed = seed;
  c.default_policy = policy;
  return c;
}

class ThrowingPolicy final : public Policy {
 public:
  std::string name() const override { return "throwing"; }
  Bid decide_bid(const BidObservation&) override { throw PolicyFaultError("no bid today"); }
  RetailPosting decide_retail(const RetailObservation&) override { throw std::runtime_error("boom"); }
};

class NegativePolicy final : public Policy {
 public:
  std::string name() const override { return "negative"; }
  Bid decide_bid(const BidObservation&) override { return Bid{{{"item1", {-3, 60}}}}; }
  RetailPosting decide_retail(const RetailObservation&) override { return {}; }
};

// Bids on everything it can, and tries to sell items it does not hold.
class OverreachPolicy final : public Policy {
 public:
  std::string name() const override { return "overreach"; }
  Bid decide_bid(const BidObservation& obs) override { return greedy_value_bid(obs); }
  RetailPosting decide_retail(const RetailObservation& obs) override {
    RetailPosting p;
    for (const auto& item : obs.catalog) p.prices[item.item_id] = item.base_price * 2;
    p.slogan = std::string(200, 'x') + " and many more words follow here to exceed the limit of twenty five words "
               "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen";
    return p;
  }
};

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("initial funds") {
    CHECK(initial_funds(default_catalog(), 20, 1.5) == 22500);
    CHECK(initial_funds(default_catalog(), 20, 0.0) == 0);
    CHECK(initial_funds(default_catalog(), 3, 1.0) == 100000);
    CHECK(initial_funds(Catalog{{"a", 10, 15, ""}}, 1, 1.0) == 150);
    CHECK(initial_funds(Catalog{{"a", 1, 10, ""}}, 3, 1.0) == 3);
    CHECK(initial_funds(Catalog{{"a", 1, 30, ""}}, 10, 0.1) == 0);
    CHECK(initial_funds(Catalog{{"a", 1, 30, ""}}, 3, 0.1) == 1);
  }

  TEST_CASE("even schedule") {
    const auto offers = step_offers(default_config());
    REQUIRE(offers.size() == 6);
    const std::vector<Units> totals = {172, 170, 166, 164, 164, 164};
    for (std::size_t t = 0; t < 6; ++t) CHECK(catalog_total_units(offers[t]) == totals[t]);
    for (const auto& item : default_catalog()) {
      Units sum = 0;
      for (const auto& step : offers) {
        if (const auto* o = find_item(step, item.item_id)) sum += o->quantity;
      }
      CHECK(sum == item.quantity);
    }
  }

  TEST_CASE("front-loaded and all-at-once schedules release everything") {
    auto c = default_config();
    c.supply_schedule = SupplySchedule::front_loaded;
    auto offers = step_offers(c);
    CHECK(find_item(offers[0], "item1")->quantity == 100);
    CHECK(find_item(offers[1], "item1")->quantity == 50);
    Units total = 0;
    for (const auto& s : offers) total += catalog_total_units(s);
    CHECK(total == 1000);
    c.supply_schedule = SupplySchedule::all_at_step0;
    offers = step_offers(c);
    CHECK(catalog_total_units(offers[0]) == 1000);
    for (std::size_t t = 1; t < offers.size(); ++t) CHECK(offers[t].empty());
  }

  TEST_CASE("buyers demand the configured share of each step's supply") {
    const auto c = default_config();
    const auto offers = step_offers(c);
    Rng b(1, "buyer_gen");
    Rng d(1, "demand_alloc");
    const auto buyers = generate_buyers(c, offers[0], 0, b, d);
    Units total = 0;
    for (const auto& x : buyers) {
      total += x.demand.qty;
      CHECK(x.buyer_id.rfind("s0_b", 0) == 0);
    }
    CHECK(total == std::llround(0.95 * 172));
  }

  TEST_CASE("an inert market does nothing") {
    const auto r = run_episode(small_config("zero"));
    REQUIRE(r.steps.size() == 3);
    for (const auto& s : r.steps) {
      CHECK(s.allocation.empty());
      CHECK(s.purchases.empty());
      CHECK(s.supplier_revenue == 0);
      for (const auto& [id, snap] : s.snapshot) CHECK(snap.funds == r.header.initial_funds);
    }
    for (const auto& m : r.metrics) {
      CHECK(m.pi == 0.0);
      CHECK(m.bid_efficiency == 0.0);
      CHECK(m.fill_rate == 0.0);
      CHECK(m.mms_flagged);
    }
    for (const auto& idx : r.indices) {
      CHECK(idx.gini == 0.0);
      CHECK_FALSE(idx.hhi.has_value());
      CHECK(idx.active_ratio == 0.0);
    }
  }

  TEST_CASE("episodes are deterministic per seed") {
    for (const std::string policy : {"random", "greedy", "mimic"}) {
      const auto a = to_jsonl(run_episode(small_config(policy, 5)));
      const auto b = to_jsonl(run_episode(small_config(policy, 5)));
      CHECK(a == b);
      CHECK(a != to_jsonl(run_episode(small_config(policy, 6))));
    }
  }

  TEST_CASE("money and units balance in every step") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto r = run_episode(small_config("random", seed));
      Money total_funds = r.header.initial_funds * 4;
      std::map<ItemId, Units> released;
      for (const auto& s : r.steps) {
        Money revenue = 0;
        for (const auto& p : s.purchases) revenue += p.qty * p.unit_price;
        Money holding = 0;
        for (const auto& [_, h] : s.holding_costs) holding += h;
        total_funds += revenue - s.supplier_revenue - holding;
        Money snap_funds = 0;
        for (const auto& [_, snap] : s.snapshot) {
          snap_funds += snap.funds;
          CHECK(snap.funds >= 0);
        }
        CHECK(snap_funds == total_funds);
        CHECK(s.allocation.total_cost() == s.supplier_revenue);
        for (const auto& o : s.offers) CHECK(s.allocation.units_awarded(o.item_id) <= o.quantity);
      }
    }
  }

  TEST_CASE("postings keep only held items and short slogans") {
    auto c = small_config("greedy");
    std::vector<std::unique_ptr<Policy>> policies;
    for (int i = 0; i < 4; ++i) policies.push_back(std::make_unique<OverreachPolicy>());
    KeywordEmbedder e(c.tribes);
    const auto r = run_episode(c, policies, e);
    const auto& s = r.steps[0];
    for (const auto& [id, posting] : s.postings) {
      for (const auto& [item, _] : posting.prices) CHECK(s.allocation.awards.contains({id, item}));
      CHECK(truncate_slogan(posting.slogan) == posting.slogan);
    }
  }

  TEST_CASE("policy errors become logged faults and zero actions") {
    auto c = small_config("zero");
    std::vector<std::unique_ptr<Policy>> policies;
    policies.push_back(std::make_unique<ThrowingPolicy>());
    policies.push_back(std::make_unique<NegativePolicy>());
    policies.push_back(std::make_unique<ZeroPolicy>());
    policies.push_back(std::make_unique<ZeroPolicy>());
    KeywordEmbedder e(c.tribes);
    const auto r = run_episode(c, policies, e);
    const auto& faults = r.steps[0].faults;
    auto count = [&](const std::string& agent, const std::string& stage) {
      return std::count_if(faults.begin(), faults.end(),
                           [&](const PolicyFault& f) { return f.agent_id == agent && f.stage == stage; });
    };
    CHECK(count("agent_01", "bid") == 2);
    CHECK(count("agent_01", "retail") == 1);
    CHECK(count("agent_02", "bid") == 2);
    CHECK(count("agent_03", "bid") == 0);
    CHECK(r.steps[0].allocation.empty());
    CHECK(!check_log(to_jsonl(r)).has_value());
  }

  TEST_CASE("heavy holding costs bankrupt agents for good") {
    auto c = small_config("greedy");
    c.holding_rate = 0.9;
    c.buyers_per_step = 1;
    c.supply_demand_ratio = 0.01;
    const auto r = run_episode(c);
    bool any = false;
    std::map<AgentId, bool> went_negative;
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
      for (const auto& [id, snap] : r.steps[t].snapshot) {
        went_negative[id] = went_negative[id] || snap.funds < 0;
        CHECK(snap.bankrupt == went_negative[id]);
        if (t > 0 && r.steps[t - 1].snapshot.at(id).bankrupt) {
          CHECK_FALSE(r.steps[t].rounds.back().bids.contains(id));
          CHECK_FALSE(r.steps[t].postings.contains(id));
          CHECK(snap.inventory == r.steps[t - 1].snapshot.at(id).inventory);
        }
        any = any || snap.bankrupt;
      }
    }
    CHECK(any);
    CHECK(!check_log(to_jsonl(r)).has_value());
  }

  TEST_CASE("concurrent and sequential policy calls give the same log") {
    auto c = small_config("random");
    c.policy_overrides["agent_02"] = std::string("external:stdio:") + FAKE_AGENT_PATH + " zero";
    c.policy_overrides["agent_03"] = std::string("external:stdio:") + FAKE_AGENT_PATH + " unknown";
    const auto a = to_jsonl(run_episode(c, RunOptions{true}));
    const auto b = to_jsonl(run_episode(c, RunOptions{false}));
    CHECK(a == b);
  }

  TEST_CASE("default episode shape") {
    const auto r = run_episode(default_config());
    CHECK(r.header.initial_funds == 22500);
    CHECK(r.steps.size() == 6);
    CHECK(r.metrics.size() == 20);
    CHECK(r.indices.size() == 6);
    for (const auto& s : r.steps) CHECK(s.rounds.size() == 2);
    CHECK(r.steps[0].rounds[0].feedback.has_value());
    CHECK_FALSE(r.steps[0].rounds[1].feedback.has_value());
  }
}
