#include "supplysim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <sstream>

namespace supplysim {

Money initial_funds(std::span<const ItemSpec> catalog, int agents, double alpha) {
  if (agents < 1) throw std::invalid_argument("need at least one agent");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
  const long double v = static_cast<long double>(catalog_total_value(catalog));
  return static_cast<Money>(std::floor(static_cast<long double>(alpha) * v / agents + 1e-9L));
}

std::vector<Catalog> step_offers(const EpisodeConfig& config) {
  const int T = config.steps;
  std::vector<Catalog> out(T);
  for (const auto& item : config.catalog) {
    std::vector<Units> per_step(T, 0);
    switch (config.supply_schedule) {
      case SupplySchedule::even: {
        const Units base = item.quantity / T;
        const Units extra = item.quantity % T;
        for (int t = 0; t < T; ++t) per_step[t] = base + (t < extra ? 1 : 0);
        break;
      }
      case SupplySchedule::front_loaded: {
        Units left = item.quantity;
        for (int t = 0; t < T; ++t) {
          per_step[t] = t == T - 1 ? left : (left + 1) / 2;
          left -= per_step[t];
        }
        break;
      }
      case SupplySchedule::all_at_step0:
        per_step[0] = item.quantity;
        break;
    }
    for (int t = 0; t < T; ++t) {
      if (per_step[t] <= 0) continue;
      ItemSpec offer = item;
      offer.quantity = per_step[t];
      out[t].push_back(offer);
    }
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const EpisodeConfig& config) {
  if (config.embedder.kind == "remote") {
    RemoteEmbedderConfig rc;
    rc.url = config.embedder.url;
    rc.timeout = std::chrono::milliseconds(static_cast<long long>(config.embedder.timeout_seconds * 1000.0));
    return std::make_unique<RemoteEmbedder>(rc);
  }
  return std::make_unique<KeywordEmbedder>(config.tribes, config.embedder.buckets);
}

std::vector<std::unique_ptr<Policy>> make_policies(const EpisodeConfig& config) {
  const RngStreams streams(config.seed);
  std::vector<std::unique_ptr<Policy>> out;
  for (const auto& id : config.agent_ids()) out.push_back(make_policy(config.policy_for(id), id, streams, config.external));
  return out;
}

std::vector<BuyerPersona> generate_buyers(const EpisodeConfig& config, const Catalog& offers, int step,
                                          Rng& buyer_rng, Rng& demand_rng) {
  auto buyers = sample_buyers(static_cast<std::size_t>(config.buyers_per_step), config.tribes, config.rho_default,
                              buyer_rng, "s" + std::to_string(step) + "_b");
  return allocate_demand(std::move(buyers), offers, config.supply_demand_ratio, demand_rng);
}

Matching match_buyers(const EpisodeConfig& config, const std::vector<BuyerPersona>& buyers,
                      const std::map<AgentId, RetailPosting>& postings, const std::vector<AgentId>& agent_order,
                      Embedder& embedder, Rng& rng) {
  std::vector<AgentId> posters;
  std::vector<std::string> texts;
  for (const auto& id : agent_order) {
    auto p = postings.find(id);
    if (p == postings.end() || p->second.prices.empty()) continue;
    posters.push_back(id);
    texts.push_back(p->second.slogan);
  }
  for (const auto& b : buyers) texts.push_back(b.persona_text);
  const auto vectors = embedder.embed_batch(texts);

  std::map<AgentId, const EmbeddingVector*> slogan_vec;
  for (std::size_t i = 0; i < posters.size(); ++i) slogan_vec[posters[i]] = &vectors[i];

  Matching out;
  std::vector<WeightedSeller> candidates;
  std::map<AgentId, double> sims;
  for (std::size_t b = 0; b < buyers.size(); ++b) {
    const BuyerPersona& buyer = buyers[b];
    const EmbeddingVector& persona = vectors[posters.size() + b];
    candidates.clear();
    sims.clear();
    for (const auto& id : posters) {
      if (!postings.at(id).prices.contains(buyer.demand.item_id)) continue;
      const double sim = similarity(*slogan_vec[id], persona);
      sims[id] = sim;
      candidates.push_back({id, attention_weight(sim, buyer.lambda, config.tau)});
    }
    BuyerRecord record{buyer.buyer_id, buyer.tribe, buyer.lambda, buyer.rho, buyer.demand, {}};
    BuyerVisit visit{&buyer, {}};
    if (!candidates.empty()) {
      visit.consideration = consideration_set(candidates, buyer.rho, config.k_max, rng);
      for (const auto& id : visit.consideration) record.consideration.push_back({id, sims[id]});
    }
    out.records.push_back(std::move(record));
    out.visits.push_back(std::move(visit));
  }
  return out;
}

namespace {

template <typename Result, typename Fn>
std::vector<std::optional<Result>> call_policies(const std::vector<std::size_t>& active, bool concurrent,
                                                 std::vector<std::string>& errors, Fn fn) {
  std::vector<std::optional<Result>> results(active.size());
  errors.assign(active.size(), {});
  auto guarded = [&](std::size_t k) {
    try {
      results[k] = fn(active[k]);
    } catch (const PolicyFaultError& e) {
      errors[k] = e.what();
    } catch (const std::exception& e) {
      errors[k] = std::string("policy error: ") + e.what();
    }
  };
  if (!concurrent) {
    for (std::size_t k = 0; k < active.size(); ++k) guarded(k);
    return results;
  }
  std::vector<std::future<void>> futures;
  for (std::size_t k = 0; k < active.size(); ++k) futures.push_back(std::async(std::launch::async, guarded, k));
  for (auto& f : futures) f.get();
  return results;
}

std::vector<HistoryEntry> history_window(const std::vector<HistoryEntry>& all, int step, int window) {
  if (window <= 0) return all;
  std::vector<HistoryEntry> out;
  for (const auto& h : all) {
    if (h.step >= step - window) out.push_back(h);
  }
  return out;
}

[[noreturn]] void invariant_failure(const std::string& message, const StepRecord& record) {
  const nlohmann::json dump = record;
  throw InvariantViolation(message + "\nstep record: " + dump.dump());
}

}  // namespace

EpisodeResult run_episode(const EpisodeConfig& config, std::vector<std::unique_ptr<Policy>>& policies,
                          Embedder& embedder, const RunOptions& options) {
  config.validate();
  const auto ids = config.agent_ids();
  const std::size_t m = ids.size();
  if (policies.size() != m) throw std::invalid_argument("need exactly one policy per agent");

  EpisodeResult result;
  auto& header = result.header;
  header.config = config;
  header.config_hash = config_hash(config);
  header.agents = ids;
  for (std::size_t i = 0; i < m; ++i) header.policies[ids[i]] = config.policy_for(ids[i]);
  header.initial_funds = initial_funds(config.catalog, config.agents, config.alpha);

  std::vector<AgentState> states(m);
  for (std::size_t i = 0; i < m; ++i) {
    states[i].agent_id = ids[i];
    states[i].funds = header.initial_funds;
  }

  const RngStreams streams(config.seed);
  Rng tie_rng = streams.stream(streams::kTieBreak);
  Rng feedback_rng = streams.stream(streams::kFeedbackTieBreak);
  Rng buyer_rng = streams.stream(streams::kBuyerGen);
  Rng demand_rng = streams.stream(streams::kDemandAlloc);
  Rng consideration_rng = streams.stream(streams::kConsideration);
  Rng purchase_rng = streams.stream(streams::kPurchaseTie);

  bool concurrent = false;
  if (options.concurrent_policies) {
    for (const auto& p : policies) concurrent = concurrent || p->is_remote();
  }

  const auto offers_by_step = step_offers(config);
  std::vector<bool> overspent(m, false);
  std::vector<HistoryEntry> history;
  std::vector<std::map<ItemId, Units>> procured(m);
  std::vector<std::map<ItemId, Units>> sold_total(m);
  std::vector<std::string> errors;

  for (int t = 0; t < config.steps; ++t) {
    StepRecord rec;
    rec.step = t;
    rec.offers = offers_by_step[t];
    const Money funds_before = [&] {
      Money s = 0;
      for (const auto& st : states) s += st.funds;
      return s;
    }();

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < m; ++i) {
      if (!states[i].bankrupt) active.push_back(i);
    }
    const auto visible_history = history_window(history, t, config.history_window);

    // Procurement rounds.
    std::optional<RoundFeedback> feedback;
    for (int r = 1; r <= config.bidding_rounds; ++r) {
      const bool final_round = r == config.bidding_rounds;
      auto bids = call_policies<Bid>(active, concurrent, errors, [&](std::size_t i) {
        BidObservation obs;
        obs.agent_id = ids[i];
        obs.step = t;
        obs.round = r;
        obs.round_max = config.bidding_rounds;
        obs.funds = states[i].funds;
        obs.overspent_last_round = overspent[i];
        obs.offers = rec.offers;
        for (const auto& item : config.catalog) obs.inventory.push_back({item.item_id, states[i].units(item.item_id)});
        obs.history = visible_history;
        if (feedback) obs.feedback = feedback->for_agent(ids[i]);
        return policies[i]->decide_bid(obs);
      });

      RoundRecord round;
      round.round = r;
      std::vector<AgentBid> valid;
      std::vector<AgentId> voided;
      for (std::size_t k = 0; k < active.size(); ++k) {
        const std::size_t i = active[k];
        if (!errors[k].empty()) rec.faults.push_back({ids[i], "bid", r, errors[k]});
        const Bid bid = bids[k].value_or(Bid{});
        round.bids[ids[i]] = bid;
        BidValidation v;
        try {
          v = validate_bid(bid, states[i].funds, rec.offers);
        } catch (const std::invalid_argument& e) {
          rec.faults.push_back({ids[i], "bid", r, std::string("invalid bid: ") + e.what()});
          overspent[i] = false;
          continue;
        }
        if (auto* over = std::get_if<BudgetViolation>(&v)) {
          round.overspend[ids[i]] = over->overspend;
          voided.push_back(ids[i]);
          overspent[i] = true;
        } else {
          valid.push_back({ids[i], std::get<ValidatedBid>(v).bid});
          overspent[i] = false;
        }
      }

      if (final_round) {
        rec.allocation = settle(rec.offers, valid, tie_rng);
      } else {
        const Allocation provisional = settle(rec.offers, valid, feedback_rng);
        feedback = make_round_feedback(r, rec.offers, valid, voided, provisional);
        round.feedback = feedback;
      }
      rec.rounds.push_back(std::move(round));
    }
    rec.supplier_revenue = apply_allocations(states, rec.allocation);
    for (const auto& [key, award] : rec.allocation.awards) {
      for (std::size_t i = 0; i < m; ++i) {
        if (ids[i] == key.first) procured[i][key.second] += award.qty;
      }
    }

    // Retail postings.
    auto postings = call_policies<RetailPosting>(active, concurrent, errors, [&](std::size_t i) {
      RetailObservation obs;
      obs.agent_id = ids[i];
      obs.step = t;
      obs.funds = states[i].funds;
      for (const auto& item : config.catalog) {
        const Units q = states[i].units(item.item_id);
        if (q > 0) obs.inventory.push_back({item.item_id, q});
      }
      obs.unit_cost = states[i].unit_cost;
      obs.catalog = config.catalog;
      obs.history = visible_history;
      return policies[i]->decide_retail(obs);
    });
    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::size_t i = active[k];
      if (!errors[k].empty()) rec.faults.push_back({ids[i], "retail", 0, errors[k]});
      const RetailPosting raw = postings[k].value_or(RetailPosting{});
      RetailPosting posting;
      posting.slogan = truncate_slogan(raw.slogan);
      for (const auto& [item, price] : raw.prices) {
        if (price < 0) {
          rec.faults.push_back({ids[i], "retail", 0, "negative price for " + item});
          continue;
        }
        if (states[i].units(item) > 0) posting.prices[item] = price;
      }
      rec.postings[ids[i]] = std::move(posting);
    }

    // Buyers and purchases.
    const auto buyers = generate_buyers(config, rec.offers, t, buyer_rng, demand_rng);
    auto matching = match_buyers(config, buyers, rec.postings, ids, embedder, consideration_rng);
    rec.buyers = std::move(matching.records);
    auto outcome = execute_purchases(t, matching.visits, rec.postings, states, purchase_rng, config.purchase_cascade);
    rec.purchases = std::move(outcome.purchases);
    rec.stockouts = std::move(outcome.stockouts);

    Money buyer_spend = 0;
    std::vector<Units> units_sold(m, 0);
    std::vector<Money> revenue(m, 0);
    for (const auto& p : rec.purchases) {
      buyer_spend += p.qty * p.unit_price;
      for (std::size_t i = 0; i < m; ++i) {
        if (ids[i] != p.seller_id) continue;
        units_sold[i] += p.qty;
        revenue[i] += p.qty * p.unit_price;
        sold_total[i][p.item_id] += p.qty;
      }
    }

    // Holding costs and bankruptcy.
    Money holding_total = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const Money h = holding_cost(states[i].inventory, config.catalog, config.holding_rate);
      rec.holding_costs[ids[i]] = h;
      states[i].funds -= h;
      holding_total += h;
      if (states[i].funds < 0) states[i].bankrupt = true;
      rec.snapshot[ids[i]] = snapshot_of(states[i]);
    }

    // Money and unit identities.
    Money funds_after = 0;
    for (const auto& st : states) funds_after += st.funds;
    if (funds_after - funds_before != buyer_spend - rec.supplier_revenue - holding_total) {
      std::ostringstream msg;
      msg << "money identity failed at step " << t << ": delta " << (funds_after - funds_before) << " vs "
          << (buyer_spend - rec.supplier_revenue - holding_total);
      invariant_failure(msg.str(), rec);
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::set<ItemId> items;
      for (const auto& [item, _] : procured[i]) items.insert(item);
      for (const auto& [item, _] : states[i].inventory) items.insert(item);
      for (const auto& item : items) {
        const Units inv = states[i].units(item);
        if (inv < 0) invariant_failure("negative inventory for " + ids[i] + " " + item, rec);
        const Units in = procured[i].contains(item) ? procured[i].at(item) : 0;
        const Units out = sold_total[i].contains(item) ? sold_total[i].at(item) : 0;
        if (in != inv + out) invariant_failure("unit identity failed for " + ids[i] + " " + item, rec);
      }
    }

    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::size_t i = active[k];
      const auto& posting = rec.postings.at(ids[i]);
      history.push_back({t, ids[i], posting.prices, posting.slogan, units_sold[i], revenue[i]});
    }
    result.steps.push_back(std::move(rec));
  }

  result.metrics = compute_agent_metrics(header, result.steps);
  result.indices = compute_market_indices(header, result.steps);
  return result;
}

EpisodeResult run_episode(const EpisodeConfig& config, const RunOptions& options) {
  auto policies = make_policies(config);
  auto embedder = make_embedder(config);
  return run_episode(config, policies, *embedder, options);
}

}  // namespace supplysim
