#include "supplysim/trajectory.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace supplysim {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

ReplayIssue issue(int line, std::string message, std::optional<int> step = std::nullopt,
                  std::optional<AgentId> agent = std::nullopt) {
  return {line, step, std::move(agent), std::move(message)};
}

std::vector<nlohmann::json> build_lines(const EpisodeResult& result) {
  std::vector<nlohmann::json> lines;
  nlohmann::json h = result.header;
  h["type"] = "header";
  lines.push_back(std::move(h));
  for (const auto& s : result.steps) {
    nlohmann::json j = s;
    j["type"] = "step";
    lines.push_back(std::move(j));
  }
  lines.push_back({{"type", "footer"}, {"metrics", result.metrics}, {"market_indices", result.indices}});
  return lines;
}

// ---- semantic replay --------------------------------------------------------

class Replayer {
 public:
  explicit Replayer(const TrajectoryLog& log)
      : log_(log),
        config_(log.header.config),
        streams_(config_.seed),
        tie_rng_(streams_.stream(streams::kTieBreak)),
        feedback_rng_(streams_.stream(streams::kFeedbackTieBreak)),
        buyer_rng_(streams_.stream(streams::kBuyerGen)),
        demand_rng_(streams_.stream(streams::kDemandAlloc)),
        consideration_rng_(streams_.stream(streams::kConsideration)),
        purchase_rng_(streams_.stream(streams::kPurchaseTie)) {}

  std::optional<ReplayIssue> run() {
    if (auto i = check_header()) return i;
    ids_ = config_.agent_ids();
    for (const auto& id : ids_) states_.push_back({id, log_.header.initial_funds, {}, {}, false});
    if (config_.embedder.kind == "keyword") embedder_ = make_embedder(config_);
    offers_ = step_offers(config_);
    if (static_cast<int>(log_.steps.size()) != config_.steps)
      return issue(static_cast<int>(log_.steps.size()) + 2, "expected " + std::to_string(config_.steps) + " steps, found " +
                                                                std::to_string(log_.steps.size()));
    for (std::size_t t = 0; t < log_.steps.size(); ++t) {
      if (auto i = check_step(static_cast<int>(t), log_.steps[t])) return i;
    }
    return std::nullopt;
  }

 private:
  std::optional<ReplayIssue> check_header() {
    const auto& h = log_.header;
    if (h.schema_version != kSchemaVersion) return issue(1, "unsupported schema_version");
    if (h.protocol_version != kProtocolVersion) return issue(1, "unsupported protocol_version");
    try {
      config_.validate();
    } catch (const std::exception& e) {
      return issue(1, std::string("invalid config: ") + e.what());
    }
    if (h.agents != config_.agent_ids()) return issue(1, "agent list does not match config");
    for (const auto& id : h.agents) {
      auto p = h.policies.find(id);
      if (p == h.policies.end() || p->second != config_.policy_for(id))
        return issue(1, "policy binding does not match config", std::nullopt, id);
    }
    if (h.policies.size() != h.agents.size()) return issue(1, "policy map names unknown agents");
    if (h.initial_funds != initial_funds(config_.catalog, config_.agents, config_.alpha))
      return issue(1, "initial_funds does not match config");
    return std::nullopt;
  }

  std::optional<ReplayIssue> check_step(int t, const StepRecord& rec) {
    const int line = t + 2;
    auto fail = [&](std::string msg, std::optional<AgentId> agent = std::nullopt) {
      return issue(line, std::move(msg), t, std::move(agent));
    };
    if (rec.step != t) return fail("step index is " + std::to_string(rec.step));
    if (rec.offers != offers_[t]) return fail("supplier offers differ from the schedule");

    std::set<AgentId> active;
    for (const auto& s : states_) {
      if (!s.bankrupt) active.insert(s.agent_id);
    }

    if (static_cast<int>(rec.rounds.size()) != config_.bidding_rounds) return fail("wrong number of bidding rounds");
    for (int r = 1; r <= config_.bidding_rounds; ++r) {
      const RoundRecord& round = rec.rounds[r - 1];
      const bool final_round = r == config_.bidding_rounds;
      if (round.round != r) return fail("round numbering is broken");
      for (const auto& [id, _] : round.bids) {
        if (!active.contains(id)) return fail("bid from an inactive agent", id);
      }
      for (const auto& id : active) {
        if (!round.bids.contains(id)) return fail("missing bid in round " + std::to_string(r), id);
      }
      std::vector<AgentBid> valid;
      std::vector<AgentId> voided;
      std::map<AgentId, Money> overspend;
      for (const auto& s : states_) {
        if (!active.contains(s.agent_id)) continue;
        BidValidation v;
        try {
          v = validate_bid(round.bids.at(s.agent_id), s.funds, rec.offers);
        } catch (const std::invalid_argument&) {
          continue;
        }
        if (auto* over = std::get_if<BudgetViolation>(&v)) {
          overspend[s.agent_id] = over->overspend;
          voided.push_back(s.agent_id);
        } else {
          valid.push_back({s.agent_id, std::get<ValidatedBid>(v).bid});
        }
      }
      if (overspend != round.overspend) {
        for (const auto& id : active) {
          const bool a = overspend.contains(id);
          const bool b = round.overspend.contains(id);
          if (a != b || (a && overspend.at(id) != round.overspend.at(id)))
            return fail("overspend record does not match the bid in round " + std::to_string(r), id);
        }
        return fail("overspend record names an unknown agent");
      }
      if (final_round) {
        if (round.feedback) return fail("final round carries feedback");
        const Allocation alloc = settle(rec.offers, valid, tie_rng_);
        if (alloc != rec.allocation) return fail(first_allocation_diff(alloc, rec.allocation), allocation_agent(alloc, rec.allocation));
      } else {
        const Allocation provisional = settle(rec.offers, valid, feedback_rng_);
        const RoundFeedback fb = make_round_feedback(r, rec.offers, valid, voided, provisional);
        if (!round.feedback || *round.feedback != fb) return fail("round " + std::to_string(r) + " feedback differs");
      }
    }

    const Money revenue = apply_allocations(states_, rec.allocation);
    if (revenue != rec.supplier_revenue) return fail("supplier revenue differs");

    for (const auto& [id, _] : rec.postings) {
      if (!active.contains(id)) return fail("posting from an inactive agent", id);
    }
    for (const auto& s : states_) {
      if (!active.contains(s.agent_id)) continue;
      auto p = rec.postings.find(s.agent_id);
      if (p == rec.postings.end()) return fail("missing retail posting", s.agent_id);
      if (truncate_slogan(p->second.slogan) != p->second.slogan) return fail("slogan exceeds the word limit", s.agent_id);
      for (const auto& [item, price] : p->second.prices) {
        if (price < 0 || s.units(item) <= 0) return fail("posting prices an item not held", s.agent_id);
      }
    }

    const auto buyers = generate_buyers(config_, rec.offers, t, buyer_rng_, demand_rng_);
    if (buyers.size() != rec.buyers.size()) return fail("buyer count differs");
    for (std::size_t b = 0; b < buyers.size(); ++b) {
      const auto& g = buyers[b];
      const auto& r = rec.buyers[b];
      if (g.buyer_id != r.buyer_id || g.tribe != r.tribe || g.lambda != r.lambda || g.rho != r.rho || g.demand != r.demand)
        return fail("buyer " + r.buyer_id + " differs from generation");
    }

    if (embedder_) {
      const auto matching = match_buyers(config_, buyers, rec.postings, ids_, *embedder_, consideration_rng_);
      for (std::size_t b = 0; b < buyers.size(); ++b) {
        if (matching.records[b] != rec.buyers[b]) return fail("consideration set of " + rec.buyers[b].buyer_id + " differs");
      }
    } else {
      for (const auto& r : rec.buyers) {
        for (const auto& c : r.consideration) {
          auto p = rec.postings.find(c.seller_id);
          if (p == rec.postings.end() || !p->second.prices.contains(r.demand.item_id))
            return fail("buyer " + r.buyer_id + " considers a seller without a price", c.seller_id);
          if (!(c.sim >= -1.0 && c.sim <= 1.0)) return fail("similarity out of range", c.seller_id);
        }
      }
    }

    std::vector<BuyerVisit> visits;
    for (std::size_t b = 0; b < buyers.size(); ++b) {
      BuyerVisit v{&buyers[b], {}};
      for (const auto& c : rec.buyers[b].consideration) v.consideration.push_back(c.seller_id);
      visits.push_back(std::move(v));
    }
    PurchaseOutcome outcome;
    try {
      outcome = execute_purchases(t, visits, rec.postings, states_, purchase_rng_, config_.purchase_cascade);
    } catch (const std::exception& e) {
      return fail(std::string("purchases cannot be replayed: ") + e.what());
    }
    if (outcome.purchases != rec.purchases) return fail("purchases differ", first_purchase_diff(outcome.purchases, rec.purchases));
    if (outcome.stockouts != rec.stockouts) return fail("stockouts differ");

    for (auto& s : states_) {
      const Money h = holding_cost(s.inventory, config_.catalog, config_.holding_rate);
      auto it = rec.holding_costs.find(s.agent_id);
      if (it == rec.holding_costs.end() || it->second != h) return fail("holding cost differs", s.agent_id);
      s.funds -= h;
      if (s.funds < 0) s.bankrupt = true;
      auto snap = rec.snapshot.find(s.agent_id);
      if (snap == rec.snapshot.end()) return fail("snapshot missing", s.agent_id);
      const AgentSnapshot expected = snapshot_of(s);
      if (snap->second.funds != expected.funds)
        return fail("funds recorded " + std::to_string(snap->second.funds) + ", replayed " + std::to_string(expected.funds),
                    s.agent_id);
      if (snap->second.inventory != expected.inventory) return fail("inventory differs", s.agent_id);
      if (snap->second.unit_cost != expected.unit_cost) return fail("unit cost differs", s.agent_id);
      if (snap->second.bankrupt != expected.bankrupt) return fail("bankrupt flag differs", s.agent_id);
    }
    if (rec.holding_costs.size() != states_.size() || rec.snapshot.size() != states_.size())
      return fail("records name unknown agents");
    for (const auto& f : rec.faults) {
      if (!std::count(ids_.begin(), ids_.end(), f.agent_id)) return fail("fault names an unknown agent", f.agent_id);
    }
    return std::nullopt;
  }

  static std::string first_allocation_diff(const Allocation& replayed, const Allocation& recorded) {
    return "allocation differs (replayed " + std::to_string(replayed.awards.size()) + " awards, recorded " +
           std::to_string(recorded.awards.size()) + ")";
  }

  static std::optional<AgentId> allocation_agent(const Allocation& a, const Allocation& b) {
    for (const auto& [key, award] : a.awards) {
      auto it = b.awards.find(key);
      if (it == b.awards.end() || it->second != award) return key.first;
    }
    for (const auto& [key, _] : b.awards) {
      if (!a.awards.contains(key)) return key.first;
    }
    return std::nullopt;
  }

  static std::optional<AgentId> first_purchase_diff(const std::vector<PurchaseEvent>& a,
                                                    const std::vector<PurchaseEvent>& b) {
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      if (a[i] != b[i]) return b[i].seller_id;
    }
    return std::nullopt;
  }

  const TrajectoryLog& log_;
  EpisodeConfig config_;
  RngStreams streams_;
  Rng tie_rng_;
  Rng feedback_rng_;
  Rng buyer_rng_;
  Rng demand_rng_;
  Rng consideration_rng_;
  Rng purchase_rng_;
  std::vector<AgentId> ids_;
  std::vector<AgentState> states_;
  std::unique_ptr<Embedder> embedder_;
  std::vector<Catalog> offers_;
};

}  // namespace

std::string ReplayIssue::describe() const {
  std::string out = "line " + std::to_string(line);
  if (step) out += ", step " + std::to_string(*step);
  if (agent) out += ", agent " + *agent;
  return out + ": " + message;
}

std::string line_digest(const std::string& previous, const nlohmann::json& line_without_digest) {
  return hex64(fnv1a64(previous + line_without_digest.dump()));
}

std::string to_jsonl(const EpisodeResult& result) {
  std::string out;
  std::string prev;
  for (auto& line : build_lines(result)) {
    prev = line_digest(prev, line);
    line["digest"] = prev;
    out += line.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const EpisodeResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_jsonl(result);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TrajectoryLog parse_jsonl(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.size() < 2) throw LogError(issue(static_cast<int>(lines.size()) + 1, "log needs a header and a footer"));
  TrajectoryLog log;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const int line_no = static_cast<int>(n) + 1;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[n]);
    } catch (const std::exception& e) {
      throw LogError(issue(line_no, std::string("not valid JSON: ") + e.what()));
    }
    const std::string expected = n == 0 ? "header" : (n + 1 == lines.size() ? "footer" : "step");
    try {
      if (!j.is_object() || j.value("type", std::string{}) != expected)
        throw LogError(issue(line_no, "expected a " + expected + " line"));
      if (expected == "header") {
        log.header = j.get<TrajectoryHeader>();
      } else if (expected == "step") {
        log.steps.push_back(j.get<StepRecord>());
      } else {
        log.metrics = j.at("metrics").get<std::vector<AgentMetrics>>();
        log.indices = j.at("market_indices").get<std::vector<MarketIndices>>();
      }
    } catch (const LogError&) {
      throw;
    } catch (const std::exception& e) {
      std::optional<int> step;
      if (expected == "step") step = static_cast<int>(n) - 1;
      throw LogError(issue(line_no, std::string("malformed ") + expected + ": " + e.what(), step));
    }
  }
  return log;
}

std::optional<ReplayIssue> check_log(const std::string& text) {
  TrajectoryLog log;
  try {
    log = parse_jsonl(text);
  } catch (const LogError& e) {
    return e.issue();
  }

  try {
    if (auto i = Replayer(log).run()) return i;
  } catch (const std::exception& e) {
    return issue(1, std::string("replay aborted: ") + e.what());
  }

  const auto lines = split_lines(text);
  std::string prev;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    auto j = nlohmann::json::parse(lines[n]);
    auto d = j.find("digest");
    if (d == j.end() || !d->is_string()) return issue(static_cast<int>(n) + 1, "missing digest");
    const std::string recorded = d->get<std::string>();
    j.erase("digest");
    const std::string expected = line_digest(prev, j);
    if (recorded != expected) {
      std::optional<int> step;
      if (n > 0 && n + 1 < lines.size()) step = static_cast<int>(n) - 1;
      return issue(static_cast<int>(n) + 1, "digest mismatch", step);
    }
    prev = recorded;
  }

  if (log.header.config_hash != config_hash(log.header.config)) return issue(1, "config_hash does not match config");

  const int footer = static_cast<int>(lines.size());
  const auto metrics = compute_agent_metrics(log.header, log.steps);
  if (metrics.size() != log.metrics.size()) return issue(footer, "metric rows differ");
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (metrics[i] != log.metrics[i]) return issue(footer, "recomputed metrics differ", std::nullopt, metrics[i].agent_id);
  }
  const auto indices = compute_market_indices(log.header, log.steps);
  if (indices != log.indices) return issue(footer, "recomputed market indices differ");
  return std::nullopt;
}

}  // namespace supplysim
