#include "supplysim/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "supplysim/rng.hpp"

namespace supplysim {

namespace {

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) throw ConfigError("'" + where + "' must be a mapping", line_of(node));
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in '" + where + "'", line_of(kv.first));
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, T& out) {
  const YAML::Node node = parent[key];
  if (!node) return;
  try {
    out = node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("invalid value for '") + key + "'", line_of(node));
  }
}

SupplySchedule parse_schedule(const YAML::Node& node) {
  const auto s = node.as<std::string>();
  if (s == "even") return SupplySchedule::even;
  if (s == "front_loaded") return SupplySchedule::front_loaded;
  if (s == "all_at_step0") return SupplySchedule::all_at_step0;
  throw ConfigError("unknown supply_schedule '" + s + "'", line_of(node));
}

MmsInteraction parse_mms(const YAML::Node& node) {
  const auto s = node.as<std::string>();
  if (s == "consideration") return MmsInteraction::consideration;
  if (s == "purchasers") return MmsInteraction::purchasers;
  throw ConfigError("unknown mms_interaction '" + s + "'", line_of(node));
}

SupplySchedule schedule_from_string(const std::string& s) {
  if (s == "even") return SupplySchedule::even;
  if (s == "front_loaded") return SupplySchedule::front_loaded;
  if (s == "all_at_step0") return SupplySchedule::all_at_step0;
  throw ConfigError("unknown supply_schedule '" + s + "'");
}

MmsInteraction mms_from_string(const std::string& s) {
  if (s == "consideration") return MmsInteraction::consideration;
  if (s == "purchasers") return MmsInteraction::purchasers;
  throw ConfigError("unknown mms_interaction '" + s + "'");
}

// Re-raises validation failures with the line of the section they came from.
template <typename F>
void with_line(const YAML::Node& node, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    if (e.line() > 0) throw;
    throw ConfigError(e.what(), line_of(node));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), line_of(node));
  }
}

}  // namespace

Catalog default_catalog() {
  return {
      {"item1", 50, 200, "Commodity"},  {"item2", 50, 200, "Commodity"}, {"item3", 150, 133, "Standard"},
      {"item4", 150, 133, "Standard"},  {"item5", 150, 134, "Standard"}, {"item6", 800, 75, "Luxury"},
      {"item7", 800, 75, "Luxury"},     {"item8", 2000, 50, "Veblen"},
  };
}

EpisodeConfig default_config() {
  EpisodeConfig c;
  c.catalog = default_catalog();
  c.tribes = default_tribes();
  return c;
}

AgentId agent_id_for(int index, int agents) {
  int width = 2;
  for (int n = agents; n >= 100; n /= 10) ++width;
  std::string digits = std::to_string(index + 1);
  if (static_cast<int>(digits.size()) < width) digits.insert(0, width - digits.size(), '0');
  return "agent_" + digits;
}

std::vector<AgentId> EpisodeConfig::agent_ids() const {
  std::vector<AgentId> ids;
  for (int i = 0; i < agents; ++i) ids.push_back(agent_id_for(i, agents));
  return ids;
}

std::string EpisodeConfig::policy_for(const AgentId& agent_id) const {
  auto it = policy_overrides.find(agent_id);
  return it == policy_overrides.end() ? default_policy : it->second;
}

void EpisodeConfig::validate() const {
  if (agents < 1) throw ConfigError("agents must be >= 1");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (bidding_rounds < 1) throw ConfigError("bidding_rounds must be >= 1");
  if (buyers_per_step < 0) throw ConfigError("buyers_per_step must be >= 0");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(supply_demand_ratio > 0.0)) throw ConfigError("supply_demand_ratio must be > 0");
  if (!(holding_rate >= 0.0)) throw ConfigError("holding_rate must be >= 0");
  if (!(rho_default >= 0.0 && rho_default <= 1.0)) throw ConfigError("rho_default must lie in [0,1]");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (k_max < 1) throw ConfigError("k_max must be >= 1");
  if (history_window < 0) throw ConfigError("history_window must be >= 0");
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (catalog.empty()) throw ConfigError("catalog must not be empty");
  try {
    validate_catalog(catalog);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  validate_tribes(tribes);
  if (default_policy.empty()) throw ConfigError("default policy must not be empty");
  const auto ids = agent_ids();
  const std::set<AgentId> known(ids.begin(), ids.end());
  for (const auto& [id, policy] : policy_overrides) {
    if (!known.contains(id)) throw ConfigError("policy override for unknown agent '" + id + "'");
    if (policy.empty()) throw ConfigError("empty policy for agent '" + id + "'");
  }
  if (embedder.kind != "keyword" && embedder.kind != "remote")
    throw ConfigError("unknown embedder kind '" + embedder.kind + "'");
  if (embedder.kind == "remote" && embedder.url.empty()) throw ConfigError("remote embedder requires a url");
  if (external.retries < 0) throw ConfigError("external retries must be >= 0");
  if (!(external.timeout_seconds > 0.0)) throw ConfigError("external timeout must be > 0");
}

EpisodeConfig parse_config_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  EpisodeConfig c = default_config();
  if (!root || root.IsNull()) return c;
  check_keys(root, {"episode", "market", "catalog", "tribes", "policies", "embedder", "external"}, "root");

  if (auto ep = root["episode"]) {
    check_keys(ep,
               {"agents", "steps", "bidding_rounds", "buyers_per_step", "alpha", "supply_demand_ratio", "holding_rate",
                "seed", "eps"},
               "episode");
    read(ep, "agents", c.agents);
    read(ep, "steps", c.steps);
    read(ep, "bidding_rounds", c.bidding_rounds);
    read(ep, "buyers_per_step", c.buyers_per_step);
    read(ep, "alpha", c.alpha);
    read(ep, "supply_demand_ratio", c.supply_demand_ratio);
    read(ep, "holding_rate", c.holding_rate);
    read(ep, "seed", c.seed);
    read(ep, "eps", c.eps);
    with_line(ep, [&] {
      EpisodeConfig probe = default_config();
      probe.agents = c.agents;
      probe.steps = c.steps;
      probe.bidding_rounds = c.bidding_rounds;
      probe.buyers_per_step = c.buyers_per_step;
      probe.alpha = c.alpha;
      probe.supply_demand_ratio = c.supply_demand_ratio;
      probe.holding_rate = c.holding_rate;
      probe.eps = c.eps;
      probe.validate();
    });
  }

  if (auto mk = root["market"]) {
    check_keys(mk,
               {"rho_default", "tau", "k_max", "purchase_cascade", "mms_interaction", "supply_schedule",
                "history_window"},
               "market");
    read(mk, "rho_default", c.rho_default);
    read(mk, "tau", c.tau);
    read(mk, "k_max", c.k_max);
    read(mk, "purchase_cascade", c.purchase_cascade);
    read(mk, "history_window", c.history_window);
    if (auto n = mk["mms_interaction"]) c.mms_interaction = parse_mms(n);
    if (auto n = mk["supply_schedule"]) c.supply_schedule = parse_schedule(n);
    with_line(mk, [&] {
      EpisodeConfig probe = default_config();
      probe.rho_default = c.rho_default;
      probe.tau = c.tau;
      probe.k_max = c.k_max;
      probe.history_window = c.history_window;
      probe.validate();
    });
  }

  if (auto cat = root["catalog"]) {
    if (!cat.IsSequence()) throw ConfigError("'catalog' must be a list", line_of(cat));
    c.catalog.clear();
    for (const auto& entry : cat) {
      check_keys(entry, {"item_id", "base_price", "quantity", "category"}, "catalog entry");
      ItemSpec item;
      if (!entry["item_id"]) throw ConfigError("catalog entry needs item_id", line_of(entry));
      read(entry, "item_id", item.item_id);
      read(entry, "base_price", item.base_price);
      read(entry, "quantity", item.quantity);
      read(entry, "category", item.category);
      c.catalog.push_back(item);
      with_line(entry, [&] { validate_catalog(c.catalog); });
    }
    if (c.catalog.empty()) throw ConfigError("catalog must not be empty", line_of(cat));
  }

  if (auto tr = root["tribes"]) {
    if (!tr.IsSequence()) throw ConfigError("'tribes' must be a list", line_of(tr));
    c.tribes.clear();
    for (const auto& entry : tr) {
      check_keys(entry, {"name", "weight", "lambda", "rho", "keywords", "persona_template"}, "tribe");
      TribeSpec t;
      if (!entry["name"]) throw ConfigError("tribe needs a name", line_of(entry));
      read(entry, "name", t.name);
      read(entry, "weight", t.weight);
      read(entry, "lambda", t.lambda);
      if (entry["rho"]) {
        double rho = 0.0;
        read(entry, "rho", rho);
        t.rho = rho;
      }
      read(entry, "keywords", t.keywords);
      read(entry, "persona_template", t.persona_template);
      c.tribes.push_back(std::move(t));
    }
    with_line(tr, [&] { validate_tribes(c.tribes); });
  }

  if (auto pol = root["policies"]) {
    check_keys(pol, {"default", "overrides"}, "policies");
    read(pol, "default", c.default_policy);
    if (auto ov = pol["overrides"]) {
      if (!ov.IsMap()) throw ConfigError("'policies.overrides' must be a mapping", line_of(ov));
      for (const auto& kv : ov) c.policy_overrides[kv.first.as<std::string>()] = kv.second.as<std::string>();
    }
  }

  if (auto em = root["embedder"]) {
    check_keys(em, {"kind", "buckets", "url", "timeout_seconds"}, "embedder");
    read(em, "kind", c.embedder.kind);
    read(em, "buckets", c.embedder.buckets);
    read(em, "url", c.embedder.url);
    read(em, "timeout_seconds", c.embedder.timeout_seconds);
  }

  if (auto ex = root["external"]) {
    check_keys(ex, {"timeout_seconds", "retries"}, "external");
    read(ex, "timeout_seconds", c.external.timeout_seconds);
    read(ex, "retries", c.external.retries);
  }

  c.validate();
  return c;
}

EpisodeConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_yaml(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_policy_override(EpisodeConfig& config, const std::string& binding) {
  const auto eq = binding.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == binding.size())
    throw ConfigError("policy binding must look like <agent_id|all>=<policy>: '" + binding + "'");
  const auto who = binding.substr(0, eq);
  const auto policy = binding.substr(eq + 1);
  if (who == "all") {
    config.default_policy = policy;
    config.policy_overrides.clear();
  } else {
    config.policy_overrides[who] = policy;
  }
}

void apply_environment(EpisodeConfig& config) {
  if (const char* url = std::getenv("SUPPLYSIM_EMBEDDER_URL"); url != nullptr && *url != '\0') {
    config.embedder.kind = "remote";
    config.embedder.url = url;
  }
}

std::string config_hash(const EpisodeConfig& config) {
  EpisodeConfig unseeded = config;
  unseeded.seed = 0;
  const nlohmann::json j = unseeded;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

std::string to_string(SupplySchedule s) {
  switch (s) {
    case SupplySchedule::even:
      return "even";
    case SupplySchedule::front_loaded:
      return "front_loaded";
    case SupplySchedule::all_at_step0:
      return "all_at_step0";
  }
  return "even";
}

std::string to_string(MmsInteraction m) {
  return m == MmsInteraction::consideration ? "consideration" : "purchasers";
}

void to_json(nlohmann::json& j, const EpisodeConfig& v) {
  j = {
      {"agents", v.agents},
      {"steps", v.steps},
      {"bidding_rounds", v.bidding_rounds},
      {"buyers_per_step", v.buyers_per_step},
      {"alpha", v.alpha},
      {"supply_demand_ratio", v.supply_demand_ratio},
      {"holding_rate", v.holding_rate},
      {"rho_default", v.rho_default},
      {"tau", v.tau},
      {"k_max", v.k_max},
      {"purchase_cascade", v.purchase_cascade},
      {"mms_interaction", to_string(v.mms_interaction)},
      {"supply_schedule", to_string(v.supply_schedule)},
      {"history_window", v.history_window},
      {"seed", v.seed},
      {"eps", v.eps},
      {"catalog", v.catalog},
      {"tribes", v.tribes},
      {"default_policy", v.default_policy},
      {"policy_overrides", v.policy_overrides},
      {"embedder",
       {{"kind", v.embedder.kind},
        {"buckets", v.embedder.buckets},
        {"url", v.embedder.url},
        {"timeout_seconds", v.embedder.timeout_seconds}}},
      {"external", {{"timeout_seconds", v.external.timeout_seconds}, {"retries", v.external.retries}}},
  };
}

void from_json(const nlohmann::json& j, EpisodeConfig& v) {
  j.at("agents").get_to(v.agents);
  j.at("steps").get_to(v.steps);
  j.at("bidding_rounds").get_to(v.bidding_rounds);
  j.at("buyers_per_step").get_to(v.buyers_per_step);
  j.at("alpha").get_to(v.alpha);
  j.at("supply_demand_ratio").get_to(v.supply_demand_ratio);
  j.at("holding_rate").get_to(v.holding_rate);
  j.at("rho_default").get_to(v.rho_default);
  j.at("tau").get_to(v.tau);
  j.at("k_max").get_to(v.k_max);
  j.at("purchase_cascade").get_to(v.purchase_cascade);
  v.mms_interaction = mms_from_string(j.at("mms_interaction").get<std::string>());
  v.supply_schedule = schedule_from_string(j.at("supply_schedule").get<std::string>());
  j.at("history_window").get_to(v.history_window);
  j.at("seed").get_to(v.seed);
  j.at("eps").get_to(v.eps);
  j.at("catalog").get_to(v.catalog);
  j.at("tribes").get_to(v.tribes);
  j.at("default_policy").get_to(v.default_policy);
  j.at("policy_overrides").get_to(v.policy_overrides);
  const auto& em = j.at("embedder");
  em.at("kind").get_to(v.embedder.kind);
  em.at("buckets").get_to(v.embedder.buckets);
  em.at("url").get_to(v.embedder.url);
  em.at("timeout_seconds").get_to(v.embedder.timeout_seconds);
  const auto& ex = j.at("external");
  ex.at("timeout_seconds").get_to(v.external.timeout_seconds);
  ex.at("retries").get_to(v.external.retries);
}

}  // namespace supplysim
