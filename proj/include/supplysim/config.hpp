#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "supplysim/persona.hpp"
#include "supplysim/types.hpp"

namespace supplysim {

// How the per-episode catalog quantities are released over the steps.
//   even:         floor(Q/T) per step, remainder one unit each to the earliest steps
//   front_loaded: ceil(remaining/2) per step, the final step takes the rest
//   all_at_step0: everything at step 0
enum class SupplySchedule { even, front_loaded, all_at_step0 };

// Which buyers count as having interacted with a seller for MMS.
enum class MmsInteraction { consideration, purchasers };

struct EmbedderConfig {
  std::string kind{"keyword"};  // keyword | remote
  std::size_t buckets{32};
  std::string url;
  double timeout_seconds{30.0};

  bool operator==(const EmbedderConfig&) const = default;
};

struct ExternalConfig {
  double timeout_seconds{60.0};
  int retries{1};

  bool operator==(const ExternalConfig&) const = default;
};

struct EpisodeConfig {
  int agents{20};
  int steps{6};
  int bidding_rounds{2};
  int buyers_per_step{200};
  double alpha{1.5};
  double supply_demand_ratio{0.95};
  double holding_rate{0.0};
  double rho_default{0.6};
  double tau{1.0};
  int k_max{20};
  bool purchase_cascade{true};
  MmsInteraction mms_interaction{MmsInteraction::consideration};
  SupplySchedule supply_schedule{SupplySchedule::even};
  int history_window{0};  // prior steps shown to policies; 0 = all
  std::uint64_t seed{0};
  double eps{1e-9};
  Catalog catalog;
  std::vector<TribeSpec> tribes;
  std::string default_policy{"greedy"};
  std::map<AgentId, std::string> policy_overrides;
  EmbedderConfig embedder;
  ExternalConfig external;

  std::vector<AgentId> agent_ids() const;
  std::string policy_for(const AgentId& agent_id) const;
  // Throws ConfigError on any out-of-range field.
  void validate() const;

  bool operator==(const EpisodeConfig&) const = default;
};

// Eight items, 1,000 units, value 300,000.
Catalog default_catalog();
// m=20, T=6, 2 rounds, k=200, alpha=1.5, r=0.95, holding 0, rho 0.6, tau 1, K_max 20.
EpisodeConfig default_config();

AgentId agent_id_for(int index, int agents);

// Loads a YAML episode file on top of default_config(). Throws ConfigError
// carrying the 1-based line of the offending node.
EpisodeConfig load_config(const std::filesystem::path& path);
EpisodeConfig parse_config_yaml(const std::string& text);

// Applies "all=<policy>" or "<agent_id>=<policy>".
void apply_policy_override(EpisodeConfig& config, const std::string& binding);

// Reads SUPPLYSIM_EMBEDDER_URL, switching the embedder to remote when set.
void apply_environment(EpisodeConfig& config);

// Hash of every field except the seed.
std::string config_hash(const EpisodeConfig& config);

std::string to_string(SupplySchedule s);
std::string to_string(MmsInteraction m);

void to_json(nlohmann::json& j, const EpisodeConfig& v);
void from_json(const nlohmann::json& j, EpisodeConfig& v);

}  // namespace supplysim
