#pragma once

#include <string>

#include "supplysim/agents.hpp"

namespace supplysim {

struct Prompt {
  std::string system;
  std::string user;

  bool operator==(const Prompt&) const = default;
};

extern const char* const kBidSystemPrompt;
extern const char* const kRetailSystemPrompt;

Prompt render_bid_prompt(const BidObservation& obs);
Prompt render_retail_prompt(const RetailObservation& obs);

// History rows as "step,agent_id,prices,slogan,units_sold,revenue" CSV.
std::string render_history(const std::vector<HistoryEntry>& history, int step);

void to_json(nlohmann::json& j, const Prompt& v);

}  // namespace supplysim
