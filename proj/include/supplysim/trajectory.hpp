#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "supplysim/engine.hpp"

namespace supplysim {

// Line-oriented episode log. Line 1 is the header, then one line per step,
// then a footer with the metrics. Every line carries "digest", the FNV-1a
// hash of the previous line's digest followed by this line without its
// digest field.
struct TrajectoryLog {
  TrajectoryHeader header;
  std::vector<StepRecord> steps;
  std::vector<AgentMetrics> metrics;
  std::vector<MarketIndices> indices;
};

struct ReplayIssue {
  int line{0};
  std::optional<int> step;
  std::optional<AgentId> agent;
  std::string message;

  std::string describe() const;
};

class LogError : public std::runtime_error {
 public:
  explicit LogError(ReplayIssue issue) : std::runtime_error(issue.describe()), issue_(std::move(issue)) {}
  const ReplayIssue& issue() const { return issue_; }

 private:
  ReplayIssue issue_;
};

std::string line_digest(const std::string& previous, const nlohmann::json& line_without_digest);

std::string to_jsonl(const EpisodeResult& result);
void write_jsonl(const std::filesystem::path& path, const EpisodeResult& result);

// Parses the typed content. Throws LogError on malformed lines; digests are
// not checked here.
TrajectoryLog parse_jsonl(const std::string& text);
std::string read_file(const std::filesystem::path& path);

// Full verification: re-runs the market mechanics from the header's config
// and seed against the recorded decisions, then checks the digest chain, the
// config hash and the footer metrics. Returns the first problem found.
std::optional<ReplayIssue> check_log(const std::string& text);

}  // namespace supplysim
