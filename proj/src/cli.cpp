#include "supplysim/cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "supplysim/trajectory.hpp"

namespace supplysim {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMetricColumns[] = {"npm", "pi", "rar", "iei", "stockout_rate", "bid_efficiency", "osi", "fill_rate", "mms"};

std::vector<double> metric_values(const AgentMetrics& m) {
  return {m.npm, m.pi, m.rar, m.iei, m.stockout_rate, m.bid_efficiency, m.osi, m.fill_rate, m.mms};
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw std::invalid_argument("bad seed '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad seed '" + s + "'");
  }
}

EpisodeConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  EpisodeConfig config = path.empty() ? default_config() : load_config(path);
  apply_environment(config);
  for (const auto& o : overrides) apply_policy_override(config, o);
  config.validate();
  check_policy_spec(config.default_policy);
  for (const auto& [_, spec] : config.policy_overrides) check_policy_spec(spec);
  return config;
}

struct EpisodeOutput {
  std::uint64_t seed{0};
  fs::path log;
  fs::path summary;
  std::vector<AgentMetrics> metrics;
  std::string error;
};

nlohmann::json summary_json(std::uint64_t seed, const EpisodeResult& r) {
  nlohmann::json funds = nlohmann::json::object();
  if (!r.steps.empty()) {
    for (const auto& [id, snap] : r.steps.back().snapshot) funds[id] = snap.funds;
  }
  std::size_t faults = 0;
  for (const auto& s : r.steps) faults += s.faults.size();
  return {{"seed", seed},
          {"config_hash", r.header.config_hash},
          {"initial_funds", r.header.initial_funds},
          {"final_funds", funds},
          {"policy_faults", faults},
          {"metrics", r.metrics},
          {"market_indices", r.indices}};
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::optional<std::uint64_t>& seed, const std::string& seeds_text, const std::string& out_dir, int jobs,
            std::ostream& out, std::ostream& err) {
  EpisodeConfig config;
  try {
    config = load_run_config(config_path, overrides);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
  std::vector<std::uint64_t> seeds;
  try {
    if (!seeds_text.empty()) {
      seeds = parse_seed_list(seeds_text);
    } else {
      seeds = {seed.value_or(config.seed)};
    }
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  if (jobs < 1) {
    err << "usage error: --jobs must be at least 1\n";
    return 2;
  }

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "cannot create output directory '" << dir.string() << "': " << ec.message() << '\n';
    return 2;
  }

  std::vector<EpisodeOutput> outputs(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < seeds.size(); k = next++) {
      auto& o = outputs[k];
      o.seed = seeds[k];
      try {
        EpisodeConfig c = config;
        c.seed = seeds[k];
        const EpisodeResult r = run_episode(c);
        o.log = dir / ("episode_seed" + std::to_string(seeds[k]) + ".jsonl");
        o.summary = dir / ("summary_seed" + std::to_string(seeds[k]) + ".json");
        write_jsonl(o.log, r);
        write_text(o.summary, summary_json(seeds[k], r).dump(2) + "\n");
        o.metrics = r.metrics;
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(jobs, static_cast<int>(seeds.size()));
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  int failures = 0;
  for (const auto& o : outputs) {
    if (!o.error.empty()) {
      err << "seed " << o.seed << " failed: " << o.error << '\n';
      ++failures;
    } else {
      out << "seed " << o.seed << ": " << o.log.string() << '\n';
    }
  }
  if (failures > 0) return 1;

  const auto ids = config.agent_ids();
  std::ostringstream csv;
  csv << "agent_id,policy,runs";
  for (const char* c : kMetricColumns) csv << ',' << c;
  csv << ",mms_flagged_runs\n";
  nlohmann::json agg = nlohmann::json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::vector<double> sums(std::size(kMetricColumns), 0.0);
    int flagged = 0;
    for (const auto& o : outputs) {
      const auto values = metric_values(o.metrics[i]);
      for (std::size_t c = 0; c < sums.size(); ++c) sums[c] += values[c];
      flagged += o.metrics[i].mms_flagged ? 1 : 0;
    }
    const double n = static_cast<double>(outputs.size());
    nlohmann::json row = {{"agent_id", ids[i]}, {"policy", config.policy_for(ids[i])}, {"runs", outputs.size()}};
    csv << ids[i] << ',' << config.policy_for(ids[i]) << ',' << outputs.size();
    for (std::size_t c = 0; c < sums.size(); ++c) {
      row[kMetricColumns[c]] = sums[c] / n;
      csv << ',' << fmt(sums[c] / n);
    }
    row["mms_flagged_runs"] = flagged;
    csv << ',' << flagged << '\n';
    agg.push_back(std::move(row));
  }

  nlohmann::json manifest = {{"config_path", config_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(config_path)},
                             {"config_hash", config_hash(config)},
                             {"seeds", seeds},
                             {"output_dir", dir.string()},
                             {"logs", nlohmann::json::array()},
                             {"summaries", nlohmann::json::array()},
                             {"aggregate_csv", (dir / "aggregate.csv").string()},
                             {"aggregate_json", (dir / "aggregate.json").string()}};
  for (const auto& o : outputs) {
    manifest["logs"].push_back(o.log.string());
    manifest["summaries"].push_back(o.summary.string());
  }
  try {
    write_text(dir / "aggregate.csv", csv.str());
    write_text(dir / "aggregate.json", nlohmann::json({{"seeds", seeds}, {"agents", agg}}).dump(2) + "\n");
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return 1;
  }
  out << "aggregate: " << (dir / "aggregate.csv").string() << '\n';
  return 0;
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    const EpisodeConfig config = load_run_config(path, {});
    out << "ok " << path << " (config_hash " << config_hash(config) << ")\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_metrics(const std::vector<std::string>& logs, const std::string& csv_path, const std::string& json_path,
                std::ostream& out, std::ostream& err) {
  std::ostringstream csv;
  csv << "log,agent_id,policy";
  for (const char* c : kMetricColumns) csv << ',' << c;
  csv << ",mms_flagged\n";
  nlohmann::json report = nlohmann::json::array();
  for (const auto& path : logs) {
    TrajectoryLog log;
    try {
      log = parse_jsonl(read_file(path));
    } catch (const LogError& e) {
      err << path << ": " << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << e.what() << '\n';
      return 2;
    }
    std::vector<AgentMetrics> metrics;
    std::vector<MarketIndices> indices;
    try {
      metrics = compute_agent_metrics(log.header, log.steps);
      indices = compute_market_indices(log.header, log.steps);
    } catch (const std::exception& e) {
      err << path << ": " << e.what() << '\n';
      return 1;
    }
    for (const auto& m : metrics) {
      csv << path << ',' << m.agent_id << ',' << log.header.policies.at(m.agent_id);
      for (double v : metric_values(m)) csv << ',' << fmt(v);
      csv << ',' << (m.mms_flagged ? "true" : "false") << '\n';
    }
    report.push_back({{"log", path},
                      {"seed", log.header.config.seed},
                      {"matches_inline", metrics == log.metrics && indices == log.indices},
                      {"metrics", metrics},
                      {"market_indices", indices}});
  }
  try {
    if (!csv_path.empty()) write_text(csv_path, csv.str());
    if (!json_path.empty()) write_text(json_path, report.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return 2;
  }
  out << csv.str();
  return 0;
}

int cmd_replay(const std::string& path, bool check, std::ostream& out, std::ostream& err) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return 2;
  }
  if (check) {
    if (auto issue = check_log(text)) {
      err << path << ": " << issue->describe() << '\n';
      return 1;
    }
    out << path << ": ok\n";
    return 0;
  }
  TrajectoryLog log;
  try {
    log = parse_jsonl(text);
  } catch (const LogError& e) {
    err << path << ": " << e.what() << '\n';
    return 1;
  }
  out << "step,supplier_revenue,buyer_spend,units_sold,stockout_units,bankrupt,faults\n";
  for (const auto& s : log.steps) {
    Money spend = 0;
    Units units = 0;
    Units unfilled = 0;
    int bankrupt = 0;
    for (const auto& p : s.purchases) {
      spend += p.qty * p.unit_price;
      units += p.qty;
    }
    for (const auto& st : s.stockouts) unfilled += st.units_unfilled;
    for (const auto& [_, snap] : s.snapshot) bankrupt += snap.bankrupt ? 1 : 0;
    out << s.step << ',' << s.supplier_revenue << ',' << spend << ',' << units << ',' << unfilled << ',' << bankrupt
        << ',' << s.faults.size() << '\n';
  }
  return 0;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part.erase(std::remove_if(part.begin(), part.end(), [](unsigned char c) { return std::isspace(c); }), part.end());
    if (auto dots = part.find(".."); dots != std::string::npos) {
      const auto lo = parse_u64(part.substr(0, dots));
      const auto hi = parse_u64(part.substr(dots + 2));
      if (hi < lo) throw std::invalid_argument("empty seed range '" + part + "'");
      if (hi - lo >= 1000000) throw std::invalid_argument("seed range too large '" + part + "'");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(parse_u64(part));
    }
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  return seeds;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-agent supply-chain market simulator", "supplysim"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string seeds_text;
  std::string out_dir = "runs";
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run one episode per seed and write logs and reports");
  run->add_option("--config", config_path, "Episode config (YAML); defaults when omitted");
  run->add_option("--seed", seed, "Single seed; defaults to the config seed");
  run->add_option("--seeds", seeds_text, "Seed list such as 1..10 or 1,3,5");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--policy", overrides, "Policy binding, all=<policy> or <agent_id>=<policy>");
  run->add_option("--jobs", jobs, "Episodes to run in parallel")->capture_default_str();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file");
  validate->add_option("--config", validate_path, "Episode config (YAML)")->required();

  std::vector<std::string> metric_logs;
  std::string csv_path;
  std::string json_path;
  auto* metrics = app.add_subcommand("metrics", "Recompute metrics from episode logs");
  metrics->add_option("--log", metric_logs, "Episode log(s)")->required();
  metrics->add_option("--csv", csv_path, "Write the CSV report here");
  metrics->add_option("--json", json_path, "Write the JSON report here");

  std::string replay_path;
  bool check = false;
  auto* replay = app.add_subcommand("replay", "Summarize or verify an episode log");
  replay->add_option("--log", replay_path, "Episode log")->required();
  replay->add_flag("--check", check, "Re-run the market mechanics and verify every record");

  std::vector<std::string> argv = args;
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(std::move(argv));
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, overrides, seed, seeds_text, out_dir, jobs, out, err);
    if (validate->parsed()) return cmd_validate(validate_path, out, err);
    if (metrics->parsed()) return cmd_metrics(metric_logs, csv_path, json_path, out, err);
    if (replay->parsed()) return cmd_replay(replay_path, check, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace supplysim
