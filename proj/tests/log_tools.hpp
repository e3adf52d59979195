#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "supplysim/trajectory.hpp"

namespace logtools {

inline std::vector<nlohmann::json> split_lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

// Rebuilds the digest chain so that only the semantic content differs.
inline std::string reseal(std::vector<nlohmann::json> lines) {
  std::string prev;
  std::string out;
  for (auto& line : lines) {
    line.erase("digest");
    prev = supplysim::line_digest(prev, line);
    line["digest"] = prev;
    out += line.dump() + "\n";
  }
  return out;
}

struct Leaf {
  std::size_t line;
  nlohmann::json::json_pointer pointer;
};

inline void collect(const nlohmann::json& j, std::size_t line, const nlohmann::json::json_pointer& at,
                    std::vector<Leaf>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) collect(v, line, at / k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) collect(j[i], line, at / i, out);
  } else if (at.to_string() != "/digest") {
    out.push_back({line, at});
  }
}

inline std::vector<Leaf> leaves(const std::vector<nlohmann::json>& lines) {
  std::vector<Leaf> out;
  for (std::size_t i = 0; i < lines.size(); ++i) collect(lines[i], i, nlohmann::json::json_pointer(), out);
  return out;
}

// A different value of the same JSON type.
inline nlohmann::json perturb(const nlohmann::json& v) {
  if (v.is_boolean()) return !v.get<bool>();
  if (v.is_number_unsigned()) return v.get<std::uint64_t>() + 1;
  if (v.is_number_integer()) return v.get<std::int64_t>() + 1;
  if (v.is_number_float()) {
    const double d = v.get<double>();
    return d == 0.0 ? 0.25 : d * 1.5;
  }
  if (v.is_string()) return v.get<std::string>() + "x";
  return 1;
}

// Values chosen by a policy rather than computed by the market.
inline bool is_decision(const Leaf& leaf) {
  const auto path = leaf.pointer.to_string();
  if (path.rfind("/postings/", 0) == 0) return true;
  return path.rfind("/rounds/", 0) == 0 && path.find("/bids/") != std::string::npos;
}

inline std::string mutate(const std::vector<nlohmann::json>& lines, const Leaf& leaf) {
  auto copy = lines;
  auto& target = copy[leaf.line][leaf.pointer];
  target = perturb(target);
  return reseal(std::move(copy));
}

}  // namespace logtools
