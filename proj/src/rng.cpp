#include "supplysim/rng.hpp"

#include <stdexcept>
#include <string>

namespace supplysim {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::string_view name) {
  const std::uint64_t key = fnv1a64(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed, std::string_view name) : engine_(seeded_engine(seed, name)) {}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == UINT64_MAX) return static_cast<std::int64_t>(engine_());
  return lo + static_cast<std::int64_t>(uniform_index(static_cast<std::size_t>(span + 1)));
}

std::size_t Rng::weighted_index(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("weighted_index: negative or NaN weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("weighted_index: weights sum to zero");
  const double target = uniform01() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

Rng RngStreams::policy_stream(std::string_view agent_id) const {
  return Rng(seed_, "policy/" + std::string(agent_id));
}

}  // namespace supplysim
