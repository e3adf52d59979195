#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace supplysim {

// Stable 64-bit FNV-1a; used for stream keys and log digests.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Random source for one named purpose. std::mt19937_64 has a fully specified
// output sequence; the helpers below avoid std::*_distribution so results
// are identical across standard library implementations.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform01();
  // Uniform on [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);
  // Uniform on [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform01() < p; }
  // Index drawn with probability proportional to weights (all >= 0, sum > 0).
  std::size_t weighted_index(std::span<const double> weights);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      using std::swap;
      swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace streams {
inline constexpr std::string_view kTieBreak = "tie_break";
inline constexpr std::string_view kFeedbackTieBreak = "feedback_tie_break";
inline constexpr std::string_view kBuyerGen = "buyer_gen";
inline constexpr std::string_view kDemandAlloc = "demand_alloc";
inline constexpr std::string_view kConsideration = "consideration";
inline constexpr std::string_view kPurchaseTie = "purchase_tie";
}  // namespace streams

// Keyed splitting of one episode seed into independent substreams. Each name
// maps to its own generator, so no two subsystems share draws.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  Rng stream(std::string_view name) const { return Rng(seed_, name); }
  Rng policy_stream(std::string_view agent_id) const;

 private:
  std::uint64_t seed_;
};

}  // namespace supplysim
