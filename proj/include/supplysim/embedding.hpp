#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "supplysim/persona.hpp"
#include "supplysim/types.hpp"

namespace supplysim {

class EmbeddingUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text -> fixed-dimension vector. Implementations must be deterministic for a
// given input and safe to call concurrently.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed(std::string_view text) = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);
};

// Lowercased runs of ASCII letters and digits.
std::vector<std::string> tokenize(std::string_view text);

// Reference embedder with no external dependencies. Component t counts
// occurrences of tribe t's keywords; the trailing buckets hash every other
// token. The result is L2-normalized and the zero vector maps to e0.
class KeywordEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultBuckets = 32;

  explicit KeywordEmbedder(std::span<const TribeSpec> tribes, std::size_t buckets = kDefaultBuckets);

  std::size_t dim() const override { return tribes_ + buckets_; }
  EmbeddingVector embed(std::string_view text) override;

 private:
  std::size_t tribes_;
  std::size_t buckets_;
  std::unordered_map<std::string, std::size_t> keyword_slot_;
};

struct RemoteEmbedderConfig {
  std::string url;  // http://host:port/path
  std::chrono::milliseconds timeout{30000};
  std::optional<std::size_t> expected_dim;
};

// Client for a JSON embedding service: POST {"texts":[...]} returns
// {"vectors":[[...], ...]}. Results are cached by exact text; every failure
// surfaces as EmbeddingUnavailable.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);
  ~RemoteEmbedder() override;

  std::size_t dim() const override;
  EmbeddingVector embed(std::string_view text) override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override;

  std::size_t request_count() const { return requests_.load(); }

 private:
  std::vector<std::vector<double>> post(const std::vector<std::string>& texts);

  RemoteEmbedderConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  mutable std::mutex mutex_;
  std::optional<std::size_t> dim_;
  std::unordered_map<std::string, EmbeddingVector> cache_;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace supplysim
