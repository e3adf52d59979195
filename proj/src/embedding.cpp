#include "supplysim/embedding.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include "httplib.h"
#include "supplysim/rng.hpp"

namespace supplysim {

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

KeywordEmbedder::KeywordEmbedder(std::span<const TribeSpec> tribes, std::size_t buckets)
    : tribes_(tribes.size()), buckets_(buckets) {
  if (tribes_ + buckets_ == 0) throw std::invalid_argument("keyword embedder needs at least one dimension");
  for (std::size_t t = 0; t < tribes.size(); ++t) {
    for (const auto& kw : tribes[t].keywords) {
      for (auto& token : tokenize(kw)) keyword_slot_.emplace(token, t);
    }
  }
}

EmbeddingVector KeywordEmbedder::embed(std::string_view text) {
  std::vector<double> v(dim(), 0.0);
  for (const auto& token : tokenize(text)) {
    if (auto it = keyword_slot_.find(token); it != keyword_slot_.end()) {
      v[it->second] += 1.0;
    } else if (buckets_ > 0) {
      v[tribes_ + fnv1a64(token) % buckets_] += 1.0;
    }
  }
  double norm = 0.0;
  for (double c : v) norm += c * c;
  if (norm == 0.0) {
    v[0] = 1.0;
  } else {
    norm = std::sqrt(norm);
    for (double& c : v) c /= norm;
  }
  return EmbeddingVector(std::move(v));
}

// ---- RemoteEmbedder ---------------------------------------------------------

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("embedder url needs a scheme: " + config_.url);
  const auto path_start = config_.url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.url.substr(path_start);
  dim_ = config_.expected_dim;
}

RemoteEmbedder::~RemoteEmbedder() = default;

std::size_t RemoteEmbedder::dim() const {
  std::lock_guard lock(mutex_);
  if (!dim_) throw EmbeddingUnavailable("embedding dimension unknown before the first request");
  return *dim_;
}

std::vector<std::vector<double>> RemoteEmbedder::post(const std::vector<std::string>& texts) {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const nlohmann::json body = {{"texts", texts}};
  ++requests_;
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) throw EmbeddingUnavailable("embedding request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw EmbeddingUnavailable("embedding service returned HTTP " + std::to_string(res->status));

  std::vector<std::vector<double>> vectors;
  try {
    vectors = nlohmann::json::parse(res->body).at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const std::exception& e) {
    throw EmbeddingUnavailable(std::string("malformed embedding response: ") + e.what());
  }
  if (vectors.size() != texts.size())
    throw EmbeddingUnavailable("embedding service returned " + std::to_string(vectors.size()) + " vectors for " +
                               std::to_string(texts.size()) + " texts");
  return vectors;
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) {
  const std::string t(text);
  return embed_batch(std::span<const std::string>(&t, 1)).front();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) {
  std::lock_guard lock(mutex_);
  std::vector<std::string> missing;
  std::set<std::string> queued;
  for (const auto& t : texts) {
    if (!cache_.contains(t) && queued.insert(t).second) missing.push_back(t);
  }
  if (!missing.empty()) {
    auto vectors = post(missing);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (vectors[i].empty()) throw EmbeddingUnavailable("embedding service returned an empty vector");
      if (!dim_) dim_ = vectors[i].size();
      if (vectors[i].size() != *dim_)
        throw EmbeddingUnavailable("embedding dimension " + std::to_string(vectors[i].size()) + " != expected " +
                                   std::to_string(*dim_));
      try {
        cache_.emplace(missing[i], EmbeddingVector(std::move(vectors[i])));
      } catch (const std::invalid_argument& e) {
        throw EmbeddingUnavailable(e.what());
      }
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(cache_.at(t));
  return out;
}

}  // namespace supplysim
