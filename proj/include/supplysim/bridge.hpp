#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "supplysim/agents.hpp"
#include "supplysim/config.hpp"
#include "supplysim/prompts.hpp"

namespace supplysim {

// Wire protocol v1. Every request is one JSON object:
//   {"protocol_version":1, "type":"bid_request"|"retail_request", "agent_id":...,
//    "attempt":n, "payload":<observation>, "schema":<reply schema>,
//    "prompt":{"system":...,"user":...}}
// The reply is the bare action object, {"bids":{...}} or
// {"prices":{...},"slogan":"..."}, optionally carrying "protocol_version":1.
// Over stdio each message is a single line; over HTTP each is a POST body.

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReplyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Sends one request and returns one reply. Throws TransportError.
  virtual std::string exchange(const std::string& request, std::chrono::milliseconds timeout) = 0;
};

// Child process started with /bin/sh -c on first use. A timeout, a write
// failure or end of output kills the child and every later call fails.
class StdioTransport final : public Transport {
 public:
  explicit StdioTransport(std::string command);
  ~StdioTransport() override;
  StdioTransport(const StdioTransport&) = delete;
  StdioTransport& operator=(const StdioTransport&) = delete;

  std::string exchange(const std::string& request, std::chrono::milliseconds timeout) override;
  bool broken() const { return broken_; }

 private:
  void spawn();
  void shutdown();
  [[noreturn]] void fail(const std::string& message);

  std::string command_;
  int pid_{-1};
  int to_child_{-1};
  int from_child_{-1};
  bool broken_{false};
  std::string buffer_;
};

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::string url);
  std::string exchange(const std::string& request, std::chrono::milliseconds timeout) override;

 private:
  std::string scheme_host_port_;
  std::string path_;
};

struct ExternalSpec {
  enum class Kind { stdio, http };
  Kind kind{Kind::stdio};
  std::string target;  // command line or URL
};

// "external:stdio:<command>" or "external:http:<url>"; nullopt otherwise.
std::optional<ExternalSpec> parse_external_spec(const std::string& spec);

nlohmann::json bid_reply_schema();
nlohmann::json retail_reply_schema();
nlohmann::json make_bid_request(const BidObservation& obs, int attempt);
nlohmann::json make_retail_request(const RetailObservation& obs, int attempt);

// Strict reply parsing. Throws ReplyError on invalid JSON, unknown keys,
// non-integer or negative numbers, or a wrong protocol_version.
Bid parse_bid_reply(const std::string& text);
RetailPosting parse_retail_reply(const std::string& text);

class ExternalPolicy final : public Policy {
 public:
  ExternalPolicy(std::string name, std::unique_ptr<Transport> transport, ExternalConfig config);
  std::string name() const override { return name_; }
  Bid decide_bid(const BidObservation& obs) override;
  RetailPosting decide_retail(const RetailObservation& obs) override;
  bool is_remote() const override { return true; }
  int requests_sent() const { return requests_; }

 private:
  template <typename Obs, typename MakeRequest, typename Parse>
  auto call(const Obs& obs, MakeRequest make_request, Parse parse);

  std::string name_;
  std::unique_ptr<Transport> transport_;
  ExternalConfig config_;
  int requests_{0};
};

std::unique_ptr<Policy> make_external_policy(const ExternalSpec& spec, const AgentId& agent_id,
                                             const ExternalConfig& config);

}  // namespace supplysim
