#include "supplysim/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <limits>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "supplysim/step_record.hpp"

namespace supplysim {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  return {url.substr(0, path_start), path_start == std::string::npos ? "/" : url.substr(path_start)};
}

Units strict_non_negative(const nlohmann::json& v, const std::string& what) {
  if (v.is_number_unsigned()) {
    if (v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<Units>::max()))
      throw ReplyError(what + " is out of range");
    return static_cast<Units>(v.get<std::uint64_t>());
  }
  if (v.is_number_integer()) {
    const auto n = v.get<std::int64_t>();
    if (n < 0) throw ReplyError(what + " is negative");
    return n;
  }
  throw ReplyError(what + " is not an integer");
}

nlohmann::json parse_object(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ReplyError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ReplyError("reply is not a JSON object");
  if (auto it = j.find("protocol_version"); it != j.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() != 1) throw ReplyError("unsupported protocol_version");
  }
  return j;
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ReplyError("unexpected key '" + key + "'");
  }
}

nlohmann::json integer_schema() { return {{"type", "integer"}, {"minimum", 0}}; }

}  // namespace

// ---- stdio ----------------------------------------------------------------

StdioTransport::StdioTransport(std::string command) : command_(std::move(command)) {}

StdioTransport::~StdioTransport() { shutdown(); }

void StdioTransport::spawn() {
  ignore_sigpipe();
  int in[2];
  int out[2];
  if (::pipe2(in, O_CLOEXEC) != 0) fail(std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out, O_CLOEXEC) != 0) {
    ::close(in[0]);
    ::close(in[1]);
    fail(std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in[0], in[1], out[0], out[1]}) ::close(fd);
    fail(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in[0], STDIN_FILENO);
    ::dup2(out[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  ::setpgid(pid, pid);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
}

void StdioTransport::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    bool exited = false;
    for (int i = 0; i < 20 && !exited; ++i) {
      exited = ::waitpid(pid_, &status, WNOHANG) != 0;
      if (!exited) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    // The shell may have left children of its own behind.
    ::kill(-pid_, SIGKILL);
    if (!exited) ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void StdioTransport::fail(const std::string& message) {
  broken_ = true;
  shutdown();
  throw TransportError(message);
}

std::string StdioTransport::exchange(const std::string& request, std::chrono::milliseconds timeout) {
  if (broken_) throw TransportError("agent process is no longer available");
  if (pid_ < 0) spawn();

  const std::string line = request + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(to_child_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(std::string("write to agent failed: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!reply.empty() && reply.back() == '\r') reply.pop_back();
      return reply;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail("agent timed out after " + std::to_string(timeout.count()) + " ms");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail(std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(std::string("read from agent failed: ") + std::strerror(errno));
    }
    if (n == 0) fail("agent closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

// ---- http -----------------------------------------------------------------

HttpTransport::HttpTransport(std::string url) {
  auto [base, path] = split_url(url);
  scheme_host_port_ = std::move(base);
  path_ = std::move(path);
}

std::string HttpTransport::exchange(const std::string& request, std::chrono::milliseconds timeout) {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  auto res = client.Post(path_, request, "application/json");
  if (!res) throw TransportError("agent request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw TransportError("agent returned HTTP " + std::to_string(res->status));
  return res->body;
}

// ---- protocol -------------------------------------------------------------

std::optional<ExternalSpec> parse_external_spec(const std::string& spec) {
  static const std::string stdio = "external:stdio:";
  static const std::string http = "external:http:";
  if (spec.rfind(stdio, 0) == 0 && spec.size() > stdio.size())
    return ExternalSpec{ExternalSpec::Kind::stdio, spec.substr(stdio.size())};
  if (spec.rfind(http, 0) == 0 && spec.size() > http.size())
    return ExternalSpec{ExternalSpec::Kind::http, spec.substr(http.size())};
  return std::nullopt;
}

nlohmann::json bid_reply_schema() {
  const nlohmann::json line = {{"type", "object"},
                               {"required", {"qty", "price"}},
                               {"additionalProperties", false},
                               {"properties", {{"qty", integer_schema()}, {"price", integer_schema()}}}};
  return {{"type", "object"},
          {"required", {"bids"}},
          {"additionalProperties", false},
          {"properties",
           {{"bids", {{"type", "object"}, {"additionalProperties", line}}}, {"protocol_version", {{"const", 1}}}}}};
}

nlohmann::json retail_reply_schema() {
  return {{"type", "object"},
          {"required", {"prices", "slogan"}},
          {"additionalProperties", false},
          {"properties",
           {{"prices", {{"type", "object"}, {"additionalProperties", integer_schema()}}},
            {"slogan", {{"type", "string"}}},
            {"protocol_version", {{"const", 1}}}}}};
}

nlohmann::json make_bid_request(const BidObservation& obs, int attempt) {
  return {{"protocol_version", kProtocolVersion},
          {"type", "bid_request"},
          {"agent_id", obs.agent_id},
          {"attempt", attempt},
          {"payload", obs},
          {"schema", bid_reply_schema()},
          {"prompt", render_bid_prompt(obs)}};
}

nlohmann::json make_retail_request(const RetailObservation& obs, int attempt) {
  return {{"protocol_version", kProtocolVersion},
          {"type", "retail_request"},
          {"agent_id", obs.agent_id},
          {"attempt", attempt},
          {"payload", obs},
          {"schema", retail_reply_schema()},
          {"prompt", render_retail_prompt(obs)}};
}

Bid parse_bid_reply(const std::string& text) {
  const auto j = parse_object(text);
  reject_unknown_keys(j, {"bids", "protocol_version"});
  auto bids = j.find("bids");
  if (bids == j.end()) throw ReplyError("missing 'bids'");
  if (!bids->is_object()) throw ReplyError("'bids' is not an object");
  Bid bid;
  for (const auto& [item, line] : bids->items()) {
    if (item.empty()) throw ReplyError("empty item id");
    if (!line.is_object()) throw ReplyError("bid for '" + item + "' is not an object");
    reject_unknown_keys(line, {"qty", "price"});
    if (!line.contains("qty") || !line.contains("price")) throw ReplyError("bid for '" + item + "' needs qty and price");
    bid.lines[item] = {strict_non_negative(line.at("qty"), item + ".qty"),
                       strict_non_negative(line.at("price"), item + ".price")};
  }
  return bid;
}

RetailPosting parse_retail_reply(const std::string& text) {
  const auto j = parse_object(text);
  reject_unknown_keys(j, {"prices", "slogan", "protocol_version"});
  auto prices = j.find("prices");
  auto slogan = j.find("slogan");
  if (prices == j.end() || slogan == j.end()) throw ReplyError("reply needs 'prices' and 'slogan'");
  if (!prices->is_object()) throw ReplyError("'prices' is not an object");
  if (!slogan->is_string()) throw ReplyError("'slogan' is not a string");
  RetailPosting posting;
  for (const auto& [item, price] : prices->items()) {
    if (item.empty()) throw ReplyError("empty item id");
    posting.prices[item] = strict_non_negative(price, item);
  }
  posting.slogan = slogan->get<std::string>();
  return posting;
}

// ---- policy ---------------------------------------------------------------

ExternalPolicy::ExternalPolicy(std::string name, std::unique_ptr<Transport> transport, ExternalConfig config)
    : name_(std::move(name)), transport_(std::move(transport)), config_(config) {}

template <typename Obs, typename MakeRequest, typename Parse>
auto ExternalPolicy::call(const Obs& obs, MakeRequest make_request, Parse parse) {
  const auto timeout = std::chrono::milliseconds(static_cast<long long>(config_.timeout_seconds * 1000.0));
  std::string last_error;
  for (int attempt = 1; attempt <= 1 + config_.retries; ++attempt) {
    std::string reply;
    ++requests_;
    try {
      reply = transport_->exchange(make_request(obs, attempt).dump(), timeout);
    } catch (const TransportError& e) {
      throw PolicyFaultError(std::string("transport: ") + e.what());
    }
    try {
      return parse(reply);
    } catch (const ReplyError& e) {
      last_error = e.what();
    }
  }
  throw PolicyFaultError("malformed reply: " + last_error);
}

Bid ExternalPolicy::decide_bid(const BidObservation& obs) { return call(obs, make_bid_request, parse_bid_reply); }

RetailPosting ExternalPolicy::decide_retail(const RetailObservation& obs) {
  return call(obs, make_retail_request, parse_retail_reply);
}

std::unique_ptr<Policy> make_external_policy(const ExternalSpec& spec, const AgentId&, const ExternalConfig& config) {
  std::unique_ptr<Transport> transport;
  if (spec.kind == ExternalSpec::Kind::stdio) {
    transport = std::make_unique<StdioTransport>(spec.target);
    return std::make_unique<ExternalPolicy>("external:stdio:" + spec.target, std::move(transport), config);
  }
  transport = std::make_unique<HttpTransport>(spec.target);
  return std::make_unique<ExternalPolicy>("external:http:" + spec.target, std::move(transport), config);
}

}  // namespace supplysim
