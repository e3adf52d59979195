// Scripted stand-in for an external agent process, used by the bridge tests.
//   fake_agent <mode> [record-file]
// Modes: zero, malformed, garbage, unknown, flaky, sleep, exit. When a record
// file is given every request line is appended to it.

#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace {

std::string zero_reply(const nlohmann::json& req) {
  if (req.value("type", "") == "bid_request") return R"({"bids":{}})";
  return R"({"prices":{},"slogan":""})";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "zero";
  const std::string record = argc > 2 ? argv[2] : "";
  std::string line;
  while (std::getline(std::cin, line)) {
    nlohmann::json req = nlohmann::json::parse(line, nullptr, false);
    if (!record.empty()) {
      std::ofstream(record, std::ios::app) << line << '\n';
    }
    std::string reply;
    if (mode == "malformed") {
      reply = R"({"bids": {"item1": {"qty": 1, "price": 60},},})";
    } else if (mode == "garbage") {
      reply = "Sure! Here are my bids: none";
    } else if (mode == "unknown") {
      if (req.value("type", "") == "bid_request") {
        reply = R"({"bids":{"no_such_item":{"qty":3,"price":10},"item1":{"qty":2,"price":60}},"protocol_version":1})";
      } else {
        reply = zero_reply(req);
      }
    } else if (mode == "flaky") {
      reply = req.value("attempt", 1) == 1 ? "{not json" : zero_reply(req);
    } else if (mode == "sleep") {
      std::this_thread::sleep_for(std::chrono::seconds(30));
      reply = zero_reply(req);
    } else if (mode == "exit") {
      return 0;
    } else {
      reply = zero_reply(req);
    }
    std::cout << reply << std::endl;
  }
  return 0;
}
