#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace supplysim {

// Exit codes: 0 success, 1 verification or episode failure, 2 usage or config error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "7", "1..10" or "1,4,9" (ranges may appear inside lists). Throws std::invalid_argument.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace supplysim
