#pragma once

#include <string>
#include <vector>

namespace homlab::cli {

// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.
int run(const std::vector<std::string>& args);

}  // namespace homlab::cli
