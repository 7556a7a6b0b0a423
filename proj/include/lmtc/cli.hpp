// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace lmtc::cli {

// Exit codes: 0 success, 2 usage/configuration errors, 1 runtime failures.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without argv[0]

}  // namespace lmtc::cli
