// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lmtc {

// Lowercased maximal runs of ASCII letters and digits. Whitespace,
// punctuation and non-ASCII bytes all separate tokens and are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Token count without materializing the tokens.
size_t count_tokens(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace lmtc
