// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace lmtc {

using Json = nlohmann::json;

Json read_json_file(const std::string& path);
std::vector<Json> read_json_lines(const std::string& path);
void write_json_file(const std::string& path, const Json& j, int indent = 2);
void append_json_line(const std::string& path, const Json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Rejects keys outside `allowed`. `context` names the object in the message.
void require_keys_subset(const Json& obj,
                         const std::vector<std::string>& allowed,
                         const std::string& context);

}  // namespace lmtc
