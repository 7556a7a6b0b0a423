// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "lmtc/json_util.hpp"

namespace lmtc {

// Structural validator for the subset of JSON Schema the shipped schemas
// use: type, properties, required, additionalProperties, items, enum,
// minimum, minItems. Returns one message per violation.
std::vector<std::string> validate_json_schema(const Json& schema,
                                              const Json& instance,
                                              const std::string& where = "$");

}  // namespace lmtc
