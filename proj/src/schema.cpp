// SPDX-License-Identifier: Apache-2.0
#include "lmtc/schema.hpp"

namespace lmtc {

namespace {

bool type_matches(const std::string& type, const Json& v) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer() || v.is_number_unsigned();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  return false;
}

void check(const Json& schema, const Json& v, const std::string& where,
           std::vector<std::string>& errors) {
  if (schema.is_boolean()) {
    if (!schema.get<bool>()) errors.push_back(where + ": not allowed");
    return;
  }
  if (!schema.is_object()) return;

  if (schema.contains("type")) {
    bool ok = false;
    if (schema["type"].is_array()) {
      for (const auto& t : schema["type"])
        ok = ok || type_matches(t.get<std::string>(), v);
    } else {
      ok = type_matches(schema["type"].get<std::string>(), v);
    }
    if (!ok) {
      errors.push_back(where + ": expected type " + schema["type"].dump());
      return;
    }
  }

  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& e : schema["enum"]) ok = ok || (e == v);
    if (!ok) errors.push_back(where + ": value not in enum");
  }

  if (v.is_number() && schema.contains("minimum") &&
      v.get<double>() < schema["minimum"].get<double>())
    errors.push_back(where + ": below minimum");

  if (v.is_array()) {
    if (schema.contains("minItems") &&
        v.size() < schema["minItems"].get<size_t>())
      errors.push_back(where + ": too few items");
    if (schema.contains("items")) {
      size_t i = 0;
      for (const auto& item : v)
        check(schema["items"], item, where + "[" + std::to_string(i++) + "]",
              errors);
    }
  }

  if (v.is_object()) {
    if (schema.contains("required"))
      for (const auto& key : schema["required"])
        if (!v.contains(key.get<std::string>()))
          errors.push_back(where + ": missing required key '" +
                           key.get<std::string>() + "'");
    const Json props =
        schema.contains("properties") ? schema["properties"] : Json::object();
    for (const auto& item : v.items()) {
      if (props.contains(item.key())) {
        check(props[item.key()], item.value(), where + "." + item.key(), errors);
      } else if (schema.contains("additionalProperties")) {
        const Json& ap = schema["additionalProperties"];
        if (ap.is_boolean() && !ap.get<bool>())
          errors.push_back(where + ": unexpected key '" + item.key() + "'");
        else if (!ap.is_boolean())
          check(ap, item.value(), where + "." + item.key(), errors);
      }
    }
  }
}

}  // namespace

std::vector<std::string> validate_json_schema(const Json& schema,
                                              const Json& instance,
                                              const std::string& where) {
  std::vector<std::string> errors;
  check(schema, instance, where, errors);
  return errors;
}

}  // namespace lmtc
