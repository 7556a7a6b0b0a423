// SPDX-License-Identifier: Apache-2.0
#include "lmtc/labels.hpp"

#include "lmtc/error.hpp"

namespace lmtc::embeddings {

void LabelVocabulary::add(const std::string& id, const std::string& descriptor) {
  if (id.empty()) throw Error("label id must be non-empty");
  if (descriptor.empty())
    throw Error("label '" + id + "': descriptor must be non-empty");
  if (index_.count(id)) throw Error("duplicate label id '" + id + "'");
  index_[id] = static_cast<Index>(labels_.size());
  labels_.emplace_back(id, descriptor);
}

Index LabelVocabulary::index_of(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

Json LabelVocabulary::to_json() const {
  Json j = Json::object();
  for (const auto& [id, descriptor] : labels_) j[id] = descriptor;
  return j;
}

LabelVocabulary LabelVocabulary::from_json(const Json& j) {
  if (!j.is_object()) throw Error("label vocabulary: expected a JSON object");
  LabelVocabulary vocab;
  // nlohmann objects iterate in key order, which fixes the label order.
  for (const auto& item : j.items()) {
    if (!item.value().is_string())
      throw Error("label '" + item.key() + "': descriptor must be a string");
    vocab.add(item.key(), item.value().get<std::string>());
  }
  return vocab;
}

LabelVocabulary LabelVocabulary::from_json_file(const std::string& path) {
  return from_json(read_json_file(path));
}

}  // namespace lmtc::embeddings
