// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lmtc/json_util.hpp"
#include "lmtc/types.hpp"

namespace lmtc::embeddings {

// The L labels in a fixed order shared by every score and gold matrix.
// Loading from JSON orders labels lexicographically by id.
class LabelVocabulary {
 public:
  void add(const std::string& id, const std::string& descriptor);

  Index size() const { return static_cast<Index>(labels_.size()); }
  const std::string& id(Index i) const { return labels_[static_cast<size_t>(i)].first; }
  const std::string& descriptor(Index i) const {
    return labels_[static_cast<size_t>(i)].second;
  }
  Index index_of(const std::string& id) const;  // -1 when absent
  bool contains(const std::string& id) const { return index_of(id) >= 0; }
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return labels_;
  }

  Json to_json() const;  // {"id": "descriptor", ...}
  static LabelVocabulary from_json(const Json& j);
  static LabelVocabulary from_json_file(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> labels_;
  std::unordered_map<std::string, Index> index_;
};

}  // namespace lmtc::embeddings
