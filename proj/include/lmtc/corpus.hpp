// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "lmtc/json_util.hpp"
#include "lmtc/labels.hpp"
#include "lmtc/types.hpp"

namespace lmtc::corpus {

// One legislative act with four text zones and its gold label set.
struct Document {
  std::string doc_id;
  std::string header;
  std::string recitals;
  std::vector<std::string> main_body;  // one string per article
  std::string attachments;
  std::set<std::string> gold_labels;

  bool all_zones_empty() const;
  Json to_json() const;
  // Throws Error on missing doc_id / gold labels or ill-typed fields.
  static Document from_json(const Json& j);
};

struct CorpusSplit {
  std::string name;  // train / dev / test
  std::vector<Document> documents;

  const Document* find(const std::string& doc_id) const;
};

struct FrequencyBuckets {
  std::set<std::string> frequent;
  std::set<std::string> few_shot;
  std::set<std::string> zero_shot;

  // 0 = frequent, 1 = few_shot, 2 = zero_shot, -1 = unknown label.
  int bucket_of(const std::string& label) const;
  Json to_json() const;
  static FrequencyBuckets from_json(const Json& j);
  static FrequencyBuckets from_json_file(const std::string& path);
};

enum class ZoneMode { Header, Recitals, HeaderRecitals, MainBody, Full, FirstK };

struct ZoneSpec {
  ZoneMode mode = ZoneMode::Full;
  Index k = 0;  // FirstK only, >= 1

  // "H", "R", "H+R", "MB", "FULL", "FIRST_<k>" (case-insensitive).
  static ZoneSpec parse(const std::string& text);
  std::string str() const;
};

struct LoadReport {
  std::vector<std::string> record_errors;  // position-tagged messages
};

// Accepts a directory of one JSON file per document or a single file with one
// JSON object per line. Missing path is fatal; bad records are collected into
// the report (and skipped), not fatal.
CorpusSplit load_corpus(const std::string& path, const std::string& split_name,
                        LoadReport* report = nullptr);

void write_corpus_dir(const std::string& dir, const CorpusSplit& split);
void write_corpus_jsonl(const std::string& path, const CorpusSplit& split);

// One message per gold label id not present in the vocabulary.
std::vector<std::string> validate_labels(const CorpusSplit& split,
                                         const embeddings::LabelVocabulary& vocab);

// [header, recitals, article_1..article_m, attachments] as token sequences,
// empty zones omitted.
std::vector<std::vector<std::string>> split_sections(const Document& doc);

// Sections restricted to the requested zones; FIRST_K truncates the FULL
// section list to its first k tokens.
std::vector<std::vector<std::string>> zone_sections(const Document& doc,
                                                    const ZoneSpec& spec);

std::vector<std::string> extract_zone(const Document& doc, const ZoneSpec& spec);

// frequent: train count > threshold; few_shot: in [1, threshold]; zero_shot:
// count 0. Counts exactly at the threshold land in few_shot.
FrequencyBuckets bucket_labels(const CorpusSplit& train,
                               const embeddings::LabelVocabulary& vocab,
                               long threshold = 50);

Matrix gold_matrix(const CorpusSplit& split,
                   const embeddings::LabelVocabulary& vocab);

// ---------------------------------------------------------------------------
// Synthetic corpora. Every document's gold labels are recoverable from its
// planted trigger tokens: label <=> all its trigger tokens occur in the text.

struct SyntheticSpec {
  Index n_docs = 200;
  Index n_labels = 20;
  Index vocab_size = 50;  // background tokens
  // label id -> trigger token sequence; unlisted labels get one auto token.
  // Trigger sets must be single-token-per-entry alphanumeric and pairwise
  // disjoint across labels, otherwise gold recovery would be ambiguous.
  std::map<std::string, std::vector<std::string>> planted;
  uint64_t seed = 1;

  // Frequency profile. Negative values pick defaults (40% / 45% / 15%).
  Index n_frequent = -1;
  Index n_few = -1;
  Index n_zero = -1;
  long bucket_threshold = 50;
  Index frequent_train_count = -1;  // default threshold + 10
  Index few_train_count = -1;       // default min(10, threshold)
  Index eval_count = 5;             // per-label dev and test appearances

  Index background_tokens_per_zone = 6;
  Index articles_per_doc = 2;
  double dev_fraction = 0.15;
  double test_fraction = 0.15;

  void validate() const;  // throws ConfigError on inconsistent parameters
  std::string label_id(Index i) const;
};

struct SyntheticCorpus {
  CorpusSplit train, dev, test;
  embeddings::LabelVocabulary labels;
  FrequencyBuckets planned_buckets;
  std::map<std::string, std::vector<std::string>> triggers;
  std::vector<std::string> background;

  std::vector<std::string> all_tokens() const;  // background + triggers, sorted
  const CorpusSplit& split(const std::string& name) const;

  // dir/{train,dev,test}/<doc_id>.json + dir/labels.json + dir/synth_meta.json
  void write(const std::string& dir) const;
};

// Deterministic for a fixed spec (same seed twice gives byte-identical
// corpora once serialized).
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace lmtc::corpus
