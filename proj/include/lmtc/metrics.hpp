// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lmtc/corpus.hpp"
#include "lmtc/json_util.hpp"
#include "lmtc/labels.hpp"
#include "lmtc/types.hpp"

namespace lmtc::metrics {

// One evaluated document: gold set plus the full ranking, scores
// non-increasing with ties broken by label id.
struct DocEval {
  std::string doc_id;
  std::set<std::string> gold;
  std::vector<std::pair<std::string, Scalar>> ranking;
};

struct EvalInstance {
  std::vector<DocEval> docs;  // sorted by doc_id

  static EvalInstance from_scores(const std::vector<std::string>& doc_ids,
                                  const Matrix& scores,
                                  const embeddings::LabelVocabulary& vocab,
                                  const std::vector<std::set<std::string>>& gold);
};

std::vector<std::pair<std::string, Scalar>> rank_scores(
    const RowVector& scores, const embeddings::LabelVocabulary& vocab);

// S_t(k): correct labels among the top k of the ranking.
int hits_at_k(const DocEval& doc, int k);

// Macro averages over documents. P@K counts every document; R@K, RP@K and
// nDCG@K skip documents with no gold labels (their denominators vanish).
double precision_at_k(const EvalInstance& inst, int k);
double recall_at_k(const EvalInstance& inst, int k);
double r_precision_at_k(const EvalInstance& inst, int k);

// Standard nDCG: binary relevance, log2 discount, ideal-DCG normalization.
double ndcg_at_k(const EvalInstance& inst, int k);

// Unnormalized variant whose gain at rank k is the cumulative hit count up
// to k, discounted by the natural log. Unbounded; kept for comparison with
// the normalized default.
double cumulative_hits_dcg_at_k(const EvalInstance& inst, int k);

// Global confusion counts over all (document, label) pairs at the threshold.
double micro_f1(const Matrix& scores, const Matrix& gold, double threshold = 0.5);
double micro_f1(const EvalInstance& inst, double threshold = 0.5);

// FilterBoth restricts gold and candidates to the bucket and re-ranks,
// FilterGoldOnly keeps the full ranking and restricts only the gold sets.
enum class BucketProtocol { FilterBoth, FilterGoldOnly };

EvalInstance filter_to_bucket(const EvalInstance& inst,
                              const std::set<std::string>& bucket_labels,
                              BucketProtocol protocol);

struct MetricReport {
  std::vector<int> ks;
  double micro_f1_all = 0.0;
  // bucket ("all", "frequent", "few", "zero") -> metric ("p","r","rp","ndcg")
  // -> K -> value
  std::map<std::string, std::map<std::string, std::map<int, double>>> values;

  double get(const std::string& bucket, const std::string& metric, int k) const;
  Json to_json() const;
};

MetricReport bucket_report(const EvalInstance& inst,
                           const corpus::FrequencyBuckets& buckets,
                           const std::vector<int>& ks,
                           BucketProtocol protocol = BucketProtocol::FilterBoth);

// "<bucket>/<metric>@<k>" plus "micro_f1" -> value; fodder for aggregation.
std::map<std::string, double> flatten(const MetricReport& report);

// JSON-lines, one record per document: {"doc_id": ..., "ranking": [[label,
// score], ...]}.
void write_predictions(const std::string& path, const EvalInstance& inst);

std::map<std::string, std::set<std::string>> read_gold(const std::string& path);
void write_gold(const std::string& path, const corpus::CorpusSplit& split);

// Joins predictions with gold; any document present on one side only is
// fatal, with the doc_id in the message.
EvalInstance read_eval_instance(const std::string& predictions_path,
                                const std::string& gold_path);

}  // namespace lmtc::metrics
