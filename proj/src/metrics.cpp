// SPDX-License-Identifier: Apache-2.0
#include "lmtc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lmtc/error.hpp"

namespace lmtc::metrics {

std::vector<std::pair<std::string, Scalar>> rank_scores(
    const RowVector& scores, const embeddings::LabelVocabulary& vocab) {
  if (scores.size() != vocab.size())
    throw Error("rank_scores: score/vocabulary size mismatch");
  std::vector<std::pair<std::string, Scalar>> ranking;
  ranking.reserve(static_cast<size_t>(scores.size()));
  for (Index l = 0; l < scores.size(); ++l)
    ranking.emplace_back(vocab.id(l), scores(l));
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  return ranking;
}

EvalInstance EvalInstance::from_scores(
    const std::vector<std::string>& doc_ids, const Matrix& scores,
    const embeddings::LabelVocabulary& vocab,
    const std::vector<std::set<std::string>>& gold) {
  if (static_cast<Index>(doc_ids.size()) != scores.rows() ||
      doc_ids.size() != gold.size())
    throw Error("EvalInstance: misaligned inputs");
  EvalInstance inst;
  for (size_t t = 0; t < doc_ids.size(); ++t) {
    DocEval doc;
    doc.doc_id = doc_ids[t];
    doc.gold = gold[t];
    doc.ranking = rank_scores(scores.row(static_cast<Index>(t)), vocab);
    inst.docs.push_back(std::move(doc));
  }
  std::sort(inst.docs.begin(), inst.docs.end(),
            [](const DocEval& a, const DocEval& b) { return a.doc_id < b.doc_id; });
  return inst;
}

int hits_at_k(const DocEval& doc, int k) {
  const int top = std::min<int>(k, static_cast<int>(doc.ranking.size()));
  int hits = 0;
  for (int i = 0; i < top; ++i)
    if (doc.gold.count(doc.ranking[static_cast<size_t>(i)].first)) ++hits;
  return hits;
}

double precision_at_k(const EvalInstance& inst, int k) {
  if (k < 1) throw Error("precision_at_k: k must be >= 1");
  if (inst.docs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& doc : inst.docs)
    sum += static_cast<double>(hits_at_k(doc, k)) / k;
  return sum / static_cast<double>(inst.docs.size());
}

double recall_at_k(const EvalInstance& inst, int k) {
  if (k < 1) throw Error("recall_at_k: k must be >= 1");
  double sum = 0.0;
  long counted = 0;
  for (const auto& doc : inst.docs) {
    if (doc.gold.empty()) continue;
    sum += static_cast<double>(hits_at_k(doc, k)) /
           static_cast<double>(doc.gold.size());
    ++counted;
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

double r_precision_at_k(const EvalInstance& inst, int k) {
  if (k < 1) throw Error("r_precision_at_k: k must be >= 1");
  double sum = 0.0;
  long counted = 0;
  for (const auto& doc : inst.docs) {
    if (doc.gold.empty()) continue;
    const auto denom = std::min<size_t>(static_cast<size_t>(k), doc.gold.size());
    sum += static_cast<double>(hits_at_k(doc, k)) / static_cast<double>(denom);
    ++counted;
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

double ndcg_at_k(const EvalInstance& inst, int k) {
  if (k < 1) throw Error("ndcg_at_k: k must be >= 1");
  double sum = 0.0;
  long counted = 0;
  for (const auto& doc : inst.docs) {
    if (doc.gold.empty()) continue;
    const int top = std::min<int>(k, static_cast<int>(doc.ranking.size()));
    double dcg = 0.0;
    for (int i = 0; i < top; ++i)
      if (doc.gold.count(doc.ranking[static_cast<size_t>(i)].first))
        dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    const int ideal = std::min<int>(k, static_cast<int>(doc.gold.size()));
    double idcg = 0.0;
    for (int i = 0; i < ideal; ++i)
      idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    sum += dcg / idcg;
    ++counted;
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

double cumulative_hits_dcg_at_k(const EvalInstance& inst, int k) {
  if (k < 1) throw Error("cumulative_hits_dcg_at_k: k must be >= 1");
  if (inst.docs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& doc : inst.docs) {
    double dcg = 0.0;
    for (int kk = 1; kk <= k; ++kk)
      dcg += (std::pow(2.0, hits_at_k(doc, kk)) - 1.0) /
             std::log(static_cast<double>(kk) + 1.0);
    sum += dcg;
  }
  return sum / static_cast<double>(inst.docs.size());
}

double micro_f1(const Matrix& scores, const Matrix& gold, double threshold) {
  if (scores.rows() != gold.rows() || scores.cols() != gold.cols())
    throw Error("micro_f1: shape mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (Index t = 0; t < scores.rows(); ++t)
    for (Index l = 0; l < scores.cols(); ++l) {
      const bool pred = scores(t, l) >= threshold;
      const bool is_gold = gold(t, l) != 0.0;
      if (pred && is_gold) ++tp;
      else if (pred) ++fp;
      else if (is_gold) ++fn;
    }
  const long denom = 2 * tp + fp + fn;
  return denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
}

double micro_f1(const EvalInstance& inst, double threshold) {
  long tp = 0, fp = 0, fn = 0;
  for (const auto& doc : inst.docs) {
    long hit = 0;
    for (const auto& [label, score] : doc.ranking) {
      if (score < threshold) continue;
      if (doc.gold.count(label)) {
        ++tp;
        ++hit;
      } else {
        ++fp;
      }
    }
    fn += static_cast<long>(doc.gold.size()) - hit;
  }
  const long denom = 2 * tp + fp + fn;
  return denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
}

EvalInstance filter_to_bucket(const EvalInstance& inst,
                              const std::set<std::string>& bucket_labels,
                              BucketProtocol protocol) {
  EvalInstance out;
  for (const auto& doc : inst.docs) {
    DocEval filtered;
    filtered.doc_id = doc.doc_id;
    for (const auto& label : doc.gold)
      if (bucket_labels.count(label)) filtered.gold.insert(label);
    if (filtered.gold.empty()) continue;  // excluded from bucket averages
    if (protocol == BucketProtocol::FilterBoth) {
      for (const auto& entry : doc.ranking)
        if (bucket_labels.count(entry.first)) filtered.ranking.push_back(entry);
    } else {
      filtered.ranking = doc.ranking;
    }
    out.docs.push_back(std::move(filtered));
  }
  return out;
}

double MetricReport::get(const std::string& bucket, const std::string& metric,
                         int k) const {
  return values.at(bucket).at(metric).at(k);
}

Json MetricReport::to_json() const {
  Json j;
  j["ks"] = ks;
  j["micro_f1"] = micro_f1_all;
  Json buckets = Json::object();
  for (const auto& [bucket, metric_map] : values) {
    Json m = Json::object();
    for (const auto& [metric, k_map] : metric_map) {
      Json kv = Json::object();
      for (const auto& [k, value] : k_map) kv[std::to_string(k)] = value;
      m[metric] = kv;
    }
    buckets[bucket] = m;
  }
  j["buckets"] = buckets;
  return j;
}

MetricReport bucket_report(const EvalInstance& inst,
                           const corpus::FrequencyBuckets& buckets,
                           const std::vector<int>& ks,
                           BucketProtocol protocol) {
  MetricReport report;
  report.ks = ks;
  report.micro_f1_all = micro_f1(inst);
  const std::vector<std::pair<std::string, const std::set<std::string>*>> parts = {
      {"frequent", &buckets.frequent},
      {"few", &buckets.few_shot},
      {"zero", &buckets.zero_shot},
  };
  auto fill = [&](const std::string& name, const EvalInstance& sub) {
    for (int k : ks) {
      report.values[name]["p"][k] = precision_at_k(sub, k);
      report.values[name]["r"][k] = recall_at_k(sub, k);
      report.values[name]["rp"][k] = r_precision_at_k(sub, k);
      report.values[name]["ndcg"][k] = ndcg_at_k(sub, k);
    }
  };
  fill("all", inst);
  for (const auto& [name, labels] : parts)
    fill(name, filter_to_bucket(inst, *labels, protocol));
  return report;
}

std::map<std::string, double> flatten(const MetricReport& report) {
  std::map<std::string, double> flat;
  flat["micro_f1"] = report.micro_f1_all;
  for (const auto& [bucket, metric_map] : report.values)
    for (const auto& [metric, k_map] : metric_map)
      for (const auto& [k, value] : k_map)
        flat[bucket + "/" + metric + "@" + std::to_string(k)] = value;
  return flat;
}

void write_predictions(const std::string& path, const EvalInstance& inst) {
  std::string body;
  for (const auto& doc : inst.docs) {
    Json j;
    j["doc_id"] = doc.doc_id;
    Json ranking = Json::array();
    for (const auto& [label, score] : doc.ranking)
      ranking.push_back(Json::array({label, score}));
    j["ranking"] = ranking;
    body += j.dump();
    body += '\n';
  }
  write_text_file(path, body);
}

std::map<std::string, std::set<std::string>> read_gold(const std::string& path) {
  Json j = read_json_file(path);
  if (!j.is_object()) throw Error(path + ": gold file must be a JSON object");
  std::map<std::string, std::set<std::string>> gold;
  for (const auto& item : j.items()) {
    if (!item.value().is_array())
      throw Error(path + ": gold for '" + item.key() + "' must be an array");
    std::set<std::string> labels;
    for (const auto& l : item.value()) labels.insert(l.get<std::string>());
    gold[item.key()] = std::move(labels);
  }
  return gold;
}

void write_gold(const std::string& path, const corpus::CorpusSplit& split) {
  Json j = Json::object();
  for (const auto& doc : split.documents)
    j[doc.doc_id] = std::vector<std::string>(doc.gold_labels.begin(),
                                             doc.gold_labels.end());
  write_json_file(path, j);
}

EvalInstance read_eval_instance(const std::string& predictions_path,
                                const std::string& gold_path) {
  auto gold = read_gold(gold_path);
  EvalInstance inst;
  std::set<std::string> seen;
  for (const auto& j : read_json_lines(predictions_path)) {
    DocEval doc;
    doc.doc_id = j.at("doc_id").get<std::string>();
    if (!seen.insert(doc.doc_id).second)
      throw Error(predictions_path + ": duplicate doc_id '" + doc.doc_id + "'");
    auto it = gold.find(doc.doc_id);
    if (it == gold.end())
      throw Error(predictions_path + ": doc '" + doc.doc_id +
                  "' has no gold entry");
    doc.gold = it->second;
    std::set<std::string> labels;
    for (const auto& entry : j.at("ranking")) {
      const std::string label = entry.at(0).get<std::string>();
      if (!labels.insert(label).second)
        throw Error(predictions_path + ": doc '" + doc.doc_id +
                    "' ranks label '" + label + "' twice");
      doc.ranking.emplace_back(label, entry.at(1).get<double>());
    }
    // Normalize so downstream metrics can rely on the ordering invariant.
    std::stable_sort(doc.ranking.begin(), doc.ranking.end(),
                     [](const auto& a, const auto& b) {
                       if (a.second != b.second) return a.second > b.second;
                       return a.first < b.first;
                     });
    inst.docs.push_back(std::move(doc));
  }
  for (const auto& [doc_id, labels] : gold)
    if (!seen.count(doc_id))
      throw Error(predictions_path + ": missing predictions for doc '" +
                  doc_id + "'");
  std::sort(inst.docs.begin(), inst.docs.end(),
            [](const DocEval& a, const DocEval& b) { return a.doc_id < b.doc_id; });
  return inst;
}

}  // namespace lmtc::metrics
