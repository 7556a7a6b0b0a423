// SPDX-License-Identifier: Apache-2.0
// Independent brute-force oracles used by the unit and acceptance suites.
// These walk the data with plain loops and set scans, sharing no code with
// the implementations they check.
#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "lmtc/metrics.hpp"
#include "lmtc/rng.hpp"

namespace lmtc_oracles {

using lmtc::metrics::DocEval;
using lmtc::metrics::EvalInstance;

inline int count_hits(const DocEval& doc, int k) {
  int hits = 0;
  for (size_t i = 0; i < doc.ranking.size() && static_cast<int>(i) < k; ++i) {
    for (const auto& g : doc.gold)
      if (g == doc.ranking[i].first) {
        ++hits;
        break;
      }
  }
  return hits;
}

inline double precision_oracle(const EvalInstance& inst, int k) {
  if (inst.docs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& doc : inst.docs)
    total += static_cast<double>(count_hits(doc, k)) / static_cast<double>(k);
  return total / static_cast<double>(inst.docs.size());
}

inline double recall_oracle(const EvalInstance& inst, int k) {
  double total = 0.0;
  long n = 0;
  for (const auto& doc : inst.docs) {
    if (doc.gold.empty()) continue;
    total += static_cast<double>(count_hits(doc, k)) /
             static_cast<double>(doc.gold.size());
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

inline double r_precision_oracle(const EvalInstance& inst, int k) {
  double total = 0.0;
  long n = 0;
  for (const auto& doc : inst.docs) {
    if (doc.gold.empty()) continue;
    const double denom = std::min<double>(static_cast<double>(k),
                                          static_cast<double>(doc.gold.size()));
    total += static_cast<double>(count_hits(doc, k)) / denom;
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

inline double ndcg_oracle(const EvalInstance& inst, int k) {
  double total = 0.0;
  long n = 0;
  for (const auto& doc : inst.docs) {
    if (doc.gold.empty()) continue;
    double dcg = 0.0;
    for (size_t i = 0; i < doc.ranking.size() && static_cast<int>(i) < k; ++i) {
      bool hit = false;
      for (const auto& g : doc.gold) hit = hit || (g == doc.ranking[i].first);
      if (hit) dcg += 1.0 / std::log2(2.0 + static_cast<double>(i));
    }
    double ideal = 0.0;
    for (size_t i = 0;
         i < doc.gold.size() && static_cast<int>(i) < k; ++i)
      ideal += 1.0 / std::log2(2.0 + static_cast<double>(i));
    total += dcg / ideal;
    ++n;
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

inline double micro_f1_oracle(const EvalInstance& inst, double threshold) {
  long tp = 0, fp = 0, fn = 0;
  for (const auto& doc : inst.docs) {
    std::set<std::string> predicted;
    for (const auto& [label, score] : doc.ranking)
      if (score >= threshold) predicted.insert(label);
    for (const auto& p : predicted)
      doc.gold.count(p) ? ++tp : ++fp;
    for (const auto& g : doc.gold)
      if (!predicted.count(g)) ++fn;
  }
  if (2 * tp + fp + fn == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) /
         static_cast<double>(2 * tp + fp + fn);
}

// Random instance construction shared by the oracle-equivalence checks.
// allow_empty_gold leaves some documents with no gold labels.
inline EvalInstance random_instance(lmtc::Rng& rng, int max_docs, int max_labels,
                                    bool allow_empty_gold = true) {
  const int T = static_cast<int>(rng.uniform_int(1, max_docs));
  const int L = static_cast<int>(rng.uniform_int(2, max_labels));
  EvalInstance inst;
  for (int t = 0; t < T; ++t) {
    DocEval doc;
    doc.doc_id = "doc" + std::to_string(t);
    std::vector<std::pair<std::string, double>> ranking;
    for (int l = 0; l < L; ++l) {
      const std::string label = "lab" + std::to_string(l);
      ranking.emplace_back(label, rng.next_unit());
      if (rng.bernoulli(0.2)) doc.gold.insert(label);
    }
    if (!allow_empty_gold && doc.gold.empty())
      doc.gold.insert(ranking[static_cast<size_t>(
                                  rng.uniform_int(0, L - 1))].first);
    std::stable_sort(ranking.begin(), ranking.end(),
                     [](const auto& a, const auto& b) {
                       if (a.second != b.second) return a.second > b.second;
                       return a.first < b.first;
                     });
    doc.ranking = std::move(ranking);
    inst.docs.push_back(std::move(doc));
  }
  return inst;
}

}  // namespace lmtc_oracles
