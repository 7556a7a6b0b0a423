// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

#include "lmtc/corpus.hpp"
#include "lmtc/labels.hpp"
#include "lmtc/types.hpp"

namespace lmtc::baselines {

using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

// Labels whose descriptor token sequence occurs contiguously in the
// document's full-text token sequence (case-insensitive via the tokenizer).
std::set<std::string> exact_match_predict(const corpus::Document& doc,
                                          const embeddings::LabelVocabulary& vocab);

// 0/1 score matrix [T, L] for a whole split.
Matrix exact_match_scores(const corpus::CorpusSplit& split,
                          const embeddings::LabelVocabulary& vocab);

// TF-IDF over word n-grams (n = 1..n_max). Raw term frequency times smoothed
// logarithmic IDF, rows L2-normalized. IDF statistics and the feature map
// come from the fit split only; transform never adds columns.
struct TfidfModel {
  Index n_max = 5;
  Index max_features = 400000;
  std::vector<std::string> features;  // ordered: train count desc, then name
  std::unordered_map<std::string, Index> index;
  Vector idf;

  SparseMatrix transform(const corpus::CorpusSplit& split) const;
};

TfidfModel fit_tfidf(const corpus::CorpusSplit& train, Index n_max = 5,
                     Index max_features = 400000);

struct LogisticOptions {
  double reg = 1e-4;          // L2 strength on weights (not bias)
  double learning_rate = 0.5; // full-batch Adam
  int epochs = 300;
  int n_threads = 1;
};

// One-vs-rest logistic regression; L independent binary classifiers.
struct LogisticModel {
  Matrix weights;   // [F, L]
  RowVector bias;   // [1, L]
  std::vector<std::string> flagged;  // labels with zero train positives

  Matrix predict_scores(const SparseMatrix& features) const;  // [T, L] in (0,1)
};

LogisticModel train_logistic(const SparseMatrix& features, const Matrix& gold,
                             const embeddings::LabelVocabulary& vocab,
                             const LogisticOptions& opts = {});

// Picks the candidate regularization strength with the best dev micro-F1.
double select_regularization(const SparseMatrix& train_features,
                             const Matrix& train_gold,
                             const SparseMatrix& dev_features,
                             const Matrix& dev_gold,
                             const embeddings::LabelVocabulary& vocab,
                             const std::vector<double>& candidates,
                             const LogisticOptions& opts = {});

}  // namespace lmtc::baselines
