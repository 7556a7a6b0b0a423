// SPDX-License-Identifier: Apache-2.0
#include "lmtc/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "lmtc/error.hpp"
#include "lmtc/metrics.hpp"
#include "lmtc/parallel.hpp"
#include "lmtc/tokenize.hpp"

namespace lmtc::baselines {

std::set<std::string> exact_match_predict(const corpus::Document& doc,
                                          const embeddings::LabelVocabulary& vocab) {
  const corpus::ZoneSpec full;
  const auto tokens = corpus::extract_zone(doc, full);
  std::set<std::string> out;
  for (Index l = 0; l < vocab.size(); ++l) {
    const auto needle = tokenize(vocab.descriptor(l));
    if (needle.empty() || needle.size() > tokens.size()) continue;
    if (std::search(tokens.begin(), tokens.end(), needle.begin(), needle.end()) !=
        tokens.end())
      out.insert(vocab.id(l));
  }
  return out;
}

Matrix exact_match_scores(const corpus::CorpusSplit& split,
                          const embeddings::LabelVocabulary& vocab) {
  Matrix scores = Matrix::Zero(static_cast<Index>(split.documents.size()),
                               vocab.size());
  for (Index t = 0; t < scores.rows(); ++t)
    for (const auto& label :
         exact_match_predict(split.documents[static_cast<size_t>(t)], vocab))
      scores(t, vocab.index_of(label)) = 1.0;
  return scores;
}

// --- TF-IDF -------------------------------------------------------------------

namespace {

// N-grams joined with spaces; tokens are alphanumeric so the join is
// unambiguous.
void for_each_ngram(const std::vector<std::string>& tokens, Index n_max,
                    const std::function<void(const std::string&)>& fn) {
  for (size_t start = 0; start < tokens.size(); ++start) {
    std::string gram;
    for (size_t n = 0; n < static_cast<size_t>(n_max) && start + n < tokens.size();
         ++n) {
      if (n) gram += ' ';
      gram += tokens[start + n];
      fn(gram);
    }
  }
}

std::vector<std::string> full_tokens(const corpus::Document& doc) {
  const corpus::ZoneSpec full;
  return corpus::extract_zone(doc, full);
}

}  // namespace

TfidfModel fit_tfidf(const corpus::CorpusSplit& train, Index n_max,
                     Index max_features) {
  if (n_max < 1) throw Error("fit_tfidf: n_max must be >= 1");
  if (train.documents.empty()) throw Error("fit_tfidf: empty corpus");
  std::unordered_map<std::string, long> counts;     // corpus term counts
  std::unordered_map<std::string, long> doc_freqs;  // document frequencies
  for (const auto& doc : train.documents) {
    std::unordered_map<std::string, long> local;
    for_each_ngram(full_tokens(doc), n_max,
                   [&](const std::string& gram) { ++local[gram]; });
    for (const auto& [gram, c] : local) {
      counts[gram] += c;
      ++doc_freqs[gram];
    }
  }
  std::vector<std::pair<std::string, long>> ordered(counts.begin(), counts.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<Index>(ordered.size()) > max_features)
    ordered.resize(static_cast<size_t>(max_features));

  TfidfModel model;
  model.n_max = n_max;
  model.max_features = max_features;
  model.idf.resize(static_cast<Index>(ordered.size()));
  const double n_docs = static_cast<double>(train.documents.size());
  for (size_t i = 0; i < ordered.size(); ++i) {
    const auto& gram = ordered[i].first;
    model.index[gram] = static_cast<Index>(i);
    model.features.push_back(gram);
    // Smoothed logarithmic IDF.
    model.idf(static_cast<Index>(i)) =
        std::log((1.0 + n_docs) /
                 (1.0 + static_cast<double>(doc_freqs.at(gram)))) +
        1.0;
  }
  return model;
}

SparseMatrix TfidfModel::transform(const corpus::CorpusSplit& split) const {
  std::vector<Eigen::Triplet<Scalar>> triplets;
  for (size_t t = 0; t < split.documents.size(); ++t) {
    std::unordered_map<Index, long> tf;
    for_each_ngram(full_tokens(split.documents[t]), n_max,
                   [&](const std::string& gram) {
                     auto it = index.find(gram);
                     if (it != index.end()) ++tf[it->second];
                   });
    double sq = 0.0;
    for (const auto& [col, count] : tf) {
      const double w = static_cast<double>(count) * idf(col);
      sq += w * w;
    }
    const double norm = sq > 0 ? std::sqrt(sq) : 1.0;
    for (const auto& [col, count] : tf)
      triplets.emplace_back(static_cast<Index>(t), col,
                            static_cast<double>(count) * idf(col) / norm);
  }
  SparseMatrix m(static_cast<Index>(split.documents.size()),
                 static_cast<Index>(features.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

// --- logistic regression --------------------------------------------------

namespace {

// Full-batch Adam on the L2-regularized binary cross-entropy of one label.
void fit_one_label(const SparseMatrix& X, const Vector& y, double reg,
                   double lr, int epochs, Vector& w, double& b) {
  const Index T = X.rows();
  const Index F = X.cols();
  w = Vector::Zero(F);
  b = 0.0;
  Vector mw = Vector::Zero(F), vw = Vector::Zero(F);
  double mb = 0.0, vb = 0.0;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= epochs; ++t) {
    Vector margin = X * w;
    margin.array() += b;
    Vector p = margin.unaryExpr(
        [](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
    Vector err = (p - y) / static_cast<double>(T);
    Vector gw = X.transpose() * err + reg * w;
    const double gb = err.sum();
    mw = beta1 * mw + (1 - beta1) * gw;
    vw = beta2 * vw + (1 - beta2) * gw.cwiseProduct(gw);
    mb = beta1 * mb + (1 - beta1) * gb;
    vb = beta2 * vb + (1 - beta2) * gb * gb;
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    w -= (lr * (mw / c1).array() / ((vw / c2).array().sqrt() + eps)).matrix();
    b -= lr * (mb / c1) / (std::sqrt(vb / c2) + eps);
  }
}

}  // namespace

LogisticModel train_logistic(const SparseMatrix& features, const Matrix& gold,
                             const embeddings::LabelVocabulary& vocab,
                             const LogisticOptions& opts) {
  if (features.rows() != gold.rows())
    throw Error("train_logistic: feature/gold row mismatch");
  if (gold.cols() != vocab.size())
    throw Error("train_logistic: gold/vocabulary size mismatch");
  const Index L = gold.cols();
  LogisticModel model;
  model.weights = Matrix::Zero(features.cols(), L);
  model.bias = RowVector::Zero(L);
  std::vector<char> degenerate(static_cast<size_t>(L), 0);
  for (Index l = 0; l < L; ++l)
    if (gold.col(l).sum() == 0.0) degenerate[static_cast<size_t>(l)] = 1;

  parallel_for(L, opts.n_threads, [&](Index begin, Index end) {
    for (Index l = begin; l < end; ++l) {
      if (degenerate[static_cast<size_t>(l)]) {
        // No positives to learn from: constant low score.
        model.bias(l) = std::log(1e-3 / (1.0 - 1e-3));
        continue;
      }
      Vector w;
      double b;
      fit_one_label(features, gold.col(l), opts.reg, opts.learning_rate,
                    opts.epochs, w, b);
      model.weights.col(l) = w;
      model.bias(l) = b;
    }
  });
  for (Index l = 0; l < L; ++l)
    if (degenerate[static_cast<size_t>(l)]) model.flagged.push_back(vocab.id(l));
  return model;
}

Matrix LogisticModel::predict_scores(const SparseMatrix& features) const {
  Matrix logits = Matrix(features * weights);
  logits.rowwise() += bias;
  return logits.unaryExpr(
      [](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
}

double select_regularization(const SparseMatrix& train_features,
                             const Matrix& train_gold,
                             const SparseMatrix& dev_features,
                             const Matrix& dev_gold,
                             const embeddings::LabelVocabulary& vocab,
                             const std::vector<double>& candidates,
                             const LogisticOptions& opts) {
  if (candidates.empty()) throw Error("select_regularization: no candidates");
  double best_reg = candidates.front();
  double best_f1 = -1.0;
  for (double reg : candidates) {
    LogisticOptions o = opts;
    o.reg = reg;
    LogisticModel model = train_logistic(train_features, train_gold, vocab, o);
    const double f1 = metrics::micro_f1(model.predict_scores(dev_features),
                                        dev_gold);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_reg = reg;
    }
  }
  return best_reg;
}

}  // namespace lmtc::baselines
