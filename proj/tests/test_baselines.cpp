// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "lmtc/baselines.hpp"
#include "lmtc/corpus.hpp"
#include "lmtc/error.hpp"
#include "lmtc/metrics.hpp"
#include "lmtc/rng.hpp"

using namespace lmtc;
using namespace lmtc::baselines;

namespace {

corpus::Document doc_of(const std::string& id, const std::string& text,
                        std::set<std::string> labels = {}) {
  corpus::Document d;
  d.doc_id = id;
  d.header = text;
  d.gold_labels = std::move(labels);
  return d;
}

}  // namespace

TEST_CASE("exact match needs the descriptor tokens contiguously") {
  embeddings::LabelVocabulary vocab;
  vocab.add("dp", "data protection");
  vocab.add("tax", "taxation");

  CHECK(exact_match_predict(doc_of("a", "a regulation on Data Protection, and more"),
                            vocab) == std::set<std::string>{"dp"});
  // tokens present but not adjacent
  CHECK(exact_match_predict(doc_of("b", "data on the protection of birds"), vocab)
            .empty());
  CHECK(exact_match_predict(doc_of("c", "TAXATION rules"), vocab) ==
        std::set<std::string>{"tax"});
}

TEST_CASE("exact match recovers planted descriptors exactly") {
  corpus::SyntheticSpec spec;
  spec.n_docs = 30;
  spec.n_labels = 4;
  spec.vocab_size = 15;
  spec.seed = 5;
  spec.bucket_threshold = 3;
  spec.frequent_train_count = 6;
  spec.few_train_count = 1;
  auto synth = corpus::generate_synthetic_corpus(spec);
  // descriptors are the trigger tokens, so exact match equals the gold set
  for (const auto& doc : synth.train.documents)
    CHECK(exact_match_predict(doc, synth.labels) == doc.gold_labels);
}

TEST_CASE("exact match is idempotent and depends only on the token sequence") {
  embeddings::LabelVocabulary vocab;
  vocab.add("x", "alpha beta");
  corpus::Document d = doc_of("a", "alpha beta gamma");
  auto first = exact_match_predict(d, vocab);
  CHECK(exact_match_predict(d, vocab) == first);
  corpus::Document retok = doc_of("a", "ALPHA   beta?? gamma!");
  CHECK(exact_match_predict(retok, vocab) == first);
}

TEST_CASE("tf-idf on a hand-computable two-document corpus") {
  corpus::CorpusSplit train;
  train.name = "train";
  train.documents.push_back(doc_of("d1", "apple banana"));
  train.documents.push_back(doc_of("d2", "apple apple"));
  TfidfModel model = fit_tfidf(train, 1, 1000);  // unigrams only

  // df(apple) = 2, df(banana) = 1, N = 2; idf = ln((1+N)/(1+df)) + 1
  const double idf_apple = std::log(3.0 / 3.0) + 1.0;
  const double idf_banana = std::log(3.0 / 2.0) + 1.0;
  CHECK(model.idf(model.index.at("apple")) ==
        doctest::Approx(idf_apple).epsilon(1e-12));
  CHECK(model.idf(model.index.at("banana")) ==
        doctest::Approx(idf_banana).epsilon(1e-12));

  SparseMatrix x = model.transform(train);
  // d1: tf(apple)=1, tf(banana)=1, L2 normalized
  const double w_apple = 1.0 * idf_apple;
  const double w_banana = 1.0 * idf_banana;
  const double norm = std::sqrt(w_apple * w_apple + w_banana * w_banana);
  CHECK(x.coeff(0, model.index.at("apple")) ==
        doctest::Approx(w_apple / norm).epsilon(1e-12));
  CHECK(x.coeff(0, model.index.at("banana")) ==
        doctest::Approx(w_banana / norm).epsilon(1e-12));
  // d2: a single distinct term normalizes to 1
  CHECK(x.coeff(1, model.index.at("apple")) == doctest::Approx(1.0).epsilon(1e-12));

  // a term in every document gets the minimal idf
  CHECK(idf_apple < idf_banana);
}

TEST_CASE("n-gram extraction covers n = 1..5 and transform adds no columns") {
  corpus::CorpusSplit train;
  train.name = "train";
  train.documents.push_back(doc_of("d1", "a b c d e f"));
  TfidfModel model = fit_tfidf(train, 5, 100000);
  CHECK(model.index.count("a"));
  CHECK(model.index.count("a b"));
  CHECK(model.index.count("a b c d e"));
  CHECK(!model.index.count("a b c d e f"));  // n stops at 5

  corpus::CorpusSplit dev;
  dev.name = "dev";
  dev.documents.push_back(doc_of("x", "a b zebra"));
  SparseMatrix xd = model.transform(dev);
  CHECK(xd.cols() == static_cast<Index>(model.features.size()));
  // unseen n-grams are dropped rather than added
  for (Index c = 0; c < xd.cols(); ++c)
    if (model.features[static_cast<size_t>(c)] == "zebra") CHECK(false);

  CHECK_THROWS_AS(fit_tfidf(corpus::CorpusSplit{}, 5, 100), Error);
}

TEST_CASE("max_features caps by train frequency deterministically") {
  corpus::CorpusSplit train;
  train.name = "train";
  train.documents.push_back(doc_of("d1", "common common common rare"));
  TfidfModel model = fit_tfidf(train, 1, 1);
  REQUIRE(model.features.size() == 1);
  CHECK(model.features[0] == "common");
}

TEST_CASE("per-document tf-idf ignores the other documents given the fit") {
  corpus::CorpusSplit train;
  train.name = "train";
  train.documents.push_back(doc_of("d1", "alpha beta"));
  train.documents.push_back(doc_of("d2", "alpha gamma"));
  TfidfModel model = fit_tfidf(train, 2, 1000);

  corpus::CorpusSplit just_d1;
  just_d1.name = "x";
  just_d1.documents.push_back(train.documents[0]);
  corpus::CorpusSplit shuffled;
  shuffled.name = "y";
  shuffled.documents.push_back(train.documents[1]);
  shuffled.documents.push_back(train.documents[0]);

  SparseMatrix alone = model.transform(just_d1);
  SparseMatrix moved = model.transform(shuffled);
  for (Index c = 0; c < alone.cols(); ++c)
    CHECK(alone.coeff(0, c) == moved.coeff(1, c));
}

TEST_CASE("logistic regression separates a separable 2-label task") {
  corpus::CorpusSplit train;
  train.name = "train";
  for (int i = 0; i < 10; ++i) {
    train.documents.push_back(doc_of("p" + std::to_string(i),
                                     "positive signal words", {"yes"}));
    train.documents.push_back(doc_of("n" + std::to_string(i),
                                     "negative other tokens", {"no"}));
  }
  embeddings::LabelVocabulary vocab;
  vocab.add("no", "negative");
  vocab.add("yes", "positive");

  TfidfModel tfidf = fit_tfidf(train, 1, 1000);
  SparseMatrix x = tfidf.transform(train);
  Matrix gold = corpus::gold_matrix(train, vocab);
  LogisticOptions opts;
  opts.epochs = 400;
  LogisticModel lr = train_logistic(x, gold, vocab, opts);
  CHECK(lr.flagged.empty());
  Matrix scores = lr.predict_scores(x);
  CHECK(metrics::micro_f1(scores, gold, 0.5) == doctest::Approx(1.0));
  for (Index t = 0; t < scores.rows(); ++t)
    for (Index l = 0; l < scores.cols(); ++l) {
      CHECK(scores(t, l) > 0.0);
      CHECK(scores(t, l) < 1.0);
    }
}

TEST_CASE("labels without training positives are flagged and score low") {
  corpus::CorpusSplit train;
  train.name = "train";
  train.documents.push_back(doc_of("d1", "alpha", {"seen"}));
  train.documents.push_back(doc_of("d2", "beta", {"seen"}));
  embeddings::LabelVocabulary vocab;
  vocab.add("seen", "seen");
  vocab.add("unseen", "unseen");
  TfidfModel tfidf = fit_tfidf(train, 1, 100);
  SparseMatrix x = tfidf.transform(train);
  LogisticModel lr =
      train_logistic(x, corpus::gold_matrix(train, vocab), vocab, {});
  REQUIRE(lr.flagged == std::vector<std::string>{"unseen"});
  Matrix scores = lr.predict_scores(x);
  for (Index t = 0; t < scores.rows(); ++t)
    CHECK(scores(t, vocab.index_of("unseen")) < 0.01);
}

TEST_CASE("predictions are invariant under a consistent column permutation") {
  Rng rng(5150);
  const Index T = 6, F = 5, L = 2;
  std::vector<Eigen::Triplet<Scalar>> trip;
  for (Index t = 0; t < T; ++t)
    for (Index f = 0; f < F; ++f)
      if (rng.bernoulli(0.5)) trip.emplace_back(t, f, rng.uniform(0, 1));
  SparseMatrix x(T, F);
  x.setFromTriplets(trip.begin(), trip.end());

  LogisticModel model;
  model.weights = rng.uniform_matrix(F, L, -1, 1);
  model.bias = rng.uniform_matrix(1, L, -1, 1).row(0);
  Matrix base = model.predict_scores(x);

  // permute feature columns and weights rows the same way
  std::vector<Index> perm = {4, 2, 0, 3, 1};
  std::vector<Eigen::Triplet<Scalar>> ptrip;
  for (Index t = 0; t < T; ++t)
    for (SparseMatrix::InnerIterator it(x, t); it; ++it)
      ptrip.emplace_back(t, perm[static_cast<size_t>(it.col())], it.value());
  SparseMatrix xp(T, F);
  xp.setFromTriplets(ptrip.begin(), ptrip.end());
  LogisticModel pm;
  pm.weights = Matrix(F, L);
  for (Index f = 0; f < F; ++f)
    pm.weights.row(perm[static_cast<size_t>(f)]) = model.weights.row(f);
  pm.bias = model.bias;
  CHECK((pm.predict_scores(xp) - base).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("regularization selection picks the best dev micro-F1") {
  corpus::CorpusSplit train;
  train.name = "train";
  for (int i = 0; i < 8; ++i) {
    train.documents.push_back(doc_of("p" + std::to_string(i), "alpha topic",
                                     {"a"}));
    train.documents.push_back(doc_of("n" + std::to_string(i), "beta topic",
                                     {"b"}));
  }
  embeddings::LabelVocabulary vocab;
  vocab.add("a", "alpha");
  vocab.add("b", "beta");
  TfidfModel tfidf = fit_tfidf(train, 1, 1000);
  SparseMatrix x = tfidf.transform(train);
  Matrix gold = corpus::gold_matrix(train, vocab);
  LogisticOptions opts;
  opts.epochs = 150;
  const double best =
      select_regularization(x, gold, x, gold, vocab, {1e-4, 10.0}, opts);
  CHECK(best == 1e-4);  // crushing regularization loses on dev
}
