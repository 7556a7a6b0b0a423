// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "lmtc/error.hpp"
#include "lmtc/metrics.hpp"
#include "lmtc/schema.hpp"
#include "oracles.hpp"

using namespace lmtc;
using namespace lmtc::metrics;

namespace {

DocEval doc_with(const std::set<std::string>& gold,
                 const std::vector<std::string>& ranked_labels,
                 const std::string& id = "d") {
  DocEval doc;
  doc.doc_id = id;
  doc.gold = gold;
  double score = 1.0;
  for (const auto& label : ranked_labels) {
    doc.ranking.emplace_back(label, score);
    score -= 0.01;
  }
  return doc;
}

EvalInstance single(const DocEval& doc) {
  EvalInstance inst;
  inst.docs.push_back(doc);
  return inst;
}

std::string temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "lmtc_metrics";
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("worked single-document cases") {
  // 5 gold labels, top-1 correct: R@1 = 0.20
  auto five_gold = single(doc_with({"a", "b", "c", "d", "e"},
                                   {"a", "x", "y", "z", "w"}));
  CHECK(recall_at_k(five_gold, 1) == doctest::Approx(0.20).epsilon(1e-12));

  // one gold label evaluated at K=5: P@5 = 0.20, RP@5 = 1.0
  auto one_gold = single(doc_with({"a"}, {"a", "x", "y", "z", "w"}));
  CHECK(precision_at_k(one_gold, 5) == doctest::Approx(0.20).epsilon(1e-12));
  CHECK(r_precision_at_k(one_gold, 5) == doctest::Approx(1.0).epsilon(1e-12));

  // gold {a} ranked 3rd: RP@5 = 1.0 because min(5, 1) = 1
  auto third = single(doc_with({"a"}, {"x", "y", "a", "z", "w"}));
  CHECK(r_precision_at_k(third, 5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perfect predictions score 1.0") {
  EvalInstance inst;
  inst.docs.push_back(doc_with({"a", "b"}, {"a", "b", "c", "d"}, "d1"));
  inst.docs.push_back(doc_with({"c", "d", "e"}, {"c", "d", "e", "a"}, "d2"));
  CHECK(precision_at_k(inst, 2) == doctest::Approx(1.0));
  CHECK(ndcg_at_k(inst, 4) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(recall_at_k(inst, 4) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ndcg hand-computed case") {
  // gold {a, b}, ranking [a, x, b]
  auto inst = single(doc_with({"a", "b"}, {"a", "x", "b"}));
  const double dcg = 1.0 / std::log2(2.0) + 1.0 / std::log2(4.0);
  const double idcg = 1.0 / std::log2(2.0) + 1.0 / std::log2(3.0);
  const double expected = dcg / idcg;
  CHECK(ndcg_at_k(inst, 3) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(ndcg_at_k(inst, 3) == doctest::Approx(0.9197).epsilon(1e-4));

  // no gold label inside the top K
  auto miss = single(doc_with({"a"}, {"x", "y", "z"}));
  CHECK(ndcg_at_k(miss, 3) == 0.0);
}

TEST_CASE("cumulative-hits DCG variant is unnormalized and uses natural log") {
  auto inst = single(doc_with({"a"}, {"a", "x"}));
  // gain 2^1 - 1 at ranks 1 and 2, discounted by ln(k + 1)
  const double expected = 1.0 / std::log(2.0) + 1.0 / std::log(3.0);
  CHECK(cumulative_hits_dcg_at_k(inst, 2) ==
        doctest::Approx(expected).epsilon(1e-12));
  // can exceed 1 by construction
  CHECK(cumulative_hits_dcg_at_k(inst, 2) > 1.0);
}

TEST_CASE("micro_f1 on matrices and instances") {
  Matrix scores(2, 3);
  scores << 0.9, 0.1, 0.6,
            0.2, 0.8, 0.4;
  Matrix gold(2, 3);
  gold << 1, 0, 0,
          0, 1, 0;
  // tp=2 (0,0 and 1,1), fp=1 (0,2), fn=0
  CHECK(micro_f1(scores, gold, 0.5) ==
        doctest::Approx(2.0 * 2 / (2.0 * 2 + 1 + 0)).epsilon(1e-12));

  CHECK(micro_f1(gold, gold, 0.5) == 1.0);
  CHECK(micro_f1(Matrix::Zero(2, 3), gold, 0.5) == 0.0);  // no predicted positives
}

TEST_CASE("metrics match the brute-force oracle on random instances") {
  Rng rng(20240811);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = lmtc_oracles::random_instance(rng, 50, 30);
    for (int k : {1, 3, 5, 10}) {
      CHECK(precision_at_k(inst, k) ==
            doctest::Approx(lmtc_oracles::precision_oracle(inst, k)).epsilon(1e-12));
      CHECK(recall_at_k(inst, k) ==
            doctest::Approx(lmtc_oracles::recall_oracle(inst, k)).epsilon(1e-12));
      CHECK(r_precision_at_k(inst, k) ==
            doctest::Approx(lmtc_oracles::r_precision_oracle(inst, k)).epsilon(1e-12));
      CHECK(ndcg_at_k(inst, k) ==
            doctest::Approx(lmtc_oracles::ndcg_oracle(inst, k)).epsilon(1e-12));
    }
    CHECK(micro_f1(inst, 0.5) ==
          doctest::Approx(lmtc_oracles::micro_f1_oracle(inst, 0.5)).epsilon(1e-12));
  }
}

TEST_CASE("RP relationships with P and R") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = lmtc_oracles::random_instance(rng, 30, 20, false);
    // all documents have at least one gold label: RP@1 == P@1
    CHECK(r_precision_at_k(inst, 1) ==
          doctest::Approx(precision_at_k(inst, 1)).epsilon(1e-12));
  }
  // R_t >= K for every doc -> RP@K == P@K
  EvalInstance big;
  big.docs.push_back(doc_with({"a", "b", "c"}, {"a", "x", "b"}, "d1"));
  big.docs.push_back(doc_with({"a", "b", "d"}, {"x", "a", "d"}, "d2"));
  CHECK(r_precision_at_k(big, 2) ==
        doctest::Approx(precision_at_k(big, 2)).epsilon(1e-12));
  // R_t <= K for every doc -> RP@K == R@K
  EvalInstance small;
  small.docs.push_back(doc_with({"a"}, {"x", "a", "y"}, "d1"));
  small.docs.push_back(doc_with({"b", "c"}, {"b", "y", "c"}, "d2"));
  CHECK(r_precision_at_k(small, 5) ==
        doctest::Approx(recall_at_k(small, 5)).epsilon(1e-12));
}

TEST_CASE("recall is monotone in K") {
  Rng rng(31);
  auto inst = lmtc_oracles::random_instance(rng, 30, 20);
  double prev = 0.0;
  for (int k = 1; k <= 12; ++k) {
    const double r = recall_at_k(inst, k);
    CHECK(r >= prev - 1e-15);
    prev = r;
  }
}

TEST_CASE("metrics are invariant under document permutation") {
  Rng rng(41);
  auto inst = lmtc_oracles::random_instance(rng, 25, 12);
  EvalInstance shuffled = inst;
  std::reverse(shuffled.docs.begin(), shuffled.docs.end());
  for (int k : {1, 5}) {
    CHECK(precision_at_k(inst, k) ==
          doctest::Approx(precision_at_k(shuffled, k)).epsilon(1e-12));
    CHECK(r_precision_at_k(inst, k) ==
          doctest::Approx(r_precision_at_k(shuffled, k)).epsilon(1e-12));
    CHECK(ndcg_at_k(inst, k) ==
          doctest::Approx(ndcg_at_k(shuffled, k)).epsilon(1e-12));
  }
}

TEST_CASE("metrics are invariant under consistent label renaming") {
  Rng rng(53);
  auto inst = lmtc_oracles::random_instance(rng, 20, 10);
  EvalInstance renamed = inst;
  auto rename = [](const std::string& label) { return "x_" + label; };
  for (auto& doc : renamed.docs) {
    std::set<std::string> gold;
    for (const auto& g : doc.gold) gold.insert(rename(g));
    doc.gold = gold;
    for (auto& [label, score] : doc.ranking) label = rename(label);
  }
  for (int k : {1, 5}) {
    CHECK(precision_at_k(inst, k) == precision_at_k(renamed, k));
    CHECK(r_precision_at_k(inst, k) == r_precision_at_k(renamed, k));
    CHECK(ndcg_at_k(inst, k) == ndcg_at_k(renamed, k));
  }
  CHECK(micro_f1(inst, 0.5) == micro_f1(renamed, 0.5));
}

TEST_CASE("rank_scores sorts by score then label id") {
  embeddings::LabelVocabulary vocab;
  vocab.add("b", "x");
  vocab.add("a", "y");
  vocab.add("c", "z");
  RowVector scores(3);
  scores << 0.5, 0.5, 0.9;  // b and a tie
  auto ranking = rank_scores(scores, vocab);
  CHECK(ranking[0].first == "c");
  CHECK(ranking[1].first == "a");  // tie broken by label id
  CHECK(ranking[2].first == "b");
}

TEST_CASE("bucket_report protocols") {
  corpus::FrequencyBuckets buckets;
  buckets.frequent = {"f1", "f2"};
  buckets.few_shot = {"w1"};
  buckets.zero_shot = {"z1"};

  EvalInstance inst;
  inst.docs.push_back(doc_with({"f1", "z1"}, {"f1", "f2", "w1", "z1"}, "d1"));
  inst.docs.push_back(doc_with({"f2"}, {"w1", "f2", "z1", "f1"}, "d2"));

  auto report = bucket_report(inst, buckets, {1, 2});
  // the all bucket equals the unbucketed metrics
  CHECK(report.get("all", "p", 1) == doctest::Approx(precision_at_k(inst, 1)));
  CHECK(report.get("all", "ndcg", 2) == doctest::Approx(ndcg_at_k(inst, 2)));

  // d2 has no zero-shot gold: excluded from the zero bucket.
  // d1's zero ranking filtered to [z1] puts the gold first: RP@1 = 1.
  CHECK(report.get("zero", "rp", 1) == doctest::Approx(1.0));

  // independent filtered evaluation for the frequent bucket (filter both)
  EvalInstance freq;
  freq.docs.push_back(doc_with({"f1"}, {"f1", "f2"}, "d1"));
  freq.docs.push_back(doc_with({"f2"}, {"f2", "f1"}, "d2"));
  CHECK(report.get("frequent", "p", 1) ==
        doctest::Approx(precision_at_k(freq, 1)).epsilon(1e-12));
  CHECK(report.get("frequent", "ndcg", 2) ==
        doctest::Approx(ndcg_at_k(freq, 2)).epsilon(1e-12));

  // gold-only protocol keeps the full candidate ranking
  auto gold_only =
      bucket_report(inst, buckets, {1, 2}, BucketProtocol::FilterGoldOnly);
  // d1's zero gold z1 sits at rank 4 of the full ranking: missed at K=2
  CHECK(gold_only.get("zero", "rp", 2) == doctest::Approx(0.0));
  // all-bucket numbers are protocol-independent
  CHECK(gold_only.get("all", "p", 2) == doctest::Approx(report.get("all", "p", 2)));
}

TEST_CASE("bucketed values match a filtered brute-force evaluation") {
  Rng rng(4242);
  auto inst = lmtc_oracles::random_instance(rng, 30, 18, false);
  corpus::FrequencyBuckets buckets;
  for (int l = 0; l < 18; ++l) {
    const std::string id = "lab" + std::to_string(l);
    if (l < 6) buckets.frequent.insert(id);
    else if (l < 12) buckets.few_shot.insert(id);
    else buckets.zero_shot.insert(id);
  }
  auto report = bucket_report(inst, buckets, {3});
  auto filtered = filter_to_bucket(inst, buckets.few_shot,
                                   BucketProtocol::FilterBoth);
  CHECK(report.get("few", "p", 3) ==
        doctest::Approx(lmtc_oracles::precision_oracle(filtered, 3)).epsilon(1e-12));
  CHECK(report.get("few", "rp", 3) ==
        doctest::Approx(lmtc_oracles::r_precision_oracle(filtered, 3)).epsilon(1e-12));
}

TEST_CASE("prediction and gold files round-trip and validate") {
  const std::string dir = temp_dir();
  EvalInstance inst;
  inst.docs.push_back(doc_with({"a"}, {"a", "b"}, "d1"));
  inst.docs.push_back(doc_with({"b"}, {"b", "a"}, "d2"));
  const std::string pred_path = dir + "/preds.jsonl";
  write_predictions(pred_path, inst);

  corpus::CorpusSplit split;
  split.name = "test";
  for (const auto& doc : inst.docs) {
    corpus::Document d;
    d.doc_id = doc.doc_id;
    d.header = "text";
    d.gold_labels = doc.gold;
    split.documents.push_back(d);
  }
  const std::string gold_path = dir + "/gold.json";
  write_gold(gold_path, split);

  EvalInstance loaded = read_eval_instance(pred_path, gold_path);
  REQUIRE(loaded.docs.size() == 2);
  CHECK(loaded.docs[0].doc_id == "d1");
  CHECK(loaded.docs[0].gold == inst.docs[0].gold);
  CHECK(loaded.docs[0].ranking == inst.docs[0].ranking);

  // missing doc in predictions: error naming the id
  EvalInstance partial;
  partial.docs.push_back(inst.docs[0]);
  const std::string partial_path = dir + "/partial.jsonl";
  write_predictions(partial_path, partial);
  CHECK_THROWS_WITH_AS(read_eval_instance(partial_path, gold_path),
                       doctest::Contains("d2"), Error);

  // emitted files validate against the shipped schemas
  Json pred_schema = read_json_file(std::string(LMTC_SOURCE_DIR) +
                                    "/schemas/prediction_record.schema.json");
  for (const auto& line : read_json_lines(pred_path))
    CHECK(validate_json_schema(pred_schema, line).empty());
  Json gold_schema =
      read_json_file(std::string(LMTC_SOURCE_DIR) + "/schemas/gold.schema.json");
  CHECK(validate_json_schema(gold_schema, read_json_file(gold_path)).empty());
}

TEST_CASE("metric report serializes with the bucket x metric x k layout") {
  corpus::FrequencyBuckets buckets;
  buckets.frequent = {"a"};
  buckets.few_shot = {"b"};
  buckets.zero_shot = {"c"};
  EvalInstance inst;
  inst.docs.push_back(doc_with({"a"}, {"a", "b", "c"}, "d1"));
  auto report = bucket_report(inst, buckets, {1, 5});
  Json j = report.to_json();
  CHECK(j["buckets"]["all"]["rp"]["1"].get<double>() == doctest::Approx(1.0));
  Json schema = read_json_file(std::string(LMTC_SOURCE_DIR) +
                               "/schemas/metric_report.schema.json");
  CHECK(validate_json_schema(schema, j).empty());

  auto flat = flatten(report);
  CHECK(flat.at("all/rp@1") == doctest::Approx(1.0));
  CHECK(flat.count("micro_f1") == 1);
}
