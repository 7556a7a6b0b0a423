// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lmtc/embeddings.hpp"
#include "lmtc/error.hpp"

using namespace lmtc;
using namespace lmtc::embeddings;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "lmtc_emb";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("load_word_vectors appends PAD and OOV rows") {
  const std::string path = temp_path("small.txt");
  {
    std::ofstream out(path);
    out << "apple 1 0 0 0\n";
    out << "pear 0 1 0 0\n";
    out << "plum 0 0 1 0\n";
  }
  EmbeddingMatrix emb = load_word_vectors(path);
  CHECK(emb.dim == 4);
  CHECK(emb.vectors.rows() == 5);  // 3 tokens + PAD + OOV
  CHECK(emb.n_tokens() == 3);
  CHECK(emb.vectors.row(emb.pad_row).isZero());
  // OOV row is the mean of the loaded vectors
  RowVector mean = emb.vectors.topRows(3).colwise().mean();
  CHECK((emb.vectors.row(emb.oov_row) - mean).norm() == 0.0);
  CHECK(emb.row_of("pear") == 1);
  CHECK(emb.row_of("unheard") == emb.oov_row);
}

TEST_CASE("ragged lines and dimension mismatches are fatal with the line") {
  const std::string path = temp_path("ragged.txt");
  {
    std::ofstream out(path);
    out << "a 1 2 3 4\n";
    out << "b 1 2 3\n";
  }
  CHECK_THROWS_WITH_AS(load_word_vectors(path),
                       doctest::Contains(":2"), Error);
  CHECK_THROWS_AS(load_word_vectors(path, 4), Error);

  const std::string ok = temp_path("ok.txt");
  {
    std::ofstream out(ok);
    out << "a 1 2\n";
  }
  CHECK_THROWS_AS(load_word_vectors(ok, 3), Error);  // expected_dim mismatch
  CHECK(load_word_vectors(ok, 2).dim == 2);
  CHECK_THROWS_AS(load_word_vectors(temp_path("missing.txt")), Error);
}

TEST_CASE("write then load reproduces the matrix exactly") {
  EmbeddingMatrix emb = random_embeddings({"tok1", "tok2", "tok3"}, 7, 99);
  const std::string path = temp_path("roundtrip.txt");
  write_word_vectors(path, emb);
  EmbeddingMatrix back = load_word_vectors(path);
  CHECK(back.dim == emb.dim);
  CHECK((back.vectors - emb.vectors).norm() == 0.0);
  CHECK(back.token_index.at("tok2") == emb.token_index.at("tok2"));
}

TEST_CASE("embedding cache reproduces the parsed matrix") {
  const std::string cache_dir = temp_path("cache");
  std::filesystem::remove_all(cache_dir);
  EmbeddingMatrix emb = random_embeddings({"x1", "x2"}, 5, 4);
  const std::string path = temp_path("cached.txt");
  write_word_vectors(path, emb);

  setenv("LMTC_EMBEDDING_CACHE", cache_dir.c_str(), 1);
  EmbeddingMatrix first = load_word_vectors(path);   // populates the cache
  EmbeddingMatrix second = load_word_vectors(path);  // serves from the cache
  unsetenv("LMTC_EMBEDDING_CACHE");
  CHECK(!std::filesystem::is_empty(cache_dir));
  CHECK((first.vectors - second.vectors).norm() == 0.0);
}

TEST_CASE("build_vocabulary orders by frequency then lexicographically") {
  corpus::CorpusSplit split;
  split.name = "train";
  corpus::Document d1;
  d1.doc_id = "a";
  d1.header = "zz zz yy xx";
  d1.gold_labels = {};
  corpus::Document d2;
  d2.doc_id = "b";
  d2.header = "yy ww";
  split.documents = {d1, d2};

  TokenVocabulary vocab = build_vocabulary({&split}, 1);
  REQUIRE(vocab.tokens.size() == 4);
  // counts: zz=2, yy=2, xx=1, ww=1; ties broken lexicographically
  CHECK(vocab.tokens[0] == "yy");
  CHECK(vocab.tokens[1] == "zz");
  CHECK(vocab.tokens[2] == "ww");
  CHECK(vocab.tokens[3] == "xx");

  TokenVocabulary cut = build_vocabulary({&split}, 2);
  CHECK(cut.tokens.size() == 2);
  CHECK(cut.index_of("xx") == -1);

  // exhaustive frequency pass agrees with the vocabulary size
  std::map<std::string, int> counts;
  for (const auto& doc : split.documents)
    for (const auto& tok : corpus::extract_zone(doc, corpus::ZoneSpec{}))
      ++counts[tok];
  long analytic = 0;
  for (const auto& [tok, c] : counts)
    if (c >= 1) ++analytic;
  CHECK(static_cast<long>(vocab.tokens.size()) == analytic);
}

TEST_CASE("label_embedding is the descriptor centroid") {
  const std::string path = temp_path("cent.txt");
  {
    std::ofstream out(path);
    out << "data 1 0\n";
    out << "protection 0 1\n";
    out << "rare 4 4\n";
  }
  EmbeddingMatrix emb = load_word_vectors(path);

  RowVector two = label_embedding("data protection", emb);
  CHECK(two(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two(1) == doctest::Approx(0.5).epsilon(1e-12));

  RowVector one = label_embedding("rare", emb);
  CHECK((one - emb.vectors.row(2)).norm() == 0.0);

  // OOV tokens use the OOV row; verify against an independent mean
  RowVector with_oov = label_embedding("data protection unknownword", emb);
  RowVector manual = (emb.vectors.row(0) + emb.vectors.row(1) +
                      emb.vectors.row(emb.oov_row)) /
                     3.0;
  CHECK((with_oov - manual).norm() < 1e-15);

  CHECK_THROWS_AS(label_embedding("!!!", emb), Error);
}

TEST_CASE("label_embedding ignores descriptor token order") {
  EmbeddingMatrix emb = random_embeddings({"aa", "bb", "cc"}, 6, 17);
  RowVector fwd = label_embedding("aa bb cc", emb);
  RowVector rev = label_embedding("cc bb aa", emb);
  CHECK((fwd - rev).norm() == 0.0);
  // convexity: centroid norm bounded by the largest token norm
  double max_norm = 0.0;
  for (const char* tok : {"aa", "bb", "cc"})
    max_norm = std::max(max_norm, emb.vectors.row(emb.row_of(tok)).norm());
  CHECK(fwd.norm() <= max_norm + 1e-12);
}

TEST_CASE("label_embedding_matrix stacks rows in vocabulary order") {
  EmbeddingMatrix emb = random_embeddings({"one", "two"}, 4, 5);
  LabelVocabulary vocab;
  vocab.add("l1", "one");
  vocab.add("l2", "two");
  Matrix m = label_embedding_matrix(vocab, emb);
  CHECK(m.rows() == 2);
  CHECK((m.row(0) - emb.vectors.row(emb.row_of("one"))).norm() == 0.0);
  CHECK((m.row(1) - emb.vectors.row(emb.row_of("two"))).norm() == 0.0);
}
