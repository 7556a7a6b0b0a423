// SPDX-License-Identifier: Apache-2.0
#include "lmtc/embeddings.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmtc/error.hpp"
#include "lmtc/rng.hpp"
#include "lmtc/tokenize.hpp"

namespace fs = std::filesystem;

namespace lmtc::embeddings {

Index EmbeddingMatrix::row_of(const std::string& token) const {
  auto it = token_index.find(token);
  return it == token_index.end() ? oov_row : it->second;
}

Matrix EmbeddingMatrix::embed(const std::vector<std::string>& tokens) const {
  Matrix m(static_cast<Index>(tokens.size()), dim);
  for (Index i = 0; i < m.rows(); ++i)
    m.row(i) = vectors.row(row_of(tokens[static_cast<size_t>(i)]));
  return m;
}

namespace {

EmbeddingMatrix finish_matrix(std::vector<std::string> tokens, Matrix rows) {
  EmbeddingMatrix emb;
  emb.dim = rows.cols();
  const Index n = rows.rows();
  emb.vectors = Matrix::Zero(n + 2, emb.dim);
  emb.vectors.topRows(n) = rows;
  emb.pad_row = n;
  emb.oov_row = n + 1;
  if (n > 0) emb.vectors.row(emb.oov_row) = rows.colwise().mean();
  for (Index i = 0; i < n; ++i) {
    if (!emb.token_index.emplace(tokens[static_cast<size_t>(i)], i).second)
      throw Error("duplicate token '" + tokens[static_cast<size_t>(i)] +
                  "' in vector file");
  }
  return emb;
}

std::string cache_path_for(const std::string& path) {
  const char* dir = std::getenv("LMTC_EMBEDDING_CACHE");
  if (!dir || !*dir) return {};
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) return {};
  const auto mtime = fs::last_write_time(path, ec).time_since_epoch().count();
  if (ec) return {};
  std::ostringstream name;
  name << fs::path(path).filename().string() << "." << size << "." << mtime
       << ".mpk";
  return (fs::path(dir) / name.str()).string();
}

EmbeddingMatrix load_cache(const std::string& cache_path) {
  std::ifstream in(cache_path, std::ios::binary);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  Json j = Json::from_msgpack(bytes);
  const Index dim = j.at("dim").get<Index>();
  std::vector<std::string> tokens = j.at("tokens").get<std::vector<std::string>>();
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  if (data.size() != tokens.size() * static_cast<size_t>(dim))
    throw Error("corrupt embedding cache " + cache_path);
  Matrix rows(static_cast<Index>(tokens.size()), dim);
  for (Index i = 0; i < rows.rows(); ++i)
    for (Index d = 0; d < dim; ++d)
      rows(i, d) = data[static_cast<size_t>(i * dim + d)];
  return finish_matrix(std::move(tokens), std::move(rows));
}

void store_cache(const std::string& cache_path,
                 const std::vector<std::string>& tokens, const Matrix& rows) {
  Json j;
  j["dim"] = rows.cols();
  j["tokens"] = tokens;
  std::vector<double> data;
  data.reserve(static_cast<size_t>(rows.size()));
  for (Index i = 0; i < rows.rows(); ++i)
    for (Index d = 0; d < rows.cols(); ++d) data.push_back(rows(i, d));
  j["data"] = data;
  std::error_code ec;
  fs::create_directories(fs::path(cache_path).parent_path(), ec);
  auto bytes = Json::to_msgpack(j);
  std::ofstream out(cache_path, std::ios::binary);
  if (out) out.write(reinterpret_cast<const char*>(bytes.data()),
                     static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

EmbeddingMatrix load_word_vectors(const std::string& path,
                                  std::optional<Index> expected_dim) {
  if (!fs::exists(path)) throw Error("word vector file not found: " + path);

  const std::string cache = cache_path_for(path);
  if (!cache.empty() && fs::exists(cache)) {
    EmbeddingMatrix emb = load_cache(cache);
    if (expected_dim && emb.dim != *expected_dim)
      throw Error(path + ": dimension " + std::to_string(emb.dim) +
                  " does not match expected " + std::to_string(*expected_dim));
    return emb;
  }

  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> values;
  Index dim = -1;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!ss.eof())
      throw Error(path + ":" + std::to_string(lineno) + ": malformed float");
    if (row.empty())
      throw Error(path + ":" + std::to_string(lineno) + ": no vector values");
    if (dim < 0) dim = static_cast<Index>(row.size());
    if (static_cast<Index>(row.size()) != dim)
      throw Error(path + ":" + std::to_string(lineno) + ": expected " +
                  std::to_string(dim) + " values, found " +
                  std::to_string(row.size()));
    tokens.push_back(std::move(token));
    values.push_back(std::move(row));
  }
  if (tokens.empty()) throw Error(path + ": empty vector file");
  if (expected_dim && dim != *expected_dim)
    throw Error(path + ": dimension " + std::to_string(dim) +
                " does not match expected " + std::to_string(*expected_dim));

  Matrix rows(static_cast<Index>(tokens.size()), dim);
  for (Index i = 0; i < rows.rows(); ++i)
    for (Index d = 0; d < dim; ++d)
      rows(i, d) = values[static_cast<size_t>(i)][static_cast<size_t>(d)];

  if (!cache.empty()) store_cache(cache, tokens, rows);
  return finish_matrix(std::move(tokens), std::move(rows));
}

void write_word_vectors(const std::string& path, const EmbeddingMatrix& emb) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  // Index order, not map order, keeps the file deterministic.
  std::vector<std::string> by_row(static_cast<size_t>(emb.n_tokens()));
  for (const auto& [token, row] : emb.token_index)
    by_row[static_cast<size_t>(row)] = token;
  char buf[40];
  for (Index i = 0; i < emb.n_tokens(); ++i) {
    out << by_row[static_cast<size_t>(i)];
    for (Index d = 0; d < emb.dim; ++d) {
      std::snprintf(buf, sizeof(buf), " %.17g", emb.vectors(i, d));
      out << buf;
    }
    out << '\n';
  }
}

EmbeddingMatrix random_embeddings(const std::vector<std::string>& tokens,
                                  Index dim, uint64_t seed) {
  Rng rng = Rng::stream(seed, 0xE0);
  Matrix rows(static_cast<Index>(tokens.size()), dim);
  for (Index i = 0; i < rows.rows(); ++i) {
    for (Index d = 0; d < dim; ++d) rows(i, d) = rng.uniform(-1.0, 1.0);
    const double norm = rows.row(i).norm();
    if (norm > 0) rows.row(i) /= norm;
  }
  return finish_matrix(tokens, std::move(rows));
}

Index TokenVocabulary::index_of(const std::string& token) const {
  auto it = index.find(token);
  return it == index.end() ? -1 : it->second;
}

TokenVocabulary build_vocabulary(
    const std::vector<const corpus::CorpusSplit*>& splits, long min_freq) {
  if (min_freq < 1) throw Error("build_vocabulary requires min_freq >= 1");
  std::unordered_map<std::string, long> counts;
  corpus::ZoneSpec full;
  for (const auto* split : splits)
    for (const auto& doc : split->documents)
      for (const auto& token : corpus::extract_zone(doc, full)) ++counts[token];
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [token, count] : counts)
    if (count >= min_freq) kept.emplace_back(token, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  TokenVocabulary vocab;
  for (const auto& [token, count] : kept) {
    vocab.index[token] = static_cast<Index>(vocab.tokens.size());
    vocab.tokens.push_back(token);
  }
  return vocab;
}

RowVector label_embedding(const std::string& descriptor,
                          const EmbeddingMatrix& emb) {
  const auto tokens = tokenize(descriptor);
  if (tokens.empty())
    throw Error("label descriptor '" + descriptor + "' tokenizes to nothing");
  RowVector sum = RowVector::Zero(emb.dim);
  for (const auto& token : tokens) sum += emb.vectors.row(emb.row_of(token));
  return sum / static_cast<Scalar>(tokens.size());
}

Matrix label_embedding_matrix(const LabelVocabulary& labels,
                              const EmbeddingMatrix& emb) {
  Matrix m(labels.size(), emb.dim);
  for (Index l = 0; l < labels.size(); ++l)
    m.row(l) = label_embedding(labels.descriptor(l), emb);
  return m;
}

}  // namespace lmtc::embeddings
