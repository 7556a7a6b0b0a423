// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmtc/corpus.hpp"
#include "lmtc/labels.hpp"
#include "lmtc/types.hpp"

namespace lmtc::embeddings {

// Pretrained word vectors plus the PAD and OOV rows appended after the file
// tokens. PAD is all zeros; OOV is the mean of the loaded vectors.
struct EmbeddingMatrix {
  Index dim = 0;
  Matrix vectors;  // [n_tokens + 2, dim]
  std::unordered_map<std::string, Index> token_index;
  Index pad_row = -1;
  Index oov_row = -1;

  Index n_tokens() const { return vectors.rows() - 2; }
  Index row_of(const std::string& token) const;  // oov_row when unknown
  Matrix embed(const std::vector<std::string>& tokens) const;  // [n, dim]
};

// Text format: token followed by dim floats per line. Ragged lines and
// dimension mismatches are fatal with the offending line number. When the
// LMTC_EMBEDDING_CACHE environment variable names a directory, a parsed
// binary copy is cached there keyed by file size and mtime.
EmbeddingMatrix load_word_vectors(const std::string& path,
                                  std::optional<Index> expected_dim = std::nullopt);

// Writes token rows only (PAD/OOV are reconstructed on load) with full
// double precision, so load(write(m)) reproduces m exactly.
void write_word_vectors(const std::string& path, const EmbeddingMatrix& emb);

EmbeddingMatrix random_embeddings(const std::vector<std::string>& tokens,
                                  Index dim, uint64_t seed);

struct TokenVocabulary {
  std::vector<std::string> tokens;  // ordered: frequency desc, then lexicographic
  std::unordered_map<std::string, Index> index;

  Index index_of(const std::string& token) const;  // -1 when absent / below cutoff
};

TokenVocabulary build_vocabulary(
    const std::vector<const corpus::CorpusSplit*>& splits, long min_freq);

// Centroid of the descriptor tokens' vectors; OOV tokens use the OOV row.
// Throws when the descriptor tokenizes to nothing.
RowVector label_embedding(const std::string& descriptor,
                          const EmbeddingMatrix& emb);

Matrix label_embedding_matrix(const LabelVocabulary& labels,
                              const EmbeddingMatrix& emb);  // [L, dim]

}  // namespace lmtc::embeddings
