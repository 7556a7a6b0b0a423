// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lmtc/autodiff.hpp"
#include "lmtc/corpus.hpp"
#include "lmtc/embeddings.hpp"
#include "lmtc/json_util.hpp"
#include "lmtc/types.hpp"

namespace lmtc::neural {

using autodiff::Param;
using autodiff::ParamStore;
using autodiff::Tape;
using autodiff::Var;

enum class Architecture {
  BigruAtt,
  Han,
  CnnLwan,
  BigruLwan,
  ZeroCnnLwan,
  ZeroBigruLwan,
};

Architecture parse_architecture(const std::string& id);  // throws ConfigError
const char* architecture_name(Architecture a);           // canonical id
bool is_zero_shot(Architecture a);
bool uses_cnn_encoder(Architecture a);
const std::vector<Architecture>& all_architectures();

struct ModelConfig {
  std::string architecture = "BIGRU-LWAN";
  int n_layers = 1;
  Index hidden_units = 300;
  double dropout_hidden = 0.1;
  double dropout_word_emb = 0.0;
  int batch_size = 16;
  Index cnn_kernel_size = 3;  // odd
  Index cnn_filters = 0;      // 0 -> hidden_units
  uint64_t seed = 1;

  Index effective_cnn_filters() const {
    return cnn_filters > 0 ? cnn_filters : hidden_units;
  }
  void validate() const;  // throws ConfigError
  Json to_json() const;
  static ModelConfig from_json(const Json& j);  // strict unknown-key rejection
};

// Context-aware states [n, d_ctx] plus the padding mask; masked positions
// receive zero attention weight everywhere downstream.
struct EncodedSequence {
  Var states;
  std::vector<char> mask;
};

struct AttentionResult {
  Var weights;  // [heads, n], each row sums to 1 over unmasked positions
  Var context;  // [heads, d_ctx]
};

// --- parameter bundles -------------------------------------------------

struct GruDirectionParams {
  Param* W[3];  // input weights: update, reset, candidate
  Param* U[3];  // recurrent weights
  Param* b[3];  // biases [1, hidden]
};

struct GruLayerParams {
  GruDirectionParams fwd, bwd;
};

struct BiGruParams {
  std::vector<GruLayerParams> layers;
  Index hidden = 0;
};

struct CnnParams {
  std::vector<Param*> taps;  // kernel-width weight slices [in_dim, filters]
  Param* bias = nullptr;     // [1, filters]
  Index kernel = 0;
  Index filters = 0;
};

struct AttentionParams {
  Param* W = nullptr;  // [d_ctx, d_ctx]
  Param* b = nullptr;  // [1, d_ctx]
  Param* v = nullptr;  // [d_ctx, 1]
};

struct LabelwiseAttentionParams {
  std::vector<AttentionParams> heads;  // fully independent, one per label
};

struct LabelwiseOutputParams {
  Param* W = nullptr;  // [L, d_ctx], one dense row per label
  Param* b = nullptr;  // [L, 1]
};

struct DenseOutputParams {
  Param* W = nullptr;  // [d_ctx, L]
  Param* b = nullptr;  // [1, L]
};

struct ZeroShotParams {
  // Shared linear projection of encoder states into the label-embedding
  // space, used for both the attention and the output comparison.
  Param* projection = nullptr;  // [d_ctx, emb_dim]
};

struct HanParams {
  BiGruParams word;
  AttentionParams word_att;
  BiGruParams section;
  AttentionParams section_att;
  DenseOutputParams out;
};

BiGruParams make_bigru(ParamStore& store, const std::string& prefix,
                       Index input_dim, Index hidden, int n_layers, Rng& rng);
CnnParams make_cnn(ParamStore& store, const std::string& prefix,
                   Index input_dim, Index filters, Index kernel, Rng& rng);
AttentionParams make_attention(ParamStore& store, const std::string& prefix,
                               Index d_ctx, Rng& rng);
LabelwiseAttentionParams make_labelwise_attention(ParamStore& store,
                                                  const std::string& prefix,
                                                  Index d_ctx, Index n_labels,
                                                  Rng& rng);
LabelwiseOutputParams make_labelwise_output(ParamStore& store,
                                            const std::string& prefix,
                                            Index d_ctx, Index n_labels,
                                            Rng& rng);
DenseOutputParams make_dense_output(ParamStore& store, const std::string& prefix,
                                    Index d_ctx, Index n_labels, Rng& rng);

// --- operations -----------------------------------------------------------

// Stacked bidirectional GRU; d_ctx = 2 * hidden. Masked steps pass the
// recurrent state through unchanged so trailing PAD cannot leak into real
// positions from either direction. Throws on empty input.
EncodedSequence bigru_encode(Tape& t, const Matrix& embeddings,
                             const std::vector<char>& mask,
                             const BiGruParams& params,
                             const RowVector* hidden_dropout = nullptr);

// Single same-padding convolution + tanh; masked rows are zeroed.
EncodedSequence cnn_encode(Tape& t, const Matrix& embeddings,
                           const std::vector<char>& mask,
                           const CnnParams& params,
                           const RowVector* hidden_dropout = nullptr);

// Additive attention: score_i = v . tanh(W^T h_i + b), masked softmax,
// context = sum_i a_i h_i.
AttentionResult self_attention(Tape& t, const EncodedSequence& enc,
                               const AttentionParams& params);

AttentionResult labelwise_attention(Tape& t, const EncodedSequence& enc,
                                    const LabelwiseAttentionParams& params);

// One sigmoid dense unit per label over its own document embedding; [L, 1].
Var lwan_output(Tape& t, Var per_label, const LabelwiseOutputParams& params);

// Shared document embedding through one dense layer of L sigmoid units; [L, 1].
Var dense_output(Tape& t, Var single, const DenseOutputParams& params);

struct ZeroShotResult {
  Var weights;        // [L, n]
  Var per_label;      // [L, d_ctx]
  Var probabilities;  // [L, 1]
};

// a_{l,i} ~ softmax_i( v_l . project(h_i) ); p_l = sigmoid(v_l . project(h^l)).
// label_embeddings are frozen: they enter the tape as constants and never
// receive gradient.
ZeroShotResult zero_shot_scores(Tape& t, const EncodedSequence& enc,
                                const Matrix& label_embeddings,
                                const ZeroShotParams& params);

struct EmbeddedSection {
  Matrix embeddings;       // [n, dim]
  std::vector<char> mask;  // 1 = real token, 0 = PAD
};

struct EmbeddedDoc {
  std::vector<EmbeddedSection> sections;
  EmbeddedSection flat() const;
};

struct HanDropout {
  const RowVector* word = nullptr;
  const RowVector* section = nullptr;
};

// Word-level BiGRU+attention per section (shared weights), second-level
// BiGRU+attention over the section embeddings, dense sigmoid output. When
// attention_trace is given, every attention weight matrix is appended to it.
Var han_forward(Tape& t, const std::vector<EmbeddedSection>& sections,
                const HanParams& params, const HanDropout& dropout = {},
                std::vector<Matrix>* attention_trace = nullptr);

// --- the model ----------------------------------------------------------

class Model {
 public:
  Model(const ModelConfig& cfg, const embeddings::EmbeddingMatrix* emb,
        const embeddings::LabelVocabulary* labels);

  Architecture architecture() const { return arch_; }
  const ModelConfig& config() const { return cfg_; }
  Index n_labels() const;
  Index d_ctx() const;

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const Matrix& label_embeddings() const { return label_embs_; }
  const embeddings::LabelVocabulary& label_vocabulary() const { return *labels_; }

  EmbeddedDoc embed(const corpus::Document& doc, const corpus::ZoneSpec& zone,
                    bool training = false, Rng* rng = nullptr) const;

  // Probability vector [L, 1] on the tape. In training mode dropout draws
  // come from rng; inference is deterministic.
  Var forward(Tape& t, const EmbeddedDoc& doc, bool training = false,
              Rng* rng = nullptr);

  Vector predict(const corpus::Document& doc, const corpus::ZoneSpec& zone);
  Vector predict_embedded(const EmbeddedDoc& doc);

  // Attention weight matrices recorded during the most recent forward.
  const std::vector<Matrix>& attention_trace() const { return attention_trace_; }

  void save(const std::string& path) const;
  static Model load(const std::string& path,
                    const embeddings::EmbeddingMatrix* emb,
                    const embeddings::LabelVocabulary* labels);

  struct Layers {
    std::optional<BiGruParams> bigru;
    std::optional<CnnParams> cnn;
    std::optional<AttentionParams> self_att;
    std::optional<LabelwiseAttentionParams> lwan_att;
    std::optional<LabelwiseOutputParams> lwan_out;
    std::optional<DenseOutputParams> dense_out;
    std::optional<HanParams> han;
    std::optional<ZeroShotParams> zero;
  };
  const Layers& layers() const { return layers_; }

 private:
  void build();
  EncodedSequence encode(Tape& t, const EmbeddedSection& sec,
                         const RowVector* hidden_dropout);

  ModelConfig cfg_;
  Architecture arch_;
  const embeddings::EmbeddingMatrix* emb_;
  const embeddings::LabelVocabulary* labels_;
  ParamStore store_;
  Layers layers_;
  Matrix label_embs_;  // zero-shot architectures only; frozen
  std::vector<Matrix> attention_trace_;
};

// Uniform inference dispatch over the six architectures.
Vector forward(Model& model, const corpus::Document& doc,
               const corpus::ZoneSpec& zone);

bool params_bit_identical(const ParamStore& a, const ParamStore& b);

}  // namespace lmtc::neural
