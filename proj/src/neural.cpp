// SPDX-License-Identifier: Apache-2.0
#include "lmtc/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "lmtc/error.hpp"
#include "lmtc/tokenize.hpp"

namespace fs = std::filesystem;

namespace lmtc::neural {

Architecture parse_architecture(const std::string& id) {
  std::string up;
  for (char c : id)
    up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "BIGRU-ATT") return Architecture::BigruAtt;
  if (up == "HAN") return Architecture::Han;
  if (up == "CNN-LWAN") return Architecture::CnnLwan;
  if (up == "BIGRU-LWAN") return Architecture::BigruLwan;
  if (up == "ZERO-CNN-LWAN") return Architecture::ZeroCnnLwan;
  if (up == "ZERO-BIGRU-LWAN") return Architecture::ZeroBigruLwan;
  throw ConfigError("unknown architecture '" + id + "'");
}

const char* architecture_name(Architecture a) {
  switch (a) {
    case Architecture::BigruAtt: return "BIGRU-ATT";
    case Architecture::Han: return "HAN";
    case Architecture::CnnLwan: return "CNN-LWAN";
    case Architecture::BigruLwan: return "BIGRU-LWAN";
    case Architecture::ZeroCnnLwan: return "ZERO-CNN-LWAN";
    case Architecture::ZeroBigruLwan: return "ZERO-BIGRU-LWAN";
  }
  return "?";
}

bool is_zero_shot(Architecture a) {
  return a == Architecture::ZeroCnnLwan || a == Architecture::ZeroBigruLwan;
}

bool uses_cnn_encoder(Architecture a) {
  return a == Architecture::CnnLwan || a == Architecture::ZeroCnnLwan;
}

const std::vector<Architecture>& all_architectures() {
  static const std::vector<Architecture> all = {
      Architecture::BigruAtt,  Architecture::Han,
      Architecture::CnnLwan,   Architecture::BigruLwan,
      Architecture::ZeroCnnLwan, Architecture::ZeroBigruLwan};
  return all;
}

void ModelConfig::validate() const {
  parse_architecture(architecture);
  if (n_layers < 1 || n_layers > 2)
    throw ConfigError("n_layers must be 1 or 2");
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (dropout_hidden < 0.0 || dropout_hidden >= 1.0)
    throw ConfigError("dropout_hidden must lie in [0, 1)");
  if (dropout_word_emb < 0.0 || dropout_word_emb >= 1.0)
    throw ConfigError("dropout_word_emb must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cnn_kernel_size < 1 || cnn_kernel_size % 2 == 0)
    throw ConfigError("cnn_kernel_size must be odd and >= 1");
  if (cnn_filters < 0) throw ConfigError("cnn_filters must be >= 0");
}

Json ModelConfig::to_json() const {
  Json j;
  j["architecture"] = architecture;
  j["n_layers"] = n_layers;
  j["hidden_units"] = hidden_units;
  j["dropout_hidden"] = dropout_hidden;
  j["dropout_word_emb"] = dropout_word_emb;
  j["batch_size"] = batch_size;
  j["cnn_kernel_size"] = cnn_kernel_size;
  j["cnn_filters"] = cnn_filters;
  j["seed"] = seed;
  return j;
}

ModelConfig ModelConfig::from_json(const Json& j) {
  require_keys_subset(j,
                      {"architecture", "n_layers", "hidden_units",
                       "dropout_hidden", "dropout_word_emb", "batch_size",
                       "cnn_kernel_size", "cnn_filters", "seed"},
                      "model config");
  ModelConfig cfg;
  if (j.contains("architecture")) cfg.architecture = j["architecture"].get<std::string>();
  if (j.contains("n_layers")) cfg.n_layers = j["n_layers"].get<int>();
  if (j.contains("hidden_units")) cfg.hidden_units = j["hidden_units"].get<Index>();
  if (j.contains("dropout_hidden")) cfg.dropout_hidden = j["dropout_hidden"].get<double>();
  if (j.contains("dropout_word_emb")) cfg.dropout_word_emb = j["dropout_word_emb"].get<double>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("cnn_kernel_size")) cfg.cnn_kernel_size = j["cnn_kernel_size"].get<Index>();
  if (j.contains("cnn_filters")) cfg.cnn_filters = j["cnn_filters"].get<Index>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  cfg.validate();
  return cfg;
}

// --- parameter construction -------------------------------------------------

namespace {

double fan_in_scale(Index fan_in) { return std::sqrt(1.0 / static_cast<double>(fan_in)); }

GruDirectionParams make_gru_direction(ParamStore& store, const std::string& prefix,
                                      Index input_dim, Index hidden, Rng& rng) {
  GruDirectionParams p;
  static const char* gate[3] = {"z", "r", "h"};
  for (int g = 0; g < 3; ++g) {
    p.W[g] = &store.create(prefix + ".W" + gate[g], input_dim, hidden,
                           fan_in_scale(input_dim), rng);
    p.U[g] = &store.create(prefix + ".U" + gate[g], hidden, hidden,
                           fan_in_scale(hidden), rng);
    p.b[g] = &store.create(prefix + ".b" + gate[g], 1, hidden, 0.0, rng);
  }
  return p;
}

}  // namespace

BiGruParams make_bigru(ParamStore& store, const std::string& prefix,
                       Index input_dim, Index hidden, int n_layers, Rng& rng) {
  BiGruParams params;
  params.hidden = hidden;
  Index in = input_dim;
  for (int l = 0; l < n_layers; ++l) {
    GruLayerParams layer;
    const std::string lp = prefix + ".l" + std::to_string(l);
    layer.fwd = make_gru_direction(store, lp + ".fwd", in, hidden, rng);
    layer.bwd = make_gru_direction(store, lp + ".bwd", in, hidden, rng);
    params.layers.push_back(layer);
    in = 2 * hidden;
  }
  return params;
}

CnnParams make_cnn(ParamStore& store, const std::string& prefix, Index input_dim,
                   Index filters, Index kernel, Rng& rng) {
  CnnParams params;
  params.kernel = kernel;
  params.filters = filters;
  const double scale = fan_in_scale(input_dim * kernel);
  for (Index k = 0; k < kernel; ++k)
    params.taps.push_back(&store.create(prefix + ".tap" + std::to_string(k),
                                        input_dim, filters, scale, rng));
  params.bias = &store.create(prefix + ".bias", 1, filters, 0.0, rng);
  return params;
}

AttentionParams make_attention(ParamStore& store, const std::string& prefix,
                               Index d_ctx, Rng& rng) {
  AttentionParams p;
  p.W = &store.create(prefix + ".W", d_ctx, d_ctx, fan_in_scale(d_ctx), rng);
  p.b = &store.create(prefix + ".b", 1, d_ctx, 0.0, rng);
  p.v = &store.create(prefix + ".v", d_ctx, 1, fan_in_scale(d_ctx), rng);
  return p;
}

LabelwiseAttentionParams make_labelwise_attention(ParamStore& store,
                                                  const std::string& prefix,
                                                  Index d_ctx, Index n_labels,
                                                  Rng& rng) {
  LabelwiseAttentionParams p;
  for (Index l = 0; l < n_labels; ++l)
    p.heads.push_back(make_attention(store, prefix + ".head" + std::to_string(l),
                                     d_ctx, rng));
  return p;
}

LabelwiseOutputParams make_labelwise_output(ParamStore& store,
                                            const std::string& prefix,
                                            Index d_ctx, Index n_labels,
                                            Rng& rng) {
  LabelwiseOutputParams p;
  p.W = &store.create(prefix + ".W", n_labels, d_ctx, fan_in_scale(d_ctx), rng);
  p.b = &store.create(prefix + ".b", n_labels, 1, 0.0, rng);
  return p;
}

DenseOutputParams make_dense_output(ParamStore& store, const std::string& prefix,
                                    Index d_ctx, Index n_labels, Rng& rng) {
  DenseOutputParams p;
  p.W = &store.create(prefix + ".W", d_ctx, n_labels, fan_in_scale(d_ctx), rng);
  p.b = &store.create(prefix + ".b", 1, n_labels, 0.0, rng);
  return p;
}

// --- encoders ---------------------------------------------------------------

namespace {

Var gru_step(Tape& t, const GruDirectionParams& p, Var x, Var h) {
  Var z = t.sigmoid(t.add(t.add(t.matmul(x, t.param(*p.W[0])),
                                t.matmul(h, t.param(*p.U[0]))),
                          t.param(*p.b[0])));
  Var r = t.sigmoid(t.add(t.add(t.matmul(x, t.param(*p.W[1])),
                                t.matmul(h, t.param(*p.U[1]))),
                          t.param(*p.b[1])));
  Var cand = t.tanh(t.add(t.add(t.matmul(x, t.param(*p.W[2])),
                                t.matmul(t.cmul(r, h), t.param(*p.U[2]))),
                          t.param(*p.b[2])));
  // h' = (1 - z) . cand + z . h
  Var one_minus_z = t.affine(z, -1.0, 1.0);
  return t.add(t.cmul(one_minus_z, cand), t.cmul(z, h));
}

// Masked steps keep the previous state, so PAD can never bleed into real
// positions from either direction.
std::vector<Var> gru_direction_pass(Tape& t, const std::vector<Var>& inputs,
                                    const std::vector<char>& mask,
                                    const GruDirectionParams& p, Index hidden,
                                    bool reverse) {
  const Index n = static_cast<Index>(inputs.size());
  std::vector<Var> states(static_cast<size_t>(n));
  Var h = t.constant(Matrix::Zero(1, hidden));
  for (Index step = 0; step < n; ++step) {
    const Index i = reverse ? n - 1 - step : step;
    if (mask[static_cast<size_t>(i)]) h = gru_step(t, p, inputs[static_cast<size_t>(i)], h);
    states[static_cast<size_t>(i)] = h;
  }
  return states;
}

std::vector<Var> bigru_over_steps(Tape& t, std::vector<Var> inputs,
                                  const std::vector<char>& mask,
                                  const BiGruParams& params) {
  for (const auto& layer : params.layers) {
    auto fwd = gru_direction_pass(t, inputs, mask, layer.fwd, params.hidden, false);
    auto bwd = gru_direction_pass(t, inputs, mask, layer.bwd, params.hidden, true);
    std::vector<Var> next(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i)
      next[i] = t.concat_cols(fwd[i], bwd[i]);
    inputs = std::move(next);
  }
  return inputs;
}

std::vector<Var> rows_as_vars(Tape& t, const Matrix& m) {
  std::vector<Var> rows(static_cast<size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) rows[static_cast<size_t>(i)] = t.constant(m.row(i));
  return rows;
}

Var apply_hidden_dropout(Tape& t, Var states, const RowVector* mask) {
  return mask ? t.scale_cols(states, *mask) : states;
}

}  // namespace

EncodedSequence bigru_encode(Tape& t, const Matrix& embeddings,
                             const std::vector<char>& mask,
                             const BiGruParams& params,
                             const RowVector* hidden_dropout) {
  if (embeddings.rows() < 1) throw Error("bigru_encode: empty input");
  if (static_cast<Index>(mask.size()) != embeddings.rows())
    throw Error("bigru_encode: mask size mismatch");
  auto states = bigru_over_steps(t, rows_as_vars(t, embeddings), mask, params);
  EncodedSequence enc;
  enc.states = apply_hidden_dropout(t, t.concat_rows(states), hidden_dropout);
  enc.mask = mask;
  return enc;
}

EncodedSequence cnn_encode(Tape& t, const Matrix& embeddings,
                           const std::vector<char>& mask,
                           const CnnParams& params,
                           const RowVector* hidden_dropout) {
  const Index n = embeddings.rows();
  if (n < 1) throw Error("cnn_encode: empty input");
  if (static_cast<Index>(mask.size()) != n)
    throw Error("cnn_encode: mask size mismatch");
  const Index half = params.kernel / 2;
  Var sum;
  for (Index k = 0; k < params.kernel; ++k) {
    // Same-padding convolution as a sum of shifted matmuls; the shifted
    // copies of the constant input are built outside the tape.
    const Index offset = k - half;
    Matrix shifted = Matrix::Zero(n, embeddings.cols());
    for (Index i = 0; i < n; ++i) {
      const Index src = i + offset;
      if (src >= 0 && src < n && mask[static_cast<size_t>(src)])
        shifted.row(i) = embeddings.row(src);
    }
    Var term = t.matmul(t.constant(std::move(shifted)),
                        t.param(*params.taps[static_cast<size_t>(k)]));
    sum = sum.valid() ? t.add(sum, term) : term;
  }
  Var states = t.tanh(t.add_rowvec(sum, t.param(*params.bias)));
  Vector row_mask(n);
  for (Index i = 0; i < n; ++i) row_mask(i) = mask[static_cast<size_t>(i)] ? 1.0 : 0.0;
  states = t.scale_rows(states, row_mask);
  EncodedSequence enc;
  enc.states = apply_hidden_dropout(t, states, hidden_dropout);
  enc.mask = mask;
  return enc;
}

// --- attention and outputs ---------------------------------------------------

namespace {

Var attention_scores_row(Tape& t, Var states, const AttentionParams& p) {
  Var hidden = t.tanh(t.add_rowvec(t.matmul(states, t.param(*p.W)), t.param(*p.b)));
  return t.transpose(t.matmul(hidden, t.param(*p.v)));  // [1, n]
}

}  // namespace

AttentionResult self_attention(Tape& t, const EncodedSequence& enc,
                               const AttentionParams& params) {
  Var scores = attention_scores_row(t, enc.states, params);
  Var weights = t.masked_softmax_rows(scores, enc.mask);
  AttentionResult out;
  out.weights = weights;
  out.context = t.matmul(weights, enc.states);
  return out;
}

AttentionResult labelwise_attention(Tape& t, const EncodedSequence& enc,
                                    const LabelwiseAttentionParams& params) {
  if (params.heads.empty()) throw Error("labelwise_attention: no heads");
  std::vector<Var> rows;
  rows.reserve(params.heads.size());
  for (const auto& head : params.heads)
    rows.push_back(attention_scores_row(t, enc.states, head));
  Var scores = t.concat_rows(rows);  // [L, n]
  Var weights = t.masked_softmax_rows(scores, enc.mask);
  AttentionResult out;
  out.weights = weights;
  out.context = t.matmul(weights, enc.states);  // [L, d_ctx]
  return out;
}

Var lwan_output(Tape& t, Var per_label, const LabelwiseOutputParams& params) {
  Var logits = t.add(t.rowwise_dot(per_label, t.param(*params.W)),
                     t.param(*params.b));
  return t.sigmoid(logits);  // [L, 1]
}

Var dense_output(Tape& t, Var single, const DenseOutputParams& params) {
  Var logits = t.add(t.matmul(single, t.param(*params.W)), t.param(*params.b));
  return t.transpose(t.sigmoid(logits));  // [L, 1]
}

ZeroShotResult zero_shot_scores(Tape& t, const EncodedSequence& enc,
                                const Matrix& label_embeddings,
                                const ZeroShotParams& params) {
  if (params.projection->value.rows() != enc.states.cols())
    throw Error("zero_shot_scores: projection/input dimension mismatch");
  if (params.projection->value.cols() != label_embeddings.cols())
    throw Error("zero_shot_scores: projection/label dimension mismatch");
  Var proj = t.param(*params.projection);
  Var labels = t.constant(label_embeddings);  // frozen: constants get no grad
  Var projected = t.matmul(enc.states, proj);               // [n, dim]
  Var scores = t.matmul(labels, t.transpose(projected));    // [L, n]
  Var weights = t.masked_softmax_rows(scores, enc.mask);
  Var per_label = t.matmul(weights, enc.states);            // [L, d_ctx]
  Var logits = t.rowwise_dot(t.matmul(per_label, proj), labels);  // [L, 1]
  ZeroShotResult out;
  out.weights = weights;
  out.per_label = per_label;
  out.probabilities = t.sigmoid(logits);
  return out;
}

EmbeddedSection EmbeddedDoc::flat() const {
  Index rows = 0;
  for (const auto& s : sections) rows += s.embeddings.rows();
  EmbeddedSection out;
  if (sections.empty()) return out;
  out.embeddings = Matrix::Zero(rows, sections.front().embeddings.cols());
  out.mask.reserve(static_cast<size_t>(rows));
  Index at = 0;
  for (const auto& s : sections) {
    out.embeddings.middleRows(at, s.embeddings.rows()) = s.embeddings;
    out.mask.insert(out.mask.end(), s.mask.begin(), s.mask.end());
    at += s.embeddings.rows();
  }
  return out;
}

Var han_forward(Tape& t, const std::vector<EmbeddedSection>& sections,
                const HanParams& params, const HanDropout& dropout,
                std::vector<Matrix>* attention_trace) {
  if (sections.empty()) throw Error("han_forward: document has no sections");
  std::vector<Var> section_embs;
  section_embs.reserve(sections.size());
  for (const auto& sec : sections) {
    EncodedSequence enc = bigru_encode(t, sec.embeddings, sec.mask, params.word,
                                       dropout.word);
    AttentionResult att = self_attention(t, enc, params.word_att);
    if (attention_trace) attention_trace->push_back(att.weights.value());
    section_embs.push_back(att.context);
  }
  std::vector<char> section_mask(sections.size(), 1);
  auto states = bigru_over_steps(t, section_embs, section_mask, params.section);
  EncodedSequence enc;
  enc.states = t.concat_rows(states);
  if (dropout.section) enc.states = t.scale_cols(enc.states, *dropout.section);
  enc.mask = section_mask;
  AttentionResult att = self_attention(t, enc, params.section_att);
  if (attention_trace) attention_trace->push_back(att.weights.value());
  return dense_output(t, att.context, params.out);
}

// --- Model -------------------------------------------------------------------

Model::Model(const ModelConfig& cfg, const embeddings::EmbeddingMatrix* emb,
             const embeddings::LabelVocabulary* labels)
    : cfg_(cfg), arch_(parse_architecture(cfg.architecture)), emb_(emb),
      labels_(labels) {
  cfg_.validate();
  if (!emb_ || !labels_) throw Error("model needs embeddings and labels");
  if (labels_->size() < 1) throw Error("model needs at least one label");
  build();
}

Index Model::n_labels() const { return labels_->size(); }

Index Model::d_ctx() const {
  return uses_cnn_encoder(arch_) ? cfg_.effective_cnn_filters()
                                 : 2 * cfg_.hidden_units;
}

void Model::build() {
  Rng rng = Rng::stream(cfg_.seed, 0x10);
  const Index dim = emb_->dim;
  const Index L = n_labels();
  const Index d = d_ctx();
  switch (arch_) {
    case Architecture::BigruAtt:
      layers_.bigru = make_bigru(store_, "enc", dim, cfg_.hidden_units,
                                 cfg_.n_layers, rng);
      layers_.self_att = make_attention(store_, "att", d, rng);
      layers_.dense_out = make_dense_output(store_, "out", d, L, rng);
      break;
    case Architecture::Han: {
      HanParams han;
      han.word = make_bigru(store_, "word", dim, cfg_.hidden_units,
                            cfg_.n_layers, rng);
      han.word_att = make_attention(store_, "word_att", d, rng);
      han.section = make_bigru(store_, "section", d, cfg_.hidden_units,
                               cfg_.n_layers, rng);
      han.section_att = make_attention(store_, "section_att", d, rng);
      han.out = make_dense_output(store_, "out", d, L, rng);
      layers_.han = han;
      break;
    }
    case Architecture::CnnLwan:
      layers_.cnn = make_cnn(store_, "enc", dim, cfg_.effective_cnn_filters(),
                             cfg_.cnn_kernel_size, rng);
      layers_.lwan_att = make_labelwise_attention(store_, "att", d, L, rng);
      layers_.lwan_out = make_labelwise_output(store_, "out", d, L, rng);
      break;
    case Architecture::BigruLwan:
      layers_.bigru = make_bigru(store_, "enc", dim, cfg_.hidden_units,
                                 cfg_.n_layers, rng);
      layers_.lwan_att = make_labelwise_attention(store_, "att", d, L, rng);
      layers_.lwan_out = make_labelwise_output(store_, "out", d, L, rng);
      break;
    case Architecture::ZeroCnnLwan:
      layers_.cnn = make_cnn(store_, "enc", dim, cfg_.effective_cnn_filters(),
                             cfg_.cnn_kernel_size, rng);
      layers_.zero = ZeroShotParams{
          &store_.create("zero.projection", d, dim, fan_in_scale(d), rng)};
      break;
    case Architecture::ZeroBigruLwan:
      layers_.bigru = make_bigru(store_, "enc", dim, cfg_.hidden_units,
                                 cfg_.n_layers, rng);
      layers_.zero = ZeroShotParams{
          &store_.create("zero.projection", d, dim, fan_in_scale(d), rng)};
      break;
  }
  if (is_zero_shot(arch_))
    label_embs_ = embeddings::label_embedding_matrix(*labels_, *emb_);
}

EmbeddedDoc Model::embed(const corpus::Document& doc,
                         const corpus::ZoneSpec& zone, bool training,
                         Rng* rng) const {
  auto sections = arch_ == Architecture::Han
                      ? corpus::zone_sections(doc, zone)
                      : std::vector<std::vector<std::string>>{
                            corpus::extract_zone(doc, zone)};
  if (arch_ != Architecture::Han && sections.front().empty()) sections.clear();
  if (sections.empty()) {
    // Zone selections can come up empty; a lone OOV token keeps the
    // encoders fed and the output defined.
    sections.push_back({std::string()});
  }
  EmbeddedDoc out;
  const double p = cfg_.dropout_word_emb;
  for (const auto& tokens : sections) {
    EmbeddedSection sec;
    sec.embeddings = emb_->embed(tokens);
    sec.mask.assign(tokens.size(), 1);
    if (training && p > 0.0 && rng) {
      // Whole-vector dropout per position, inverted scaling.
      for (Index i = 0; i < sec.embeddings.rows(); ++i) {
        if (rng->bernoulli(p)) sec.embeddings.row(i).setZero();
        else sec.embeddings.row(i) /= (1.0 - p);
      }
    }
    out.sections.push_back(std::move(sec));
  }
  return out;
}

namespace {

RowVector dropout_mask(Index size, double p, Rng& rng) {
  RowVector mask(size);
  for (Index i = 0; i < size; ++i)
    mask(i) = rng.bernoulli(p) ? 0.0 : 1.0 / (1.0 - p);
  return mask;
}

}  // namespace

Var Model::forward(Tape& t, const EmbeddedDoc& doc, bool training, Rng* rng) {
  attention_trace_.clear();
  const bool drop = training && cfg_.dropout_hidden > 0.0 && rng;
  RowVector hid_mask, section_mask;
  const RowVector* hid = nullptr;
  if (drop) {
    hid_mask = dropout_mask(d_ctx(), cfg_.dropout_hidden, *rng);
    hid = &hid_mask;
  }

  Var probs;
  switch (arch_) {
    case Architecture::BigruAtt: {
      const EmbeddedSection flat = doc.flat();
      EncodedSequence enc =
          bigru_encode(t, flat.embeddings, flat.mask, *layers_.bigru, hid);
      AttentionResult att = self_attention(t, enc, *layers_.self_att);
      attention_trace_.push_back(att.weights.value());
      probs = dense_output(t, att.context, *layers_.dense_out);
      break;
    }
    case Architecture::Han: {
      HanDropout hd;
      if (drop) {
        section_mask = dropout_mask(d_ctx(), cfg_.dropout_hidden, *rng);
        hd.word = hid;
        hd.section = &section_mask;
      }
      probs = han_forward(t, doc.sections, *layers_.han, hd, &attention_trace_);
      break;
    }
    case Architecture::CnnLwan: {
      const EmbeddedSection flat = doc.flat();
      EncodedSequence enc =
          cnn_encode(t, flat.embeddings, flat.mask, *layers_.cnn, hid);
      AttentionResult att = labelwise_attention(t, enc, *layers_.lwan_att);
      attention_trace_.push_back(att.weights.value());
      probs = lwan_output(t, att.context, *layers_.lwan_out);
      break;
    }
    case Architecture::BigruLwan: {
      const EmbeddedSection flat = doc.flat();
      EncodedSequence enc =
          bigru_encode(t, flat.embeddings, flat.mask, *layers_.bigru, hid);
      AttentionResult att = labelwise_attention(t, enc, *layers_.lwan_att);
      attention_trace_.push_back(att.weights.value());
      probs = lwan_output(t, att.context, *layers_.lwan_out);
      break;
    }
    case Architecture::ZeroCnnLwan: {
      const EmbeddedSection flat = doc.flat();
      EncodedSequence enc =
          cnn_encode(t, flat.embeddings, flat.mask, *layers_.cnn, hid);
      ZeroShotResult res = zero_shot_scores(t, enc, label_embs_, *layers_.zero);
      attention_trace_.push_back(res.weights.value());
      probs = res.probabilities;
      break;
    }
    case Architecture::ZeroBigruLwan: {
      const EmbeddedSection flat = doc.flat();
      EncodedSequence enc =
          bigru_encode(t, flat.embeddings, flat.mask, *layers_.bigru, hid);
      ZeroShotResult res = zero_shot_scores(t, enc, label_embs_, *layers_.zero);
      attention_trace_.push_back(res.weights.value());
      probs = res.probabilities;
      break;
    }
  }
  return probs;
}

Vector Model::predict(const corpus::Document& doc, const corpus::ZoneSpec& zone) {
  return predict_embedded(embed(doc, zone));
}

Vector Model::predict_embedded(const EmbeddedDoc& doc) {
  Tape t;
  Var probs = forward(t, doc, false, nullptr);
  return probs.value().col(0);
}

Vector forward(Model& model, const corpus::Document& doc,
               const corpus::ZoneSpec& zone) {
  return model.predict(doc, zone);
}

// --- checkpoints --------------------------------------------------------------

void Model::save(const std::string& path) const {
  Json j;
  j["format"] = "lmtc-model-v1";
  j["config"] = cfg_.to_json();
  Json meta;
  meta["n_labels"] = n_labels();
  meta["embedding_dim"] = emb_->dim;
  std::vector<std::string> ids;
  for (Index l = 0; l < labels_->size(); ++l) ids.push_back(labels_->id(l));
  meta["label_ids"] = ids;
  j["meta"] = meta;
  Json tensors = Json::array();
  auto pack = [](const std::string& name, const Matrix& m) {
    Json t;
    t["name"] = name;
    t["rows"] = m.rows();
    t["cols"] = m.cols();
    std::vector<double> data;
    data.reserve(static_cast<size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    t["data"] = data;
    return t;
  };
  for (size_t i = 0; i < store_.size(); ++i)
    tensors.push_back(pack(store_.at(i).name, store_.at(i).value));
  if (label_embs_.size() > 0)
    j["label_embeddings"] = pack("label_embeddings", label_embs_);
  j["tensors"] = tensors;

  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  auto bytes = Json::to_msgpack(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

namespace {

Matrix unpack_tensor(const Json& t) {
  const Index rows = t.at("rows").get<Index>();
  const Index cols = t.at("cols").get<Index>();
  std::vector<double> data = t.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols)
    throw Error("checkpoint tensor '" + t.at("name").get<std::string>() +
                "': size mismatch");
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      m(r, c) = data[static_cast<size_t>(r * cols + c)];
  return m;
}

}  // namespace

Model Model::load(const std::string& path,
                  const embeddings::EmbeddingMatrix* emb,
                  const embeddings::LabelVocabulary* labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  Json j;
  try {
    j = Json::from_msgpack(bytes);
  } catch (const Json::exception& e) {
    throw Error(path + ": not a model checkpoint (" + e.what() + ")");
  }
  if (j.value("format", "") != std::string("lmtc-model-v1"))
    throw Error(path + ": unknown checkpoint format");
  ModelConfig cfg = ModelConfig::from_json(j.at("config"));
  Model model(cfg, emb, labels);
  const Json& meta = j.at("meta");
  if (meta.at("n_labels").get<Index>() != model.n_labels())
    throw Error(path + ": label count mismatch");
  if (meta.at("embedding_dim").get<Index>() != emb->dim)
    throw Error(path + ": embedding dimension mismatch");
  for (const auto& t : j.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    Param* p = model.store_.find(name);
    if (!p) throw Error(path + ": unexpected tensor '" + name + "'");
    Matrix m = unpack_tensor(t);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
      throw Error(path + ": tensor '" + name + "' shape mismatch");
    p->value = std::move(m);
  }
  if (j.contains("label_embeddings"))
    model.label_embs_ = unpack_tensor(j.at("label_embeddings"));
  return model;
}

bool params_bit_identical(const ParamStore& a, const ParamStore& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    const Matrix& x = a.at(i).value;
    const Matrix& y = b.at(i).value;
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    if (std::memcmp(x.data(), y.data(),
                    sizeof(Scalar) * static_cast<size_t>(x.size())) != 0)
      return false;
  }
  return true;
}

}  // namespace lmtc::neural
