// SPDX-License-Identifier: Apache-2.0
#include "lmtc/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "lmtc/error.hpp"
#include "lmtc/parallel.hpp"

namespace lmtc::training {

namespace {
constexpr double kProbEps = 1e-12;
}

double bce_loss(const Vector& probs, const Vector& gold) {
  return bce_loss(probs, gold, Vector::Ones(probs.size()));
}

double bce_loss(const Vector& probs, const Vector& gold, const Vector& weights) {
  if (probs.size() != gold.size() || probs.size() != weights.size())
    throw Error("bce_loss: size mismatch");
  if (probs.size() == 0) throw Error("bce_loss: empty input");
  const double total_weight = weights.sum();
  if (total_weight <= 0) throw Error("bce_loss: weights sum to zero");
  double sum = 0.0;
  for (Index i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs(i), kProbEps, 1.0 - kProbEps);
    const double g = gold(i);
    sum -= weights(i) * (g * std::log(p) + (1.0 - g) * std::log(1.0 - p));
  }
  return sum / total_weight;
}

autodiff::Var bce_loss_var(autodiff::Tape& t, autodiff::Var probs,
                           const Vector& gold) {
  return bce_loss_var(t, probs, gold, Vector::Ones(gold.size()));
}

autodiff::Var bce_loss_var(autodiff::Tape& t, autodiff::Var probs,
                           const Vector& gold, const Vector& weights) {
  const Index L = probs.rows();
  if (probs.cols() != 1 || L != gold.size() || L != weights.size())
    throw Error("bce_loss_var: expected [L,1] probabilities");
  const double total_weight = weights.sum();
  if (total_weight <= 0) throw Error("bce_loss_var: weights sum to zero");
  autodiff::Var p = t.clamp(probs, kProbEps, 1.0 - kProbEps);
  autodiff::Var g = t.constant(gold);
  autodiff::Var ones = t.constant(Matrix::Ones(L, 1));
  autodiff::Var term = t.add(t.cmul(g, t.log(p)),
                             t.cmul(t.sub(ones, g), t.log(t.sub(ones, p))));
  autodiff::Var weighted = t.cmul(term, t.constant(weights));
  return t.affine(t.sum_all(weighted), -1.0 / total_weight, 0.0);
}

void Adam::step(autodiff::ParamStore& params) {
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (size_t i = 0; i < params.size(); ++i) {
      const Matrix& g = params.at(i).grad;
      m_.push_back(Matrix::Zero(g.rows(), g.cols()));
      v_.push_back(Matrix::Zero(g.rows(), g.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    autodiff::Param& p = params.at(i);
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

Json TrainRun::to_json() const {
  Json j;
  j["config"] = config.to_json();
  j["seed"] = seed;
  j["train_losses"] = train_losses;
  j["dev_trace"] = dev_trace;
  j["epochs_trained"] = epochs_trained;
  j["best_epoch"] = best_epoch;
  j["best_objective"] = best_objective;
  if (!checkpoint_path.empty()) j["checkpoint"] = checkpoint_path;
  return j;
}

namespace {

Vector gold_row(const corpus::Document& doc,
                const embeddings::LabelVocabulary& vocab) {
  Vector g = Vector::Zero(vocab.size());
  for (const auto& label : doc.gold_labels) {
    const Index l = vocab.index_of(label);
    if (l >= 0) g(l) = 1.0;
  }
  return g;
}

metrics::EvalInstance eval_on_split(neural::Model& model,
                                    const corpus::CorpusSplit& split,
                                    const corpus::ZoneSpec& zone,
                                    const embeddings::LabelVocabulary& vocab) {
  std::vector<std::string> ids;
  std::vector<std::set<std::string>> gold;
  Matrix scores(static_cast<Index>(split.documents.size()), vocab.size());
  for (size_t i = 0; i < split.documents.size(); ++i) {
    ids.push_back(split.documents[i].doc_id);
    gold.push_back(split.documents[i].gold_labels);
    scores.row(static_cast<Index>(i)) =
        model.predict(split.documents[i], zone).transpose();
  }
  return metrics::EvalInstance::from_scores(ids, scores, vocab, gold);
}

}  // namespace

TrainRun train(neural::Model& model, const corpus::CorpusSplit& train_split,
               const corpus::CorpusSplit& dev_split, const TrainOptions& opts) {
  if (train_split.documents.empty()) throw Error("train: empty training split");
  const neural::ModelConfig& cfg = model.config();
  const embeddings::LabelVocabulary& vocab = model.label_vocabulary();

  TrainRun run;
  run.config = cfg;
  run.seed = cfg.seed;
  run.best_objective = std::numeric_limits<double>::infinity();

  Rng shuffle_rng = Rng::stream(cfg.seed, 0x21);
  Rng dropout_rng = Rng::stream(cfg.seed, 0x22);
  Adam adam(opts.learning_rate);

  const bool use_dev_loss = opts.stopping_metric == "dev_loss";
  Statistic stat;
  if (!use_dev_loss && !opts.dev_objective_override)
    stat = Statistic::parse(opts.stopping_metric);

  Vector loss_weights = opts.loss_label_weights;
  if (loss_weights.size() == 0) loss_weights = Vector::Ones(model.n_labels());
  if (loss_weights.size() != model.n_labels())
    throw Error("train: loss_label_weights size mismatch");

  std::vector<Vector> train_gold;
  train_gold.reserve(train_split.documents.size());
  for (const auto& doc : train_split.documents)
    train_gold.push_back(gold_row(doc, vocab));
  std::vector<Vector> dev_gold;
  dev_gold.reserve(dev_split.documents.size());
  for (const auto& doc : dev_split.documents)
    dev_gold.push_back(gold_row(doc, vocab));

  std::vector<Matrix> best_params = model.params().snapshot_values();

  const Index n = static_cast<Index>(train_split.documents.size());
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index end = std::min<Index>(n, start + cfg.batch_size);
      const double batch_n = static_cast<double>(end - start);
      autodiff::Tape tape;
      autodiff::Var total;
      for (Index bi = start; bi < end; ++bi) {
        const size_t di = static_cast<size_t>(order[static_cast<size_t>(bi)]);
        const corpus::Document& doc = train_split.documents[di];
        neural::EmbeddedDoc emb = model.embed(doc, opts.zone, true, &dropout_rng);
        autodiff::Var probs = model.forward(tape, emb, true, &dropout_rng);
        autodiff::Var loss =
            bce_loss_var(tape, probs, train_gold[di], loss_weights);
        total = total.valid() ? tape.add(total, loss) : loss;
      }
      autodiff::Var batch_loss = tape.affine(total, 1.0 / batch_n, 0.0);
      const double loss_value = batch_loss.value()(0, 0);
      if (!std::isfinite(loss_value))
        throw Error("train: non-finite loss in epoch " + std::to_string(epoch) +
                    " (batch starting at " + std::to_string(start) + ")");
      model.params().zero_grads();
      tape.backward(batch_loss);
      model.params().clip_grad_norm(opts.grad_clip_norm);
      adam.step(model.params());
      epoch_loss += loss_value * batch_n;
    }
    epoch_loss /= static_cast<double>(n);
    run.train_losses.push_back(epoch_loss);

    double objective;
    double dev_value;
    if (opts.dev_objective_override) {
      objective = dev_value = opts.dev_objective_override(epoch);
    } else if (use_dev_loss) {
      double sum = 0.0;
      for (size_t i = 0; i < dev_split.documents.size(); ++i)
        sum += bce_loss(model.predict(dev_split.documents[i], opts.zone),
                        dev_gold[i], loss_weights);
      dev_value = dev_split.documents.empty()
                      ? epoch_loss
                      : sum / static_cast<double>(dev_split.documents.size());
      objective = dev_value;
    } else {
      dev_value = stat.evaluate(eval_on_split(model, dev_split, opts.zone, vocab));
      objective = -dev_value;  // maximize the metric
    }
    run.dev_trace.push_back(dev_value);
    run.epochs_trained = epoch;

    if (opts.verbose)
      std::cerr << "epoch " << epoch << " train_loss " << epoch_loss
                << " dev " << dev_value << "\n";

    if (objective < run.best_objective) {
      run.best_objective = objective;
      run.best_epoch = epoch;
      best_params = model.params().snapshot_values();
    } else {
      break;  // no patience
    }
  }

  model.params().restore_values(best_params);
  return run;
}

bool SearchSpace::contains(const neural::ModelConfig& cfg) const {
  auto has = [](const auto& grid, const auto& v) {
    for (const auto& g : grid)
      if (g == v) return true;
    return false;
  };
  return has(n_layers, cfg.n_layers) && has(hidden_units, cfg.hidden_units) &&
         has(dropout_hidden, cfg.dropout_hidden) &&
         has(dropout_word_emb, cfg.dropout_word_emb) &&
         has(batch_size, cfg.batch_size);
}

neural::ModelConfig sample_config(const SearchSpace& space,
                                  const neural::ModelConfig& base, Rng& rng) {
  auto pick = [&rng](const auto& grid) {
    return grid[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(grid.size()) - 1))];
  };
  neural::ModelConfig cfg = base;
  cfg.n_layers = pick(space.n_layers);
  cfg.hidden_units = pick(space.hidden_units);
  cfg.dropout_hidden = pick(space.dropout_hidden);
  cfg.dropout_word_emb = pick(space.dropout_word_emb);
  cfg.batch_size = pick(space.batch_size);
  return cfg;
}

Json Trial::to_json() const {
  Json j;
  j["config"] = config.to_json();
  j["dev_loss"] = dev_loss;
  j["metrics"] = metrics;
  j["wall_time"] = wall_time_s;
  return j;
}

neural::ModelConfig hyperparameter_search(
    const SearchSpace& space, int n_trials, uint64_t seed,
    const neural::ModelConfig& base,
    const std::function<double(const neural::ModelConfig&)>& objective,
    std::vector<Trial>* trials, const std::string& trial_log_path) {
  if (n_trials < 1) throw Error("hyperparameter_search: n_trials must be >= 1");
  Rng rng = Rng::stream(seed, 0x30);
  bool have_best = false;
  neural::ModelConfig best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_trials; ++i) {
    Trial trial;
    trial.config = sample_config(space, base, rng);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      trial.dev_loss = objective(trial.config);
    } catch (const std::exception& e) {
      trial.dev_loss = std::numeric_limits<double>::infinity();
      trial.metrics = Json{{"error", e.what()}};
    }
    trial.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (!trial_log_path.empty()) append_json_line(trial_log_path, trial.to_json());
    if (trials) trials->push_back(trial);
    if (std::isfinite(trial.dev_loss) && trial.dev_loss < best_loss) {
      best_loss = trial.dev_loss;
      best = trial.config;
      have_best = true;
    }
  }
  if (!have_best) throw Error("hyperparameter_search: all trials failed");
  return best;
}

Json multi_run_report(const std::vector<Json>& per_run_metrics) {
  if (per_run_metrics.empty()) throw Error("multi_run_report: no runs");
  std::map<std::string, std::vector<double>> series;
  for (const auto& run : per_run_metrics)
    for (const auto& item : run.items())
      if (item.value().is_number())
        series[item.key()].push_back(item.value().get<double>());
  Json aggregate = Json::object();
  for (const auto& [key, values] : series) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    aggregate[key] = Json{{"mean", mean}, {"std", std::sqrt(var)}};
  }
  Json j;
  j["runs"] = per_run_metrics;
  j["n_runs"] = per_run_metrics.size();
  j["aggregate"] = aggregate;
  return j;
}

// --- paired statistics and the randomization test -----------------------------

Statistic Statistic::parse(const std::string& name) {
  std::string low;
  for (char c : name)
    low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  Statistic s;
  if (low == "micro-f1" || low == "microf1" || low == "micro_f1") {
    s.kind = StatKind::MicroF1;
    return s;
  }
  const auto at = low.find('@');
  if (at == std::string::npos)
    throw ConfigError("unknown statistic '" + name + "'");
  const std::string head = low.substr(0, at);
  int k = 0;
  try {
    k = std::stoi(low.substr(at + 1));
  } catch (...) {
    throw ConfigError("bad statistic '" + name + "': expected <metric>@<k>");
  }
  if (k < 1) throw ConfigError("statistic '" + name + "': k must be >= 1");
  s.k = k;
  if (head == "p") s.kind = StatKind::PrecisionAtK;
  else if (head == "r") s.kind = StatKind::RecallAtK;
  else if (head == "rp") s.kind = StatKind::RPrecisionAtK;
  else if (head == "ndcg") s.kind = StatKind::NdcgAtK;
  else throw ConfigError("unknown statistic '" + name + "'");
  return s;
}

std::string Statistic::name() const {
  switch (kind) {
    case StatKind::PrecisionAtK: return "p@" + std::to_string(k);
    case StatKind::RecallAtK: return "r@" + std::to_string(k);
    case StatKind::RPrecisionAtK: return "rp@" + std::to_string(k);
    case StatKind::NdcgAtK: return "ndcg@" + std::to_string(k);
    case StatKind::MicroF1: return "micro-f1";
  }
  return "?";
}

Eigen::Vector4d Statistic::doc_contribution(const metrics::DocEval& doc) const {
  Eigen::Vector4d c = Eigen::Vector4d::Zero();
  switch (kind) {
    case StatKind::PrecisionAtK:
      c(0) = static_cast<double>(metrics::hits_at_k(doc, k)) / k;
      c(1) = 1.0;
      break;
    case StatKind::RecallAtK:
      if (!doc.gold.empty()) {
        c(0) = static_cast<double>(metrics::hits_at_k(doc, k)) /
               static_cast<double>(doc.gold.size());
        c(1) = 1.0;
      }
      break;
    case StatKind::RPrecisionAtK:
      if (!doc.gold.empty()) {
        c(0) = static_cast<double>(metrics::hits_at_k(doc, k)) /
               static_cast<double>(std::min<size_t>(static_cast<size_t>(k),
                                                    doc.gold.size()));
        c(1) = 1.0;
      }
      break;
    case StatKind::NdcgAtK:
      if (!doc.gold.empty()) {
        const int top = std::min<int>(k, static_cast<int>(doc.ranking.size()));
        double dcg = 0.0;
        for (int i = 0; i < top; ++i)
          if (doc.gold.count(doc.ranking[static_cast<size_t>(i)].first))
            dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        const int ideal = std::min<int>(k, static_cast<int>(doc.gold.size()));
        double idcg = 0.0;
        for (int i = 0; i < ideal; ++i)
          idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
        c(0) = dcg / idcg;
        c(1) = 1.0;
      }
      break;
    case StatKind::MicroF1: {
      long tp = 0, fp = 0, hit = 0;
      for (const auto& [label, score] : doc.ranking) {
        if (score < threshold) continue;
        if (doc.gold.count(label)) {
          ++tp;
          ++hit;
        } else {
          ++fp;
        }
      }
      c(0) = static_cast<double>(tp);
      c(1) = static_cast<double>(fp);
      c(2) = static_cast<double>(static_cast<long>(doc.gold.size()) - hit);
      break;
    }
  }
  return c;
}

double Statistic::finalize(const Eigen::Vector4d& total) const {
  if (kind == StatKind::MicroF1) {
    const double denom = 2.0 * total(0) + total(1) + total(2);
    return denom > 0 ? 2.0 * total(0) / denom : 0.0;
  }
  return total(1) > 0 ? total(0) / total(1) : 0.0;
}

double Statistic::evaluate(const metrics::EvalInstance& inst) const {
  Eigen::Vector4d total = Eigen::Vector4d::Zero();
  for (const auto& doc : inst.docs) total += doc_contribution(doc);
  return finalize(total);
}

RandomizationResult approximate_randomization_test(
    const metrics::EvalInstance& a, const metrics::EvalInstance& b,
    const Statistic& stat, int iterations, double swap_prob, uint64_t seed,
    int n_threads) {
  if (iterations < 1)
    throw Error("approximate_randomization_test: iterations must be >= 1");
  if (a.docs.size() != b.docs.size())
    throw Error("approximate_randomization_test: document count mismatch");
  const size_t T = a.docs.size();
  for (size_t t = 0; t < T; ++t) {
    if (a.docs[t].doc_id != b.docs[t].doc_id)
      throw Error("approximate_randomization_test: doc id mismatch at '" +
                  a.docs[t].doc_id + "' vs '" + b.docs[t].doc_id + "'");
    if (a.docs[t].gold != b.docs[t].gold)
      throw Error("approximate_randomization_test: gold mismatch for doc '" +
                  a.docs[t].doc_id + "'");
  }

  std::vector<Eigen::Vector4d> ca(T), cb(T);
  Eigen::Vector4d sum_a = Eigen::Vector4d::Zero();
  Eigen::Vector4d sum_b = Eigen::Vector4d::Zero();
  for (size_t t = 0; t < T; ++t) {
    ca[t] = stat.doc_contribution(a.docs[t]);
    cb[t] = stat.doc_contribution(b.docs[t]);
    sum_a += ca[t];
    sum_b += cb[t];
  }

  RandomizationResult result;
  result.iterations = iterations;
  result.stat_a = stat.finalize(sum_a);
  result.stat_b = stat.finalize(sum_b);
  result.observed_delta = std::abs(result.stat_a - result.stat_b);

  std::atomic<long> count{0};
  parallel_for(iterations, n_threads, [&](Index begin, Index end) {
    long local = 0;
    for (Index it = begin; it < end; ++it) {
      // Per-iteration stream: identical results for any thread count.
      Rng rng = Rng::stream(seed, static_cast<uint64_t>(it) + 1);
      Eigen::Vector4d pa = Eigen::Vector4d::Zero();
      Eigen::Vector4d pb = Eigen::Vector4d::Zero();
      for (size_t t = 0; t < T; ++t) {
        if (rng.bernoulli(swap_prob)) {
          pa += cb[t];
          pb += ca[t];
        } else {
          pa += ca[t];
          pb += cb[t];
        }
      }
      const double delta = std::abs(stat.finalize(pa) - stat.finalize(pb));
      if (delta >= result.observed_delta) ++local;
    }
    count += local;
  });

  result.p_value = (static_cast<double>(count.load()) + 1.0) /
                   (static_cast<double>(iterations) + 1.0);
  return result;
}

}  // namespace lmtc::training
