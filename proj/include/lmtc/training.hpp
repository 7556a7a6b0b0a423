// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lmtc/autodiff.hpp"
#include "lmtc/corpus.hpp"
#include "lmtc/metrics.hpp"
#include "lmtc/neural.hpp"
#include "lmtc/types.hpp"

namespace lmtc::training {

// Mean over labels of -[g log p + (1-g) log(1-p)], probabilities clamped
// away from 0 and 1. The weighted forms average over the labels with
// nonzero weight; zero-shot training uses them to restrict the loss to the
// seen labels.
double bce_loss(const Vector& probs, const Vector& gold);
double bce_loss(const Vector& probs, const Vector& gold, const Vector& weights);
autodiff::Var bce_loss_var(autodiff::Tape& t, autodiff::Var probs,
                           const Vector& gold);
autodiff::Var bce_loss_var(autodiff::Tape& t, autodiff::Var probs,
                           const Vector& gold, const Vector& weights);

class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(autodiff::ParamStore& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Matrix> m_, v_;
};

struct TrainOptions {
  double learning_rate = 1e-3;
  int max_epochs = 30;
  double grad_clip_norm = 5.0;
  // "dev_loss" or a ranking metric name ("rp@5", ...) maximized on dev.
  std::string stopping_metric = "dev_loss";
  corpus::ZoneSpec zone;
  // Per-label loss weights (size L); empty means uniform. Zero-shot training
  // sets the unseen labels to zero so they receive no gradient at all.
  Vector loss_label_weights;
  bool verbose = false;
  // Test seam: replaces the dev objective; called once per epoch, in order.
  std::function<double(int epoch)> dev_objective_override;
};

struct TrainRun {
  neural::ModelConfig config;
  uint64_t seed = 0;
  std::vector<double> train_losses;  // one per epoch
  std::vector<double> dev_trace;     // one per epoch (loss or metric)
  int epochs_trained = 0;
  int best_epoch = 0;  // 1-based
  double best_objective = 0.0;
  std::string checkpoint_path;

  Json to_json() const;
};

// Early stopping with no patience: the first epoch whose dev objective fails
// to improve ends training; the best epoch's parameters are restored into
// the model. Non-finite losses abort with a diagnostic. Deterministic given
// config seed.
TrainRun train(neural::Model& model, const corpus::CorpusSplit& train_split,
               const corpus::CorpusSplit& dev_split,
               const TrainOptions& opts = {});

struct SearchSpace {
  std::vector<int> n_layers{1, 2};
  std::vector<Index> hidden_units{200, 300, 400};
  std::vector<double> dropout_hidden{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> dropout_word_emb{0.00, 0.01, 0.02};
  std::vector<int> batch_size{8, 12, 16};

  bool contains(const neural::ModelConfig& cfg) const;
};

neural::ModelConfig sample_config(const SearchSpace& space,
                                  const neural::ModelConfig& base, Rng& rng);

struct Trial {
  neural::ModelConfig config;
  double dev_loss = 0.0;
  Json metrics;
  double wall_time_s = 0.0;

  Json to_json() const;
};

// Random search over the grids; returns the argmin-dev-loss config among the
// evaluated trials. Failed trials are logged and skipped; all failing is
// fatal. When trial_log_path is set, one JSON line is appended per trial.
neural::ModelConfig hyperparameter_search(
    const SearchSpace& space, int n_trials, uint64_t seed,
    const neural::ModelConfig& base,
    const std::function<double(const neural::ModelConfig&)>& objective,
    std::vector<Trial>* trials = nullptr,
    const std::string& trial_log_path = {});

// Mean and (population) standard deviation per metric over runs; the per-run
// values are retained verbatim.
Json multi_run_report(const std::vector<Json>& per_run_metrics);

enum class StatKind { PrecisionAtK, RecallAtK, RPrecisionAtK, NdcgAtK, MicroF1 };

// A paired-comparison statistic with per-document sufficient statistics, so
// swapped systems can be re-scored without touching the rankings.
struct Statistic {
  StatKind kind = StatKind::RPrecisionAtK;
  int k = 5;
  double threshold = 0.5;

  static Statistic parse(const std::string& name);  // "p@5", "rp@5", "micro-f1"...
  std::string name() const;

  Eigen::Vector4d doc_contribution(const metrics::DocEval& doc) const;
  double finalize(const Eigen::Vector4d& total) const;
  double evaluate(const metrics::EvalInstance& inst) const;
};

struct RandomizationResult {
  double p_value = 1.0;
  double observed_delta = 0.0;
  double stat_a = 0.0;
  double stat_b = 0.0;
  int iterations = 0;
};

// Two-tailed approximate randomization test: each iteration swaps the two
// systems' per-document responses with probability swap_prob and counts
// |delta| >= |observed|; p = (count + 1) / (iterations + 1). Per-iteration
// randomness is derived from (seed, iteration), so the result is identical
// for any thread count. Requires identical doc ids and gold on both sides.
RandomizationResult approximate_randomization_test(
    const metrics::EvalInstance& a, const metrics::EvalInstance& b,
    const Statistic& stat, int iterations = 10000, double swap_prob = 0.5,
    uint64_t seed = 1, int n_threads = 1);

}  // namespace lmtc::training
