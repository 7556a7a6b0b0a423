// SPDX-License-Identifier: Apache-2.0
#include "lmtc/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "lmtc/baselines.hpp"
#include "lmtc/corpus.hpp"
#include "lmtc/embeddings.hpp"
#include "lmtc/error.hpp"
#include "lmtc/json_util.hpp"
#include "lmtc/metrics.hpp"
#include "lmtc/neural.hpp"
#include "lmtc/training.hpp"

namespace fs = std::filesystem;

namespace lmtc::cli {

namespace {

// --- experiment configuration -------------------------------------------------

struct ExperimentConfig {
  std::string corpus_dir;
  std::string labels_path;
  std::string embeddings_path;
  std::string out_dir;
  std::string architecture = "BIGRU-LWAN";
  std::string zone = "FULL";
  Json model_overrides = Json::object();
  double learning_rate = 1e-3;
  int max_epochs = 30;
  double grad_clip_norm = 5.0;
  std::string stopping = "dev_loss";
  double regularization = 1e-4;
  bool tune_regularization = false;
  bool mask_zero_shot_loss = false;  // drop zero-bucket labels from the loss
  std::vector<int> ks{1, 3, 5};
  long bucket_threshold = 50;
  std::string bucket_protocol = "filter-both";
  uint64_t seed = 1;
  int runs = 1;
  int search_trials = 0;

  static ExperimentConfig from_json_file(const std::string& path);
};

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  Json j = read_json_file(path);
  require_keys_subset(j,
                      {"corpus_dir", "labels", "embeddings", "out_dir",
                       "architecture", "zone", "model", "training",
                       "evaluation", "seed", "runs", "search_trials"},
                      "experiment config");
  ExperimentConfig cfg;
  auto need_string = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string())
      throw ConfigError(std::string("experiment config: missing string '") +
                        key + "'");
    return j[key].get<std::string>();
  };
  cfg.corpus_dir = need_string("corpus_dir");
  cfg.labels_path = need_string("labels");
  cfg.out_dir = need_string("out_dir");
  if (j.contains("embeddings")) cfg.embeddings_path = j["embeddings"].get<std::string>();
  if (j.contains("architecture")) cfg.architecture = j["architecture"].get<std::string>();
  if (j.contains("zone")) cfg.zone = j["zone"].get<std::string>();
  if (j.contains("model")) {
    cfg.model_overrides = j["model"];
    neural::ModelConfig::from_json(cfg.model_overrides);  // key/value validation
  }
  if (j.contains("training")) {
    const Json& t = j["training"];
    require_keys_subset(t,
                        {"learning_rate", "max_epochs", "grad_clip_norm",
                         "stopping", "regularization", "tune_regularization",
                         "mask_zero_shot_loss"},
                        "experiment config: training");
    if (t.contains("learning_rate")) cfg.learning_rate = t["learning_rate"].get<double>();
    if (t.contains("max_epochs")) cfg.max_epochs = t["max_epochs"].get<int>();
    if (t.contains("grad_clip_norm")) cfg.grad_clip_norm = t["grad_clip_norm"].get<double>();
    if (t.contains("stopping")) cfg.stopping = t["stopping"].get<std::string>();
    if (t.contains("regularization")) cfg.regularization = t["regularization"].get<double>();
    if (t.contains("tune_regularization"))
      cfg.tune_regularization = t["tune_regularization"].get<bool>();
    if (t.contains("mask_zero_shot_loss"))
      cfg.mask_zero_shot_loss = t["mask_zero_shot_loss"].get<bool>();
  }
  if (j.contains("evaluation")) {
    const Json& e = j["evaluation"];
    require_keys_subset(e, {"ks", "bucket_threshold", "bucket_protocol"},
                        "experiment config: evaluation");
    if (e.contains("ks")) cfg.ks = e["ks"].get<std::vector<int>>();
    if (e.contains("bucket_threshold"))
      cfg.bucket_threshold = e["bucket_threshold"].get<long>();
    if (e.contains("bucket_protocol"))
      cfg.bucket_protocol = e["bucket_protocol"].get<std::string>();
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("runs")) cfg.runs = j["runs"].get<int>();
  if (j.contains("search_trials")) cfg.search_trials = j["search_trials"].get<int>();
  if (cfg.runs < 1) throw ConfigError("experiment config: runs must be >= 1");
  for (int k : cfg.ks)
    if (k < 1) throw ConfigError("experiment config: every k must be >= 1");
  corpus::ZoneSpec::parse(cfg.zone);
  return cfg;
}

metrics::BucketProtocol parse_protocol(const std::string& name) {
  if (name == "filter-both" || name == "both")
    return metrics::BucketProtocol::FilterBoth;
  if (name == "filter-gold" || name == "gold-only")
    return metrics::BucketProtocol::FilterGoldOnly;
  throw ConfigError("unknown bucket protocol '" + name +
                    "' (expected filter-both or gold-only)");
}

// --- shared helpers -------------------------------------------------------------

struct LoadedCorpus {
  corpus::CorpusSplit train, dev, test;
  embeddings::LabelVocabulary labels;
};

corpus::CorpusSplit load_split_checked(const std::string& dir,
                                       const std::string& name) {
  corpus::LoadReport report;
  corpus::CorpusSplit split =
      corpus::load_corpus((fs::path(dir) / name).string(), name, &report);
  for (const auto& err : report.record_errors)
    std::cerr << "warning: " << err << "\n";
  return split;
}

LoadedCorpus load_experiment_corpus(const std::string& corpus_dir,
                                    const std::string& labels_path) {
  LoadedCorpus c;
  c.labels = embeddings::LabelVocabulary::from_json_file(labels_path);
  c.train = load_split_checked(corpus_dir, "train");
  c.dev = load_split_checked(corpus_dir, "dev");
  c.test = load_split_checked(corpus_dir, "test");
  std::vector<std::string> problems;
  for (const auto* split : {&c.train, &c.dev, &c.test})
    for (const auto& err : corpus::validate_labels(*split, c.labels))
      problems.push_back(split->name + ": " + err);
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "error: " << p << "\n";
    throw Error("corpus references unknown label ids (" +
                std::to_string(problems.size()) + " problems)");
  }
  return c;
}

metrics::EvalInstance evaluate_split(
    const std::function<Vector(const corpus::Document&)>& score_fn,
    const corpus::CorpusSplit& split, const embeddings::LabelVocabulary& labels) {
  std::vector<std::string> ids;
  std::vector<std::set<std::string>> gold;
  Matrix scores(static_cast<Index>(split.documents.size()), labels.size());
  for (size_t i = 0; i < split.documents.size(); ++i) {
    ids.push_back(split.documents[i].doc_id);
    gold.push_back(split.documents[i].gold_labels);
    scores.row(static_cast<Index>(i)) = score_fn(split.documents[i]).transpose();
  }
  return metrics::EvalInstance::from_scores(ids, scores, labels, gold);
}

void print_report(const metrics::MetricReport& report) {
  std::printf("%-10s", "bucket");
  for (int k : report.ks)
    std::printf("  %8s  %8s  %8s  %8s", ("P@" + std::to_string(k)).c_str(),
                ("R@" + std::to_string(k)).c_str(),
                ("RP@" + std::to_string(k)).c_str(),
                ("nDCG@" + std::to_string(k)).c_str());
  std::printf("\n");
  for (const auto& bucket : {"all", "frequent", "few", "zero"}) {
    if (!report.values.count(bucket)) continue;
    std::printf("%-10s", bucket);
    for (int k : report.ks)
      std::printf("  %8.4f  %8.4f  %8.4f  %8.4f", report.get(bucket, "p", k),
                  report.get(bucket, "r", k), report.get(bucket, "rp", k),
                  report.get(bucket, "ndcg", k));
    std::printf("\n");
  }
  std::printf("micro-F1 (all labels): %.4f\n", report.micro_f1_all);
}

// --- synth ---------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  Index docs = 200, labels = 20, vocab = 50;
  uint64_t seed = 1;
  Index dim = 24;
  long threshold = 50;
  Index n_frequent = -1, n_few = -1, n_zero = -1;
  Index freq_count = -1, few_count = -1, eval_count = 5;
  Index background = 6, articles = 2;
};

int cmd_synth(const SynthArgs& a) {
  corpus::SyntheticSpec spec;
  spec.n_docs = a.docs;
  spec.n_labels = a.labels;
  spec.vocab_size = a.vocab;
  spec.seed = a.seed;
  spec.bucket_threshold = a.threshold;
  spec.n_frequent = a.n_frequent;
  spec.n_few = a.n_few;
  spec.n_zero = a.n_zero;
  spec.frequent_train_count = a.freq_count;
  spec.few_train_count = a.few_count;
  spec.eval_count = a.eval_count;
  spec.background_tokens_per_zone = a.background;
  spec.articles_per_doc = a.articles;
  corpus::SyntheticCorpus synth = corpus::generate_synthetic_corpus(spec);
  synth.write(a.out);
  embeddings::EmbeddingMatrix emb =
      embeddings::random_embeddings(synth.all_tokens(), a.dim, a.seed);
  embeddings::write_word_vectors((fs::path(a.out) / "vectors.txt").string(), emb);
  std::printf("wrote synthetic corpus to %s (%zu/%zu/%zu docs, %lld labels)\n",
              a.out.c_str(), synth.train.documents.size(),
              synth.dev.documents.size(), synth.test.documents.size(),
              static_cast<long long>(synth.labels.size()));
  return 0;
}

// --- stats ---------------------------------------------------------------------

int cmd_stats(const std::string& corpus_dir, const std::string& labels_path,
              long threshold, const std::string& json_out) {
  Json out;
  std::vector<corpus::CorpusSplit> splits;
  for (const char* name : {"train", "dev", "test"}) {
    const std::string dir = (fs::path(corpus_dir) / name).string();
    if (fs::exists(dir)) splits.push_back(load_split_checked(corpus_dir, name));
  }
  if (splits.empty())
    splits.push_back(corpus::load_corpus(corpus_dir, "all", nullptr));

  long total_docs = 0;
  double total_words = 0.0, total_labels = 0.0;
  const corpus::ZoneSpec full;
  Json split_stats = Json::object();
  std::map<long, long> labels_per_doc;
  for (const auto& split : splits) {
    double words = 0.0, labels = 0.0;
    for (const auto& doc : split.documents) {
      const auto n = static_cast<double>(corpus::extract_zone(doc, full).size());
      words += n;
      labels += static_cast<double>(doc.gold_labels.size());
      ++labels_per_doc[static_cast<long>(doc.gold_labels.size())];
    }
    const auto n_docs = static_cast<long>(split.documents.size());
    Json s;
    s["documents"] = n_docs;
    s["mean_words"] = n_docs ? words / n_docs : 0.0;
    s["mean_labels"] = n_docs ? labels / n_docs : 0.0;
    split_stats[split.name] = s;
    total_docs += n_docs;
    total_words += words;
    total_labels += labels;
  }
  if (total_docs == 0) throw Error("corpus at " + corpus_dir + " holds no documents");
  out["splits"] = split_stats;
  out["total_documents"] = total_docs;
  out["mean_words"] = total_words / static_cast<double>(total_docs);
  out["mean_labels"] = total_labels / static_cast<double>(total_docs);

  // Cumulative labels-per-document distribution.
  Json cumulative = Json::array();
  long acc = 0;
  for (const auto& [n_labels, n_docs] : labels_per_doc) {
    acc += n_docs;
    cumulative.push_back(Json{{"labels", n_labels},
                              {"documents", n_docs},
                              {"fraction_le", static_cast<double>(acc) /
                                                  static_cast<double>(total_docs)}});
  }
  out["labels_per_document"] = cumulative;

  if (!labels_path.empty()) {
    auto vocab = embeddings::LabelVocabulary::from_json_file(labels_path);
    const corpus::CorpusSplit* train = nullptr;
    for (const auto& split : splits)
      if (split.name == "train") train = &split;
    if (train) {
      auto buckets = corpus::bucket_labels(*train, vocab, threshold);
      out["bucket_sizes"] = Json{{"frequent", buckets.frequent.size()},
                                 {"few_shot", buckets.few_shot.size()},
                                 {"zero_shot", buckets.zero_shot.size()}};
      std::map<long, long> histogram;
      std::map<std::string, long> counts;
      for (const auto& doc : train->documents)
        for (const auto& label : doc.gold_labels) ++counts[label];
      for (Index l = 0; l < vocab.size(); ++l) {
        auto it = counts.find(vocab.id(l));
        ++histogram[it == counts.end() ? 0 : it->second];
      }
      Json hist = Json::object();
      for (const auto& [count, n_labels] : histogram)
        hist[std::to_string(count)] = n_labels;
      out["label_train_frequency_histogram"] = hist;
    }
  }

  std::printf("%s\n", out.dump(2).c_str());
  if (!json_out.empty()) write_json_file(json_out, out);
  return 0;
}

// --- prepare -------------------------------------------------------------------

int cmd_prepare(const std::string& corpus_dir, const std::string& labels_path,
                const std::string& out_dir, long threshold) {
  LoadedCorpus c = load_experiment_corpus(corpus_dir, labels_path);
  if (c.train.documents.empty()) throw Error("training split is empty");
  auto buckets = corpus::bucket_labels(c.train, c.labels, threshold);
  write_json_file((fs::path(out_dir) / "buckets.json").string(), buckets.to_json());
  metrics::write_gold((fs::path(out_dir) / "gold_train.json").string(), c.train);
  metrics::write_gold((fs::path(out_dir) / "gold_dev.json").string(), c.dev);
  metrics::write_gold((fs::path(out_dir) / "gold_test.json").string(), c.test);
  Json summary;
  summary["documents"] = Json{{"train", c.train.documents.size()},
                              {"dev", c.dev.documents.size()},
                              {"test", c.test.documents.size()}};
  summary["labels"] = c.labels.size();
  summary["bucket_sizes"] = Json{{"frequent", buckets.frequent.size()},
                                 {"few_shot", buckets.few_shot.size()},
                                 {"zero_shot", buckets.zero_shot.size()}};
  summary["bucket_threshold"] = threshold;
  write_json_file((fs::path(out_dir) / "summary.json").string(), summary);
  std::printf("%s\n", summary.dump(2).c_str());
  return 0;
}

// --- train ---------------------------------------------------------------------

neural::ModelConfig model_config_from(const ExperimentConfig& cfg, uint64_t seed) {
  neural::ModelConfig mc = neural::ModelConfig::from_json(cfg.model_overrides);
  mc.architecture = cfg.architecture;
  mc.seed = seed;
  mc.validate();
  return mc;
}

bool is_baseline(const std::string& architecture) {
  std::string up;
  for (char c : architecture)
    up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return up == "EXACT-MATCH" || up == "LOGISTIC-REGRESSION";
}

int cmd_train(const std::string& config_path, uint64_t seed_override,
              const std::string& out_override) {
  ExperimentConfig cfg = ExperimentConfig::from_json_file(config_path);
  if (seed_override) cfg.seed = seed_override;
  if (!out_override.empty()) cfg.out_dir = out_override;

  LoadedCorpus c = load_experiment_corpus(cfg.corpus_dir, cfg.labels_path);
  if (c.train.documents.empty()) throw Error("training split is empty");
  auto buckets = corpus::bucket_labels(c.train, c.labels, cfg.bucket_threshold);
  write_json_file((fs::path(cfg.out_dir) / "buckets.json").string(),
                  buckets.to_json());
  metrics::write_gold((fs::path(cfg.out_dir) / "gold_test.json").string(), c.test);
  const auto protocol = parse_protocol(cfg.bucket_protocol);
  const corpus::ZoneSpec zone = corpus::ZoneSpec::parse(cfg.zone);

  std::vector<Json> run_metrics;
  Json runs_json = Json::array();

  if (is_baseline(cfg.architecture)) {
    std::string up;
    for (char ch : cfg.architecture)
      up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    metrics::EvalInstance inst;
    if (up == "EXACT-MATCH") {
      inst = evaluate_split(
          [&](const corpus::Document& d) {
            Vector scores = Vector::Zero(c.labels.size());
            for (const auto& label : baselines::exact_match_predict(d, c.labels))
              scores(c.labels.index_of(label)) = 1.0;
            return scores;
          },
          c.test, c.labels);
    } else {
      baselines::TfidfModel tfidf = baselines::fit_tfidf(c.train);
      auto train_x = tfidf.transform(c.train);
      auto dev_x = tfidf.transform(c.dev);
      auto test_x = tfidf.transform(c.test);
      Matrix train_gold = corpus::gold_matrix(c.train, c.labels);
      baselines::LogisticOptions opts;
      opts.reg = cfg.regularization;
      opts.n_threads = 0;
      if (cfg.tune_regularization && !c.dev.documents.empty())
        opts.reg = baselines::select_regularization(
            train_x, train_gold, dev_x, corpus::gold_matrix(c.dev, c.labels),
            c.labels, {1e-5, 1e-4, 1e-3, 1e-2}, opts);
      baselines::LogisticModel lr =
          baselines::train_logistic(train_x, train_gold, c.labels, opts);
      for (const auto& label : lr.flagged)
        std::cerr << "note: label '" << label
                  << "' has no training positives; constant low score\n";
      Matrix scores = lr.predict_scores(test_x);
      std::vector<std::string> ids;
      std::vector<std::set<std::string>> gold;
      for (const auto& doc : c.test.documents) {
        ids.push_back(doc.doc_id);
        gold.push_back(doc.gold_labels);
      }
      inst = metrics::EvalInstance::from_scores(ids, scores, c.labels, gold);
    }
    const std::string run_dir = (fs::path(cfg.out_dir) / "run_0").string();
    metrics::write_predictions(
        (fs::path(run_dir) / "predictions_test.jsonl").string(), inst);
    auto report = metrics::bucket_report(inst, buckets, cfg.ks, protocol);
    write_json_file((fs::path(run_dir) / "metrics.json").string(),
                    report.to_json());
    print_report(report);
    run_metrics.push_back(metrics::flatten(report));
  } else {
    neural::parse_architecture(cfg.architecture);  // exit 2 on unknown ids
    if (cfg.embeddings_path.empty())
      throw ConfigError("experiment config: neural architectures need 'embeddings'");
    embeddings::EmbeddingMatrix emb =
        embeddings::load_word_vectors(cfg.embeddings_path);

    neural::ModelConfig base = model_config_from(cfg, cfg.seed);
    training::TrainOptions topts;
    topts.learning_rate = cfg.learning_rate;
    topts.max_epochs = cfg.max_epochs;
    topts.grad_clip_norm = cfg.grad_clip_norm;
    topts.stopping_metric = cfg.stopping;
    topts.zone = zone;
    if (cfg.mask_zero_shot_loss) {
      topts.loss_label_weights = Vector::Ones(c.labels.size());
      for (const auto& id : buckets.zero_shot)
        topts.loss_label_weights(c.labels.index_of(id)) = 0.0;
    }

    if (cfg.search_trials > 0) {
      training::SearchSpace space;
      base = training::hyperparameter_search(
          space, cfg.search_trials, cfg.seed, base,
          [&](const neural::ModelConfig& trial_cfg) {
            neural::Model model(trial_cfg, &emb, &c.labels);
            training::TrainRun run = training::train(model, c.train, c.dev, topts);
            return run.best_objective;
          },
          nullptr, (fs::path(cfg.out_dir) / "trials.jsonl").string());
    }

    for (int r = 0; r < cfg.runs; ++r) {
      neural::ModelConfig run_cfg = base;
      run_cfg.seed = cfg.seed + static_cast<uint64_t>(r);
      neural::Model model(run_cfg, &emb, &c.labels);
      training::TrainRun run = training::train(model, c.train, c.dev, topts);
      const std::string run_dir =
          (fs::path(cfg.out_dir) / ("run_" + std::to_string(r))).string();
      run.checkpoint_path = (fs::path(run_dir) / "checkpoint.bin").string();
      model.save(run.checkpoint_path);
      write_json_file((fs::path(run_dir) / "train_run.json").string(),
                      run.to_json());
      metrics::EvalInstance inst = evaluate_split(
          [&](const corpus::Document& d) { return model.predict(d, zone); },
          c.test, c.labels);
      metrics::write_predictions(
          (fs::path(run_dir) / "predictions_test.jsonl").string(), inst);
      auto report = metrics::bucket_report(inst, buckets, cfg.ks, protocol);
      write_json_file((fs::path(run_dir) / "metrics.json").string(),
                      report.to_json());
      std::printf("run %d: %d epochs, best dev %.6f\n", r, run.epochs_trained,
                  run.best_objective);
      print_report(report);
      run_metrics.push_back(metrics::flatten(report));
      runs_json.push_back(run.to_json());
    }
  }

  Json report;
  report["config_file"] = config_path;
  report["architecture"] = cfg.architecture;
  report["zone"] = cfg.zone;
  report["seed"] = cfg.seed;
  report["aggregate"] = training::multi_run_report(run_metrics);
  if (!runs_json.empty()) report["train_runs"] = runs_json;
  write_json_file((fs::path(cfg.out_dir) / "report.json").string(), report);
  return 0;
}

// --- evaluate ------------------------------------------------------------------

int cmd_evaluate(const std::string& predictions, const std::string& gold,
                 const std::string& buckets_path, std::vector<int> ks,
                 const std::string& protocol_name, const std::string& out) {
  if (ks.empty()) ks = {1, 5};
  for (int k : ks)
    if (k < 1) throw ConfigError("every k must be >= 1");
  metrics::EvalInstance inst = metrics::read_eval_instance(predictions, gold);
  corpus::FrequencyBuckets buckets;
  if (!buckets_path.empty()) {
    buckets = corpus::FrequencyBuckets::from_json_file(buckets_path);
  } else {
    // Single implicit bucket: everything counts as frequent.
    for (const auto& doc : inst.docs) {
      for (const auto& label : doc.gold) buckets.frequent.insert(label);
      for (const auto& [label, score] : doc.ranking) buckets.frequent.insert(label);
    }
  }
  auto report =
      metrics::bucket_report(inst, buckets, ks, parse_protocol(protocol_name));
  print_report(report);
  if (!out.empty()) write_json_file(out, report.to_json());
  return 0;
}

// --- compare -------------------------------------------------------------------

int cmd_compare(const std::string& a_path, const std::string& b_path,
                const std::string& gold, const std::string& statistic,
                int iterations, double swap_prob, uint64_t seed, int threads,
                const std::string& out) {
  metrics::EvalInstance a = metrics::read_eval_instance(a_path, gold);
  metrics::EvalInstance b = metrics::read_eval_instance(b_path, gold);
  training::Statistic stat = training::Statistic::parse(statistic);
  auto result = training::approximate_randomization_test(
      a, b, stat, iterations, swap_prob, seed, threads);
  std::printf("statistic %s: A=%.6f B=%.6f |delta|=%.6f p=%.6f (%d iterations)\n",
              stat.name().c_str(), result.stat_a, result.stat_b,
              result.observed_delta, result.p_value, result.iterations);
  if (!out.empty()) {
    Json j;
    j["statistic"] = stat.name();
    j["stat_a"] = result.stat_a;
    j["stat_b"] = result.stat_b;
    j["observed_delta"] = result.observed_delta;
    j["p_value"] = result.p_value;
    j["iterations"] = result.iterations;
    j["swap_prob"] = swap_prob;
    j["seed"] = seed;
    write_json_file(out, j);
  }
  return 0;
}

// --- ablate-zones ---------------------------------------------------------------

int cmd_ablate_zones(const std::string& config_path,
                     const std::vector<std::string>& zones,
                     const std::string& split_name, const std::string& out) {
  if (zones.empty()) throw ConfigError("ablate-zones: no zones given");
  ExperimentConfig cfg = ExperimentConfig::from_json_file(config_path);
  if (is_baseline(cfg.architecture))
    throw ConfigError("ablate-zones applies to the neural architectures");
  LoadedCorpus c = load_experiment_corpus(cfg.corpus_dir, cfg.labels_path);
  auto buckets = corpus::bucket_labels(c.train, c.labels, cfg.bucket_threshold);
  embeddings::EmbeddingMatrix emb =
      embeddings::load_word_vectors(cfg.embeddings_path);
  const corpus::CorpusSplit& eval_split =
      split_name == "test" ? c.test : c.dev;
  const auto protocol = parse_protocol(cfg.bucket_protocol);

  Json rows = Json::array();
  std::printf("%-10s  %10s  %8s  %8s  %8s\n", "zone", "mu_words", "RP@5",
              "nDCG@5", "microF1");
  for (const auto& zone_name : zones) {
    const corpus::ZoneSpec zone = corpus::ZoneSpec::parse(zone_name);
    double mu_words = 0.0;
    for (const auto& doc : eval_split.documents)
      mu_words += static_cast<double>(corpus::extract_zone(doc, zone).size());
    if (!eval_split.documents.empty())
      mu_words /= static_cast<double>(eval_split.documents.size());

    neural::ModelConfig run_cfg = model_config_from(cfg, cfg.seed);
    neural::Model model(run_cfg, &emb, &c.labels);
    training::TrainOptions topts;
    topts.learning_rate = cfg.learning_rate;
    topts.max_epochs = cfg.max_epochs;
    topts.grad_clip_norm = cfg.grad_clip_norm;
    topts.stopping_metric = cfg.stopping;
    topts.zone = zone;
    training::train(model, c.train, c.dev, topts);
    metrics::EvalInstance inst = evaluate_split(
        [&](const corpus::Document& d) { return model.predict(d, zone); },
        eval_split, c.labels);
    std::vector<int> ks = {5};
    auto report = metrics::bucket_report(inst, buckets, ks, protocol);
    const double rp5 = report.get("all", "rp", 5);
    const double ndcg5 = report.get("all", "ndcg", 5);
    std::printf("%-10s  %10.1f  %8.4f  %8.4f  %8.4f\n", zone.str().c_str(),
                mu_words, rp5, ndcg5, report.micro_f1_all);
    Json row;
    row["zone"] = zone.str();
    row["mu_words"] = mu_words;
    row["rp@5"] = rp5;
    row["ndcg@5"] = ndcg5;
    row["micro_f1"] = report.micro_f1_all;
    rows.push_back(row);
  }
  if (!out.empty()) write_json_file(out, Json{{"split", split_name},
                                              {"rows", rows}});
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Desk-scale laboratory for large-scale multi-label text "
               "classification"};
  app.require_subcommand(1);

  // synth
  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--docs", synth.docs, "Total documents");
  synth_cmd->add_option("--labels", synth.labels, "Number of labels");
  synth_cmd->add_option("--vocab", synth.vocab, "Background vocabulary size");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--dim", synth.dim, "Word vector dimension");
  synth_cmd->add_option("--threshold", synth.threshold, "Bucket threshold");
  synth_cmd->add_option("--frequent", synth.n_frequent, "Frequent label count");
  synth_cmd->add_option("--few", synth.n_few, "Few-shot label count");
  synth_cmd->add_option("--zero", synth.n_zero, "Zero-shot label count");
  synth_cmd->add_option("--freq-count", synth.freq_count,
                        "Training docs per frequent label");
  synth_cmd->add_option("--few-count", synth.few_count,
                        "Training docs per few-shot label");
  synth_cmd->add_option("--eval-count", synth.eval_count,
                        "Dev/test docs per label");
  synth_cmd->add_option("--background", synth.background,
                        "Background tokens per zone");
  synth_cmd->add_option("--articles", synth.articles, "Articles per document");

  // stats
  std::string stats_corpus, stats_labels, stats_json;
  long stats_threshold = 50;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics");
  stats_cmd->add_option("--corpus", stats_corpus, "Corpus directory")->required();
  stats_cmd->add_option("--labels", stats_labels, "Label vocabulary JSON");
  stats_cmd->add_option("--threshold", stats_threshold, "Bucket threshold");
  stats_cmd->add_option("--json", stats_json, "Write statistics JSON here");

  // prepare
  std::string prep_corpus, prep_labels, prep_out;
  long prep_threshold = 50;
  auto* prep_cmd =
      app.add_subcommand("prepare", "Validate corpus, write buckets and gold files");
  prep_cmd->add_option("--corpus", prep_corpus, "Corpus directory")->required();
  prep_cmd->add_option("--labels", prep_labels, "Label vocabulary JSON")->required();
  prep_cmd->add_option("--out", prep_out, "Output directory")->required();
  prep_cmd->add_option("--threshold", prep_threshold, "Bucket threshold");

  // train
  std::string train_config, train_out;
  uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train and evaluate a system");
  train_cmd->add_option("--config", train_config, "Experiment config JSON")
      ->required();
  train_cmd->add_option("--seed", train_seed, "Override the config seed");
  train_cmd->add_option("--out", train_out, "Override the output directory");

  // evaluate
  std::string eval_pred, eval_gold, eval_buckets, eval_out;
  std::string eval_protocol = "filter-both";
  std::vector<int> eval_ks;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a prediction file");
  eval_cmd->add_option("--predictions", eval_pred, "Predictions JSONL")->required();
  eval_cmd->add_option("--gold", eval_gold, "Gold JSON (doc_id -> labels)")
      ->required();
  eval_cmd->add_option("--buckets", eval_buckets, "Frequency buckets JSON");
  eval_cmd->add_option("--k", eval_ks, "Cutoffs (repeat or comma-separate)")
      ->delimiter(',');
  eval_cmd->add_option("--bucket-protocol", eval_protocol,
                       "filter-both | gold-only");
  eval_cmd->add_option("--out", eval_out, "Write the report JSON here");

  // compare
  std::string cmp_a, cmp_b, cmp_gold, cmp_stat = "rp@5", cmp_out;
  int cmp_iters = 10000, cmp_threads = 1;
  double cmp_swap = 0.5;
  uint64_t cmp_seed = 1;
  auto* cmp_cmd =
      app.add_subcommand("compare", "Approximate randomization significance test");
  cmp_cmd->add_option("--a", cmp_a, "Predictions A (JSONL)")->required();
  cmp_cmd->add_option("--b", cmp_b, "Predictions B (JSONL)")->required();
  cmp_cmd->add_option("--gold", cmp_gold, "Gold JSON")->required();
  cmp_cmd->add_option("--statistic", cmp_stat, "p@K, r@K, rp@K, ndcg@K, micro-f1");
  cmp_cmd->add_option("--iterations", cmp_iters, "Randomization iterations");
  cmp_cmd->add_option("--swap-prob", cmp_swap, "Per-document swap probability");
  cmp_cmd->add_option("--seed", cmp_seed, "Random seed");
  cmp_cmd->add_option("--threads", cmp_threads, "Worker threads (0 = auto)");
  cmp_cmd->add_option("--out", cmp_out, "Write the result JSON here");

  // ablate-zones
  std::string abl_config, abl_split = "dev", abl_out;
  std::vector<std::string> abl_zones;
  auto* abl_cmd = app.add_subcommand("ablate-zones",
                                     "Train one model per document zone");
  abl_cmd->add_option("--config", abl_config, "Experiment config JSON")->required();
  abl_cmd->add_option("--zones", abl_zones, "Zones (e.g. H,R,H+R,MB,FULL)")
      ->required()
      ->delimiter(',');
  abl_cmd->add_option("--split", abl_split, "Evaluation split (dev or test)");
  abl_cmd->add_option("--out", abl_out, "Write the table JSON here");

  try {
    app.parse(argc, argv);
    if (*synth_cmd) return cmd_synth(synth);
    if (*stats_cmd)
      return cmd_stats(stats_corpus, stats_labels, stats_threshold, stats_json);
    if (*prep_cmd)
      return cmd_prepare(prep_corpus, prep_labels, prep_out, prep_threshold);
    if (*train_cmd) return cmd_train(train_config, train_seed, train_out);
    if (*eval_cmd)
      return cmd_evaluate(eval_pred, eval_gold, eval_buckets, eval_ks,
                          eval_protocol, eval_out);
    if (*cmp_cmd)
      return cmd_compare(cmp_a, cmp_b, cmp_gold, cmp_stat, cmp_iters, cmp_swap,
                         cmp_seed, cmp_threads, cmp_out);
    if (*abl_cmd) return cmd_ablate_zones(abl_config, abl_zones, abl_split, abl_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("lmtc");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace lmtc::cli
