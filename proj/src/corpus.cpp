// SPDX-License-Identifier: Apache-2.0
#include "lmtc/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <unordered_set>

#include "lmtc/error.hpp"
#include "lmtc/rng.hpp"
#include "lmtc/tokenize.hpp"

namespace fs = std::filesystem;

namespace lmtc::corpus {

bool Document::all_zones_empty() const {
  if (!header.empty() || !recitals.empty() || !attachments.empty()) return false;
  for (const auto& article : main_body)
    if (!article.empty()) return false;
  return true;
}

Json Document::to_json() const {
  Json j;
  j["celex_id"] = doc_id;
  j["header"] = header;
  j["recitals"] = recitals;
  j["main_body"] = main_body;
  j["attachments"] = attachments;
  j["concepts"] = std::vector<std::string>(gold_labels.begin(), gold_labels.end());
  return j;
}

Document Document::from_json(const Json& j) {
  if (!j.is_object()) throw Error("document record must be a JSON object");
  Document doc;
  if (!j.contains("celex_id") || !j["celex_id"].is_string() ||
      j["celex_id"].get<std::string>().empty())
    throw Error("record missing celex_id");
  doc.doc_id = j["celex_id"].get<std::string>();
  if (!j.contains("concepts") || !j["concepts"].is_array())
    throw Error("record '" + doc.doc_id + "' missing concepts");
  for (const auto& c : j["concepts"]) {
    if (!c.is_string())
      throw Error("record '" + doc.doc_id + "': concepts must be strings");
    doc.gold_labels.insert(c.get<std::string>());
  }
  auto text_field = [&](const char* key) -> std::string {
    if (!j.contains(key) || j[key].is_null()) return {};
    if (!j[key].is_string())
      throw Error("record '" + doc.doc_id + "': " + key + " must be a string");
    return j[key].get<std::string>();
  };
  doc.header = text_field("header");
  doc.recitals = text_field("recitals");
  doc.attachments = text_field("attachments");
  if (j.contains("main_body") && !j["main_body"].is_null()) {
    if (!j["main_body"].is_array())
      throw Error("record '" + doc.doc_id + "': main_body must be an array");
    for (const auto& a : j["main_body"]) {
      if (!a.is_string())
        throw Error("record '" + doc.doc_id + "': main_body entries must be strings");
      doc.main_body.push_back(a.get<std::string>());
    }
  }
  if (doc.all_zones_empty())
    throw Error("record '" + doc.doc_id + "': every zone is empty");
  return doc;
}

const Document* CorpusSplit::find(const std::string& doc_id) const {
  for (const auto& d : documents)
    if (d.doc_id == doc_id) return &d;
  return nullptr;
}

int FrequencyBuckets::bucket_of(const std::string& label) const {
  if (frequent.count(label)) return 0;
  if (few_shot.count(label)) return 1;
  if (zero_shot.count(label)) return 2;
  return -1;
}

Json FrequencyBuckets::to_json() const {
  Json j;
  j["frequent"] = std::vector<std::string>(frequent.begin(), frequent.end());
  j["few_shot"] = std::vector<std::string>(few_shot.begin(), few_shot.end());
  j["zero_shot"] = std::vector<std::string>(zero_shot.begin(), zero_shot.end());
  return j;
}

FrequencyBuckets FrequencyBuckets::from_json(const Json& j) {
  FrequencyBuckets b;
  auto read = [&](const char* key, std::set<std::string>& out) {
    if (!j.contains(key) || !j[key].is_array())
      throw Error(std::string("buckets file: missing array '") + key + "'");
    for (const auto& v : j[key]) out.insert(v.get<std::string>());
  };
  read("frequent", b.frequent);
  read("few_shot", b.few_shot);
  read("zero_shot", b.zero_shot);
  return b;
}

FrequencyBuckets FrequencyBuckets::from_json_file(const std::string& path) {
  return from_json(read_json_file(path));
}

ZoneSpec ZoneSpec::parse(const std::string& text) {
  std::string up;
  for (char c : text) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  ZoneSpec spec;
  if (up == "H") spec.mode = ZoneMode::Header;
  else if (up == "R") spec.mode = ZoneMode::Recitals;
  else if (up == "H+R") spec.mode = ZoneMode::HeaderRecitals;
  else if (up == "MB") spec.mode = ZoneMode::MainBody;
  else if (up == "FULL") spec.mode = ZoneMode::Full;
  else if (up.rfind("FIRST_", 0) == 0) {
    spec.mode = ZoneMode::FirstK;
    try {
      spec.k = std::stol(up.substr(6));
    } catch (...) {
      throw ConfigError("bad zone '" + text + "': expected FIRST_<k>");
    }
    if (spec.k < 1) throw ConfigError("zone FIRST_<k> requires k >= 1");
  } else {
    throw ConfigError("unknown zone '" + text +
                      "' (expected H, R, H+R, MB, FULL or FIRST_<k>)");
  }
  return spec;
}

std::string ZoneSpec::str() const {
  switch (mode) {
    case ZoneMode::Header: return "H";
    case ZoneMode::Recitals: return "R";
    case ZoneMode::HeaderRecitals: return "H+R";
    case ZoneMode::MainBody: return "MB";
    case ZoneMode::Full: return "FULL";
    case ZoneMode::FirstK: return "FIRST_" + std::to_string(k);
  }
  return "FULL";
}

namespace {

void add_record(CorpusSplit& split, std::unordered_set<std::string>& seen,
                const Json& j, const std::string& position, LoadReport* report) {
  try {
    Document doc = Document::from_json(j);
    if (!seen.insert(doc.doc_id).second)
      throw Error("duplicate doc_id '" + doc.doc_id + "'");
    split.documents.push_back(std::move(doc));
  } catch (const Error& e) {
    if (report) report->record_errors.push_back(position + ": " + e.what());
  }
}

}  // namespace

CorpusSplit load_corpus(const std::string& path, const std::string& split_name,
                        LoadReport* report) {
  if (!fs::exists(path)) throw Error("corpus path not found: " + path);
  CorpusSplit split;
  split.name = split_name;
  std::unordered_set<std::string> seen;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      Json j;
      try {
        j = read_json_file(file.string());
      } catch (const Error& e) {
        if (report) report->record_errors.push_back(e.what());
        continue;
      }
      add_record(split, seen, j, file.string(), report);
    }
  } else {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string position = path + ":" + std::to_string(lineno);
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::parse_error& e) {
        if (report) report->record_errors.push_back(position + ": " + e.what());
        continue;
      }
      add_record(split, seen, j, position, report);
    }
  }
  return split;
}

void write_corpus_dir(const std::string& dir, const CorpusSplit& split) {
  fs::create_directories(dir);
  for (const auto& doc : split.documents)
    write_json_file((fs::path(dir) / (doc.doc_id + ".json")).string(),
                    doc.to_json());
}

void write_corpus_jsonl(const std::string& path, const CorpusSplit& split) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& doc : split.documents) out << doc.to_json().dump() << '\n';
}

std::vector<std::string> validate_labels(const CorpusSplit& split,
                                         const embeddings::LabelVocabulary& vocab) {
  std::vector<std::string> errors;
  for (const auto& doc : split.documents)
    for (const auto& label : doc.gold_labels)
      if (!vocab.contains(label))
        errors.push_back("doc '" + doc.doc_id + "': unknown label id '" + label + "'");
  return errors;
}

std::vector<std::vector<std::string>> split_sections(const Document& doc) {
  std::vector<std::vector<std::string>> sections;
  auto push = [&](const std::string& text) {
    auto tokens = tokenize(text);
    if (!tokens.empty()) sections.push_back(std::move(tokens));
  };
  push(doc.header);
  push(doc.recitals);
  for (const auto& article : doc.main_body) push(article);
  push(doc.attachments);
  return sections;
}

std::vector<std::vector<std::string>> zone_sections(const Document& doc,
                                                    const ZoneSpec& spec) {
  std::vector<std::vector<std::string>> sections;
  auto push = [&](const std::string& text) {
    auto tokens = tokenize(text);
    if (!tokens.empty()) sections.push_back(std::move(tokens));
  };
  switch (spec.mode) {
    case ZoneMode::Header:
      push(doc.header);
      break;
    case ZoneMode::Recitals:
      push(doc.recitals);
      break;
    case ZoneMode::HeaderRecitals:
      push(doc.header);
      push(doc.recitals);
      break;
    case ZoneMode::MainBody:
      for (const auto& article : doc.main_body) push(article);
      break;
    case ZoneMode::Full:
      return split_sections(doc);
    case ZoneMode::FirstK: {
      Index budget = spec.k;
      for (auto& section : split_sections(doc)) {
        if (budget <= 0) break;
        if (static_cast<Index>(section.size()) > budget)
          section.resize(static_cast<size_t>(budget));
        budget -= static_cast<Index>(section.size());
        sections.push_back(std::move(section));
      }
      break;
    }
  }
  return sections;
}

std::vector<std::string> extract_zone(const Document& doc, const ZoneSpec& spec) {
  std::vector<std::string> tokens;
  for (const auto& section : zone_sections(doc, spec))
    tokens.insert(tokens.end(), section.begin(), section.end());
  return tokens;
}

FrequencyBuckets bucket_labels(const CorpusSplit& train,
                               const embeddings::LabelVocabulary& vocab,
                               long threshold) {
  std::unordered_map<std::string, long> counts;
  for (const auto& doc : train.documents)
    for (const auto& label : doc.gold_labels) ++counts[label];
  FrequencyBuckets buckets;
  for (Index i = 0; i < vocab.size(); ++i) {
    const std::string& id = vocab.id(i);
    auto it = counts.find(id);
    const long c = it == counts.end() ? 0 : it->second;
    if (c > threshold) buckets.frequent.insert(id);
    else if (c >= 1) buckets.few_shot.insert(id);
    else buckets.zero_shot.insert(id);
  }
  return buckets;
}

Matrix gold_matrix(const CorpusSplit& split,
                   const embeddings::LabelVocabulary& vocab) {
  Matrix gold = Matrix::Zero(static_cast<Index>(split.documents.size()),
                             vocab.size());
  for (Index t = 0; t < gold.rows(); ++t)
    for (const auto& label : split.documents[static_cast<size_t>(t)].gold_labels) {
      const Index l = vocab.index_of(label);
      if (l >= 0) gold(t, l) = 1.0;
    }
  return gold;
}

// --- synthetic corpora ----------------------------------------------------

namespace {

std::string padded(const std::string& prefix, Index i, Index total) {
  Index width = 1;
  for (Index v = total > 0 ? total - 1 : 0; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(i);
  while (static_cast<Index>(digits.size()) < width) digits.insert(digits.begin(), '0');
  return prefix + digits;
}

}  // namespace

std::string SyntheticSpec::label_id(Index i) const {
  return padded("lab", i, n_labels);
}

void SyntheticSpec::validate() const {
  if (n_docs < 3) throw ConfigError("synthetic corpus needs n_docs >= 3");
  if (n_labels < 2) throw ConfigError("synthetic corpus needs n_labels >= 2");
  if (vocab_size < 1) throw ConfigError("synthetic corpus needs vocab_size >= 1");
  if (static_cast<Index>(planted.size()) > n_labels)
    throw ConfigError("more planted labels than n_labels");
  if (background_tokens_per_zone < 1)
    throw ConfigError("synthetic corpus needs background_tokens_per_zone >= 1");
  if (articles_per_doc < 0)
    throw ConfigError("synthetic corpus needs articles_per_doc >= 0");
  for (const auto& [label, tokens] : planted) {
    bool known = false;
    for (Index i = 0; i < n_labels; ++i)
      if (label_id(i) == label) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("planted label '" + label + "' is not a generated label id");
    if (tokens.empty())
      throw ConfigError("planted label '" + label + "' has no trigger tokens");
    for (const auto& tok : tokens) {
      auto pieces = tokenize(tok);
      if (pieces.size() != 1 || pieces[0] != tok)
        throw ConfigError("trigger token '" + tok +
                          "' must be a single lowercase alphanumeric token");
    }
    // Overlapping trigger sets are allowed (gold follows token containment),
    // but two labels with the same full set would be indistinguishable.
    for (const auto& [other, other_tokens] : planted) {
      if (other == label) break;
      if (std::set<std::string>(tokens.begin(), tokens.end()) ==
          std::set<std::string>(other_tokens.begin(), other_tokens.end()))
        throw ConfigError("labels '" + other + "' and '" + label +
                          "' share an identical trigger set");
    }
  }
}

std::vector<std::string> SyntheticCorpus::all_tokens() const {
  std::set<std::string> tokens(background.begin(), background.end());
  for (const auto& [label, seq] : triggers)
    tokens.insert(seq.begin(), seq.end());
  return {tokens.begin(), tokens.end()};
}

const CorpusSplit& SyntheticCorpus::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  throw Error("unknown split '" + name + "'");
}

void SyntheticCorpus::write(const std::string& dir) const {
  write_corpus_dir((fs::path(dir) / "train").string(), train);
  write_corpus_dir((fs::path(dir) / "dev").string(), dev);
  write_corpus_dir((fs::path(dir) / "test").string(), test);
  write_json_file((fs::path(dir) / "labels.json").string(), labels.to_json());
  Json meta;
  meta["planned_buckets"] = planned_buckets.to_json();
  meta["triggers"] = triggers;
  meta["background"] = background;
  write_json_file((fs::path(dir) / "synth_meta.json").string(), meta);
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  spec.validate();

  const Index n_dev = std::max<Index>(1, static_cast<Index>(spec.n_docs * spec.dev_fraction + 0.5));
  const Index n_test = std::max<Index>(1, static_cast<Index>(spec.n_docs * spec.test_fraction + 0.5));
  const Index n_train = spec.n_docs - n_dev - n_test;
  if (n_train < 1) throw ConfigError("synthetic corpus: split fractions leave no training docs");

  Index n_zero = spec.n_zero >= 0 ? spec.n_zero : std::max<Index>(1, spec.n_labels * 15 / 100);
  Index n_frequent = spec.n_frequent >= 0 ? spec.n_frequent : std::max<Index>(1, spec.n_labels * 40 / 100);
  Index n_few = spec.n_few >= 0 ? spec.n_few : spec.n_labels - n_frequent - n_zero;
  if (n_frequent + n_few + n_zero != spec.n_labels)
    throw ConfigError("synthetic corpus: bucket counts must sum to n_labels");
  if (n_frequent < 0 || n_few < 0 || n_zero < 0)
    throw ConfigError("synthetic corpus: negative bucket count");

  const Index freq_count = spec.frequent_train_count >= 0
                               ? spec.frequent_train_count
                               : static_cast<Index>(spec.bucket_threshold) + 10;
  const Index few_count = spec.few_train_count >= 0
                              ? spec.few_train_count
                              : std::min<Index>(10, static_cast<Index>(spec.bucket_threshold));
  if (freq_count <= static_cast<Index>(spec.bucket_threshold))
    throw ConfigError("synthetic corpus: frequent_train_count must exceed the bucket threshold");
  if (few_count < 1 || few_count > static_cast<Index>(spec.bucket_threshold))
    throw ConfigError("synthetic corpus: few_train_count must lie in [1, threshold]");
  if (freq_count > n_train)
    throw ConfigError("synthetic corpus: frequent_train_count exceeds the training split size");

  SyntheticCorpus out;
  out.train.name = "train";
  out.dev.name = "dev";
  out.test.name = "test";

  // Trigger tokens: user-planted or auto-assigned, disjoint from background.
  std::unordered_set<std::string> reserved;
  for (Index i = 0; i < spec.n_labels; ++i) {
    const std::string id = spec.label_id(i);
    auto it = spec.planted.find(id);
    std::vector<std::string> trig;
    if (it != spec.planted.end()) trig = it->second;
    else trig = {padded("cue", i, spec.n_labels)};
    for (const auto& tok : trig) reserved.insert(tok);
    out.triggers[id] = trig;
  }
  for (Index i = 0; i < spec.vocab_size; ++i) {
    std::string tok = padded("w", i, spec.vocab_size);
    if (!reserved.count(tok)) out.background.push_back(tok);
  }
  if (out.background.empty())
    throw ConfigError("synthetic corpus: background vocabulary is empty");

  for (Index i = 0; i < spec.n_labels; ++i) {
    const std::string id = spec.label_id(i);
    out.labels.add(id, join_tokens(out.triggers.at(id)));
    if (i < n_frequent) out.planned_buckets.frequent.insert(id);
    else if (i < n_frequent + n_few) out.planned_buckets.few_shot.insert(id);
    else out.planned_buckets.zero_shot.insert(id);
  }

  Rng rng = Rng::stream(spec.seed, 0xC0);

  // Token skeletons: per document, per zone (header, recitals, articles...,
  // attachments).
  const Index zones_per_doc = 3 + spec.articles_per_doc;
  struct DocDraft {
    std::string id;
    std::vector<std::vector<std::string>> zones;
    std::set<std::string> gold;
  };
  auto make_draft = [&](Index global_index) {
    DocDraft d;
    d.id = padded("SYN", global_index, spec.n_docs);
    d.zones.resize(static_cast<size_t>(zones_per_doc));
    for (auto& zone : d.zones)
      for (Index k = 0; k < spec.background_tokens_per_zone; ++k)
        zone.push_back(out.background[static_cast<size_t>(
            rng.uniform_int(0, static_cast<int64_t>(out.background.size()) - 1))]);
    return d;
  };

  std::vector<DocDraft> train_docs, dev_docs, test_docs;
  Index next = 0;
  for (Index i = 0; i < n_train; ++i) train_docs.push_back(make_draft(next++));
  for (Index i = 0; i < n_dev; ++i) dev_docs.push_back(make_draft(next++));
  for (Index i = 0; i < n_test; ++i) test_docs.push_back(make_draft(next++));

  auto assign = [&](std::vector<DocDraft>& docs, const std::string& label,
                    Index count) {
    count = std::min<Index>(count, static_cast<Index>(docs.size()));
    if (count <= 0) return;
    std::vector<Index> order(docs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
    rng.shuffle(order);
    order.resize(static_cast<size_t>(count));
    std::sort(order.begin(), order.end());
    const auto& trig = out.triggers.at(label);
    for (Index di : order) {
      DocDraft& d = docs[static_cast<size_t>(di)];
      d.gold.insert(label);
      auto& zone = d.zones[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int64_t>(zones_per_doc) - 1))];
      zone.insert(zone.end(), trig.begin(), trig.end());
    }
  };

  for (Index i = 0; i < spec.n_labels; ++i) {
    const std::string id = spec.label_id(i);
    const bool zero = out.planned_buckets.zero_shot.count(id) > 0;
    const bool frequent = out.planned_buckets.frequent.count(id) > 0;
    if (!zero) assign(train_docs, id, frequent ? freq_count : few_count);
    assign(dev_docs, id, spec.eval_count);
    assign(test_docs, id, spec.eval_count);
  }

  auto finish = [&](std::vector<DocDraft>& docs, CorpusSplit& split) {
    for (auto& d : docs) {
      Document doc;
      doc.doc_id = d.id;
      doc.header = join_tokens(d.zones[0]);
      doc.recitals = join_tokens(d.zones[1]);
      for (Index a = 0; a < spec.articles_per_doc; ++a)
        doc.main_body.push_back(join_tokens(d.zones[static_cast<size_t>(2 + a)]));
      doc.attachments = join_tokens(d.zones[static_cast<size_t>(zones_per_doc - 1)]);
      // Gold is exactly the containment rule. With overlapping planted
      // trigger sets this closure can add labels beyond the sampled ones.
      std::set<std::string> present;
      for (const auto& zone : d.zones) present.insert(zone.begin(), zone.end());
      doc.gold_labels = std::move(d.gold);
      for (const auto& [label, trig] : out.triggers) {
        bool all = true;
        for (const auto& tok : trig) all = all && present.count(tok);
        if (all) doc.gold_labels.insert(label);
      }
      split.documents.push_back(std::move(doc));
    }
  };
  finish(train_docs, out.train);
  finish(dev_docs, out.dev);
  finish(test_docs, out.test);
  return out;
}

}  // namespace lmtc::corpus
