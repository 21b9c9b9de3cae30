// Copyright 2026 The Calibre Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// calibre: pipeline driver.
//
// Exit codes: 0 success, 1 I/O or schema error, 2 invalid arguments,
// 3 training divergence. JSON results go to stdout or the file named by
// --out/--report/--stats; human-readable progress goes to stderr, filtered
// by CALIBRE_LOG=quiet|info|debug.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "calibre/calibre.hpp"

namespace calibre::cli {
namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("CALIBRE_LOG");
  const std::string v = env ? env : "info";
  if (v == "quiet" || v == "error" || v == "0") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << "calibre: " << msg << "\n";
}

void info(const std::string& msg) { log(LogLevel::Info, msg); }
void debug(const std::string& msg) { log(LogLevel::Debug, msg); }

/// Writes `j` (pretty, newline-terminated) to `path`, or stdout when empty.
void emit_json(const nlohmann::ordered_json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

std::string text_or_stdout(const std::string& path) { return path.empty() ? "stdout" : path; }

// ---------------------------------------------------------------- options

struct ModelOptions {
  int d_model = 64;
  int layers = 2;
  int heads = 4;
  int max_len = 128;
  int vocab_size = 30000;

  void add(CLI::App* app) {
    app->add_option("--d-model", d_model, "Hidden size")->capture_default_str();
    app->add_option("--layers", layers, "Encoder blocks")->capture_default_str();
    app->add_option("--heads", heads, "Attention heads")->capture_default_str();
    app->add_option("--max-len", max_len, "Maximum input length in tokens")->capture_default_str();
    app->add_option("--vocab-size", vocab_size, "Vocabulary cap including specials")
        ->capture_default_str();
  }
};

struct TrainOptions {
  int epochs = 3;
  int batch = 16;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double warmup = 0.1;
  int cycles = 1;
  double clip = 1.0;
  double alpha = 0.3;
  double beta = 0.3;
  double gamma = 0.4;
  std::string log_path;

  void add(CLI::App* app, bool with_beta) {
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--batch", batch, "Examples per optimizer step")->capture_default_str();
    app->add_option("--lr", lr, "Peak learning rate")->capture_default_str();
    app->add_option("--weight-decay", weight_decay, "Decoupled weight decay")->capture_default_str();
    app->add_option("--warmup", warmup, "Warm-up fraction of all steps")->capture_default_str();
    app->add_option("--cycles", cycles, "Cosine hard restarts")->capture_default_str();
    app->add_option("--clip", clip, "Gradient-norm clip (0 disables)")->capture_default_str();
    app->add_option("--alpha", alpha, "Position loss weight")->capture_default_str();
    if (with_beta) app->add_option("--beta", beta, "Type loss weight")->capture_default_str();
    app->add_option("--gamma", gamma, "Span-matching loss weight")->capture_default_str();
    app->add_option("--log", log_path, "Training log (JSONL)");
  }

  TrainConfig config(TaskMode mode, std::uint64_t seed) const {
    TrainConfig c;
    c.mode = mode;
    c.weights = {alpha, beta, gamma};
    c.epochs = epochs;
    c.batch_size = batch;
    c.lr = lr;
    c.weight_decay = weight_decay;
    c.warmup = warmup;
    c.cycles = cycles;
    c.clip_norm = clip;
    c.seed = seed;
    c.validate();
    return c;
  }
};

std::array<double, 3> parse_weights(const std::string& s) {
  std::array<double, 3> w{};
  std::stringstream in(s);
  std::string part;
  std::size_t k = 0;
  while (std::getline(in, part, ',')) {
    if (k >= 3) break;
    try {
      w[k++] = std::stod(part);
    } catch (const std::logic_error&) {
      k = 99;
      break;
    }
  }
  if (k != 3) throw InvalidArgument("--op-weights expects three comma-separated numbers");
  return w;
}

// ------------------------------------------------------------------ ingest

struct IngestOptions {
  std::string dump, out, stats;
  int min_tokens = 50, max_tokens = 250, max_anchor_tokens = 8, min_anchors = 2;
  int per_page_cap = 0;
  std::uint64_t seed = 0;
};

int run_ingest(const IngestOptions& o) {
  const auto pages = parse_wiki_jsonl(read_file(o.dump));
  FilterConfig cfg;
  cfg.min_tokens = o.min_tokens;
  cfg.max_tokens = o.max_tokens;
  cfg.max_anchor_tokens = o.max_anchor_tokens;
  cfg.min_anchors = o.min_anchors;
  if (o.per_page_cap > 0) cfg.per_page_cap = o.per_page_cap;
  cfg.seed = o.seed;
  const FilterResult r = filter_passages(pages, cfg);
  write_file(o.out, emit_passages_jsonl(r.passages));
  info("ingest: " + std::to_string(r.passages.size()) + " passages from " +
       std::to_string(pages.size()) + " pages -> " + o.out);
  nlohmann::ordered_json j;
  j["filter"] = r.stats.to_json();
  j["corpus"] = to_json(corpus_stats(r.passages));
  emit_json(j, o.stats);
  return 0;
}

// ------------------------------------------------------------------- synth

struct SynthOptions {
  std::string passages, records, out, stats, mode = "ner", op_weights = "1,1,1", op_report;
  double phi = 0.5;
  bool sna = false;
  std::uint64_t seed = 0;
};

int run_synth(const SynthOptions& o) {
  NoisePolicy policy;
  policy.phi = o.phi;
  policy.seed = o.seed;
  policy.op_weights = o.op_report.empty()
                          ? parse_weights(o.op_weights)
                          : empirical_op_weights(nlohmann::json::parse(read_file(o.op_report)));
  policy.validate();
  if (o.passages.empty() == o.records.empty()) {
    throw InvalidArgument("synth: give exactly one of --passages or --records");
  }
  SynthStats stats;
  std::vector<CalibrationExample> out;
  if (!o.passages.empty()) {
    if (o.mode != "ner" && o.mode != "mrc") throw InvalidArgument("synth: --mode must be ner or mrc");
    const auto passages = parse_passages_jsonl(read_file(o.passages));
    out = build_pbr_records(passages, policy, o.mode == "mrc" ? SynthMode::Mrc : SynthMode::Ner,
                            HeuristicTyper{}, &stats);
  } else {
    out = parse_pbr_jsonl(read_file(o.records));
  }
  const std::size_t before = out.size();
  if (o.sna || !o.records.empty()) out = self_noise_augment(out, policy);
  write_file(o.out, emit_pbr_jsonl(out));
  info("synth: " + std::to_string(out.size()) + " records -> " + o.out);
  nlohmann::ordered_json j;
  j["phi"] = policy.phi;
  j["op_weights"] = policy.op_weights;
  j["noise"] = stats.to_json();
  j["sna_copies"] = static_cast<long long>(out.size() - before);
  j["records"] = static_cast<long long>(out.size());
  emit_json(j, o.stats);
  return 0;
}

// ------------------------------------------------------------------- pairs

struct PairsOptions {
  std::string gold, pred, predictions, out, report, language = "en";
  int n_win = 0;
};

MatchConfig window(int n_win) {
  MatchConfig m;
  if (n_win > 0) m.n_win = n_win;
  m.validate();
  return m;
}

/// Predicted spans per gold sentence from JSONL lines
/// {"sentence_id": <0-based index>, "spans": [[start, end, type?], ...]}.
/// Sentences without a line have no predictions.
std::vector<std::vector<Span>> read_predictions(const std::string& path, std::size_t sentences) {
  std::vector<std::vector<Span>> out(sentences);
  std::vector<bool> seen(sentences, false);
  for_each_jsonl(read_file(path), [&](const nlohmann::json& j, std::size_t line) {
    const std::string where = "'" + path + "' line " + std::to_string(line);
    try {
      const long long id = j.at("sentence_id").is_string() ? std::stoll(j.at("sentence_id").get<std::string>())
                                                           : j.at("sentence_id").get<long long>();
      if (id < 0 || id >= static_cast<long long>(sentences)) {
        throw FormatError(where + ": sentence_id " + std::to_string(id) + " out of range");
      }
      if (seen[static_cast<std::size_t>(id)]) {
        throw FormatError(where + ": duplicate sentence_id " + std::to_string(id));
      }
      seen[static_cast<std::size_t>(id)] = true;
      for (const auto& s : j.at("spans")) {
        if (s.size() > 2) {
          out[static_cast<std::size_t>(id)].emplace_back(s.at(0).get<int>(), s.at(1).get<int>(),
                                                         s.at(2).get<std::string>());
        } else {
          out[static_cast<std::size_t>(id)].emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    } catch (const std::logic_error&) {
      throw FormatError(where + ": bad sentence_id");
    }
  });
  return out;
}

int run_pairs(const PairsOptions& o) {
  if (o.pred.empty() == o.predictions.empty()) {
    throw InvalidArgument("pairs: give exactly one of --pred or --predictions");
  }
  const auto gold = parse_conll(read_file(o.gold));
  std::vector<std::vector<Span>> pred;
  if (!o.pred.empty()) {
    const auto tagged = parse_conll(read_file(o.pred));
    if (gold.size() != tagged.size()) {
      throw FormatError("pairs: " + std::to_string(tagged.size()) + " predicted sentences vs " +
                        std::to_string(gold.size()) + " gold sentences");
    }
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i].tokens.tokens != tagged[i].tokens.tokens) {
        throw FormatError("pairs: sentence " + std::to_string(i + 1) + " tokens differ between files");
      }
      pred.push_back(tagged[i].spans());
    }
  } else {
    pred = read_predictions(o.predictions, gold.size());
  }
  std::vector<MatchReport> reports;
  std::vector<CalibrationExample> examples;
  std::map<std::string, long long> rules;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int n = static_cast<int>(gold[i].tokens.size());
    for (const auto& s : pred[i]) {
      if (!s.valid_in(n)) {
        throw FormatError("pairs: predicted span outside sentence " + std::to_string(i));
      }
    }
    reports.push_back(match_entities(pred[i], gold[i].spans(), n, window(o.n_win)));
    for (const auto& p : reports.back().pairs) ++rules[to_string(p.rule)];
    auto xs = pairs_to_examples(gold[i], reports.back(), o.language + "-" + std::to_string(i), o.language);
    examples.insert(examples.end(), xs.begin(), xs.end());
  }
  write_file(o.out, emit_pbr_jsonl(examples));
  info("pairs: " + std::to_string(examples.size()) + " examples -> " + o.out);
  nlohmann::ordered_json j;
  j["sentences"] = static_cast<long long>(gold.size());
  j["examples"] = static_cast<long long>(examples.size());
  j["n_win"] = o.n_win > 0 ? nlohmann::ordered_json(o.n_win) : nlohmann::ordered_json("entire");
  j["rules"] = rules;
  j["consistency_f1"] = window_consistency_f1(gold, reports);
  emit_json(j, o.report);
  return 0;
}

// ---------------------------------------------------------------- schedule

struct ScheduleOptions {
  std::vector<std::string> sizes, overrides;
  std::string records, languages, plan = "continual", out;
  double retain = 0.5;
  bool flat = false;
  std::uint64_t seed = 0;
};

int run_schedule(const ScheduleOptions& o) {
  std::vector<std::pair<std::string, long long>> sizes;
  if (!o.records.empty()) {
    std::map<std::string, long long> counts;
    std::vector<std::string> seen;
    for (const auto& x : parse_pbr_jsonl(read_file(o.records))) {
      if (counts[x.language]++ == 0) seen.push_back(x.language);
    }
    std::vector<std::string> order = seen;
    if (!o.languages.empty()) {
      order.clear();
      std::stringstream in(o.languages);
      for (std::string l; std::getline(in, l, ',');) order.push_back(l);
    }
    for (const auto& l : order) {
      if (!counts.count(l)) throw InvalidArgument("schedule: no records for language '" + l + "'");
      sizes.emplace_back(l, counts[l]);
    }
  }
  for (const auto& s : o.sizes) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw InvalidArgument("--size expects lang:count, got '" + s + "'");
    try {
      sizes.emplace_back(s.substr(0, colon), std::stoll(s.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw InvalidArgument("--size expects lang:count, got '" + s + "'");
    }
  }
  ScheduleConfig cfg;
  cfg.retain = o.retain;
  cfg.seed = o.seed;
  cfg.nested = !o.flat;
  for (const auto& s : o.overrides) cfg.overrides.push_back(parse_override(s));
  const Plan plan = parse_plan(o.plan);
  const auto stages = build_stages(sizes, plan, cfg);
  for (const auto& s : stages) {
    std::string line = "stage " + std::to_string(s.stage_index) + ":";
    for (const auto& l : s.languages) line += " " + l.language + "=" + std::to_string(l.count);
    info(line);
  }
  emit_json(to_json(stages, plan), o.out);
  return 0;
}

// ---------------------------------------------------------------- training

Vocab vocab_from_examples(const std::vector<CalibrationExample>& xs, int max_size) {
  std::map<std::string, long long> counts;
  for (const auto& x : xs) {
    for (const auto& t : x.passage.tokens) ++counts[t];
    if (x.question) {
      for (const auto& t : x.question->tokens) ++counts[t];
    }
  }
  return Vocab::build(counts, max_size);
}

TypeList types_of(const std::vector<CalibrationExample>& xs) {
  std::set<std::string> t;
  for (const auto& x : xs) {
    if (x.gold_type) t.insert(*x.gold_type);
  }
  return {t.begin(), t.end()};
}

struct Encoded {
  std::vector<EncodedExample> examples;
  std::vector<std::size_t> source;  // index into the input records
  long long skipped = 0;
};

Encoded encode_records(const std::vector<CalibrationExample>& xs, const Vocab& v, const TypeList& types,
                       int max_len) {
  Encoded e;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (encoded_length(xs[i]) > max_len) {
      ++e.skipped;
      debug("skipping '" + xs[i].id + "': longer than max_len");
      continue;
    }
    e.examples.push_back(encode_example(xs[i], v, types, max_len));
    e.source.push_back(i);
  }
  if (e.skipped > 0) info("skipped " + std::to_string(e.skipped) + " examples longer than max_len");
  return e;
}

/// Record subsets per stage: a stage manifest's record ids index the
/// records of each language in file order.
std::vector<std::vector<std::size_t>> stage_subsets(const std::string& path,
                                                    const std::vector<CalibrationExample>& xs) {
  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < xs.size(); ++i) by_lang[xs[i].language].push_back(i);
  const auto j = nlohmann::json::parse(read_file(path));
  std::vector<std::vector<std::size_t>> out;
  try {
    for (const auto& stage : j.at("stages")) {
      std::vector<std::size_t> idx;
      for (const auto& l : stage.at("languages")) {
        const auto lang = l.at("language").get<std::string>();
        const auto& pool = by_lang[lang];
        for (const auto& id : l.at("record_ids")) {
          const auto k = id.get<long long>();
          if (k < 0 || k >= static_cast<long long>(pool.size())) {
            throw FormatError("stage manifest: record " + std::to_string(k) + " of '" + lang +
                              "' is out of range");
          }
          idx.push_back(pool[static_cast<std::size_t>(k)]);
        }
      }
      std::sort(idx.begin(), idx.end());
      out.push_back(std::move(idx));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("stage manifest: ") + e.what());
  }
  return out;
}

struct CalibTrainOptions {
  std::string train, init, out, stages, task = "ner";
  bool sna = false;
  double phi = 0.5;
  std::uint64_t seed = 0;
  ModelOptions model;
  TrainOptions train_opts;
};

nlohmann::ordered_json epoch_json(const std::vector<EpochRecord>& epochs) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    nlohmann::ordered_json j{{"epoch", e.epoch}, {"examples", e.examples}};
    j.update(loss_json(e.mean));
    a.push_back(j);
  }
  return a;
}

int train_calibrator(const CalibTrainOptions& o, TaskMode mode, const std::string& summary_path) {
  auto records = parse_pbr_jsonl(read_file(o.train));
  if (records.empty()) throw FormatError("'" + o.train + "' holds no examples");
  if (o.sna) {
    NoisePolicy policy;
    policy.phi = o.phi;
    policy.seed = o.seed;
    records = self_noise_augment(records, policy);
  }
  TypeList types = mode == TaskMode::Ner ? types_of(records) : TypeList{};
  if (mode == TaskMode::Ner && types.size() < 2) {
    throw FormatError("finetune --task ner needs at least two entity types in the training data");
  }
  TrainOptions topts = o.train_opts;
  if (mode == TaskMode::Pretrain) topts.beta = 0.0;
  const TrainConfig tc = topts.config(mode, o.seed);

  Checkpoint ckpt;
  if (!o.init.empty()) {
    ckpt = load_checkpoint(o.init);
    if (ckpt.meta.value("kind", "") != "calibrator") {
      throw InvalidArgument("--init must be a calibrator checkpoint");
    }
    if (ckpt.types != types) {
      ckpt.params.reset_cls_head(static_cast<int>(types.size()), o.seed);
      ckpt.types = types;
    }
  } else {
    ckpt.vocab = vocab_from_examples(records, o.model.vocab_size);
    ModelConfig mc;
    mc.vocab_size = ckpt.vocab.size();
    mc.d_model = o.model.d_model;
    mc.n_layers = o.model.layers;
    mc.n_heads = o.model.heads;
    mc.max_len = o.model.max_len;
    mc.n_types = static_cast<int>(types.size());
    mc.seed = o.seed;
    ckpt.params = ModelParams::init(mc);
    ckpt.types = types;
  }
  const Encoded enc = encode_records(records, ckpt.vocab, ckpt.types, ckpt.params.config.max_len);
  if (enc.examples.empty()) throw FormatError("no training example fits max_len");

  std::vector<std::vector<std::size_t>> subsets;
  if (!o.stages.empty()) {
    std::vector<std::size_t> position(records.size(), SIZE_MAX);
    for (std::size_t k = 0; k < enc.source.size(); ++k) position[enc.source[k]] = k;
    for (const auto& stage : stage_subsets(o.stages, records)) {
      std::vector<std::size_t> keep;
      for (std::size_t r : stage) {
        if (position[r] != SIZE_MAX) keep.push_back(position[r]);
      }
      subsets.push_back(std::move(keep));
    }
  } else {
    std::vector<std::size_t> all(enc.examples.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    subsets.push_back(std::move(all));
  }

  TrainLog log;
  nlohmann::ordered_json stage_logs = nlohmann::ordered_json::array();
  ModelParams params = ckpt.params;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    std::vector<EncodedExample> data;
    for (std::size_t k : subsets[s]) data.push_back(enc.examples[k]);
    TrainConfig stage_cfg = tc;
    stage_cfg.seed = tc.seed + s;
    TrainLog stage_log;
    info(std::string(to_string(mode)) + ": stage " + std::to_string(s + 1) + "/" +
         std::to_string(subsets.size()) + ", " + std::to_string(data.size()) + " examples");
    try {
      params = fit(std::move(params), data, stage_cfg, &stage_log,
                   [&](const EpochRecord& e, const ModelParams&) {
                     info("epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.mean.total));
                   });
    } catch (const DivergenceError& e) {
      ckpt.params = e.last_good;
      ckpt.meta = {{"kind", "calibrator"}, {"task", to_string(mode)}, {"diverged", true},
                   {"stage", s + 1}, {"epoch", e.epoch}, {"step", e.step}};
      save_checkpoint(o.out, ckpt);
      if (!topts.log_path.empty()) write_file(topts.log_path, log.to_jsonl() + stage_log.to_jsonl());
      throw;
    }
    log.steps.insert(log.steps.end(), stage_log.steps.begin(), stage_log.steps.end());
    log.epochs.insert(log.epochs.end(), stage_log.epochs.begin(), stage_log.epochs.end());
    stage_logs.push_back({{"stage", s + 1}, {"examples", data.size()}, {"epochs", epoch_json(stage_log.epochs)}});
  }
  ckpt.params = std::move(params);
  ckpt.meta = {{"kind", "calibrator"}, {"task", to_string(mode)}, {"train", tc.to_json()}};
  save_checkpoint(o.out, ckpt);
  // Step records carry the epoch within their stage; stages are concatenated in order.
  if (!topts.log_path.empty()) write_file(topts.log_path, log.to_jsonl());
  nlohmann::ordered_json j;
  j["task"] = to_string(mode);
  j["records"] = static_cast<long long>(records.size());
  j["trained"] = static_cast<long long>(enc.examples.size());
  j["skipped"] = enc.skipped;
  j["types"] = ckpt.types;
  j["vocab_size"] = ckpt.vocab.size();
  j["parameters"] = static_cast<long long>(ckpt.params.num_scalars());
  j["stages"] = stage_logs;
  emit_json(j, summary_path);
  return 0;
}

struct BaseTrainOptions {
  std::string train, out;
  std::uint64_t seed = 0;
  ModelOptions model;
  TrainOptions train_opts;
};

int train_base(const BaseTrainOptions& o, const std::string& summary_path) {
  const auto sentences = parse_conll(read_file(o.train));
  if (sentences.empty()) throw FormatError("'" + o.train + "' holds no sentences");
  std::set<std::string> type_set;
  std::map<std::string, long long> counts;
  for (const auto& s : sentences) {
    for (const auto& sp : s.spans()) type_set.insert(sp.label.value_or(""));
    for (const auto& t : s.tokens.tokens) ++counts[t];
  }
  const TypeList types(type_set.begin(), type_set.end());
  const auto bio = bio_labels(types);
  Checkpoint ckpt;
  ckpt.vocab = Vocab::build(counts, o.model.vocab_size);
  ckpt.types = types;
  ModelConfig mc;
  mc.vocab_size = ckpt.vocab.size();
  mc.d_model = o.model.d_model;
  mc.n_layers = o.model.layers;
  mc.n_heads = o.model.heads;
  mc.max_len = o.model.max_len;
  mc.n_bio = static_cast<int>(bio.size());
  mc.seed = o.seed;
  std::vector<TaggerInput> data;
  long long skipped = 0;
  for (const auto& s : sentences) {
    if (static_cast<int>(s.tokens.size()) + 1 > mc.max_len) {
      ++skipped;
      continue;
    }
    data.push_back(encode_tagger_input(s, ckpt.vocab, bio));
  }
  if (skipped > 0) info("skipped " + std::to_string(skipped) + " sentences longer than max_len");
  if (data.empty()) throw FormatError("no training sentence fits max_len");
  const TrainConfig tc = o.train_opts.config(TaskMode::Ner, o.seed);
  TrainLog log;
  try {
    ckpt.params = fit_tagger(ModelParams::init(mc), data, tc, &log,
                             [&](const EpochRecord& e, const ModelParams&) {
                               info("epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.mean.total));
                             });
  } catch (const DivergenceError& e) {
    ckpt.params = e.last_good;
    ckpt.meta = {{"kind", "base_tagger"}, {"diverged", true}, {"epoch", e.epoch}, {"step", e.step}};
    save_checkpoint(o.out, ckpt);
    throw;
  }
  ckpt.meta = {{"kind", "base_tagger"}, {"train", tc.to_json()}};
  save_checkpoint(o.out, ckpt);
  if (!o.train_opts.log_path.empty()) write_file(o.train_opts.log_path, log.to_jsonl());
  nlohmann::ordered_json j;
  j["target"] = "base";
  j["sentences"] = static_cast<long long>(sentences.size());
  j["trained"] = static_cast<long long>(data.size());
  j["skipped"] = skipped;
  j["labels"] = bio;
  j["train_token_accuracy"] = token_accuracy(sentences, ckpt.params, ckpt.vocab, bio);
  j["epochs"] = epoch_json(log.epochs);
  emit_json(j, summary_path);
  return 0;
}

// ----------------------------------------------------------------- predict

struct PredictOptions {
  std::string model, input, out, task = "ner";
  int max_answer_len = 0;
  double lambda = 1.0;
};

int run_predict(const PredictOptions& o) {
  const Checkpoint ckpt = load_checkpoint(o.model);
  const std::string kind = ckpt.meta.value("kind", "");
  if (kind == "base_tagger") {
    const auto bio = bio_labels(ckpt.types);
    auto sentences = parse_conll(read_file(o.input));
    for (auto& s : sentences) {
      if (static_cast<int>(s.tokens.size()) + 1 > ckpt.params.config.max_len) {
        throw InvalidArgument("predict: a sentence of " + std::to_string(s.tokens.size()) +
                              " tokens exceeds max_len");
      }
      s.labels = base_tag(s.tokens, ckpt.params, ckpt.vocab, bio);
    }
    const std::string text = emit_conll(sentences);
    if (o.out.empty()) std::cout << text;
    else write_file(o.out, text);
    info("predict: tagged " + std::to_string(sentences.size()) + " sentences");
    return 0;
  }
  if (kind != "calibrator") throw FormatError("predict: unknown checkpoint kind '" + kind + "'");
  const TaskMode mode = parse_task_mode(o.task);
  if (mode == TaskMode::Pretrain) throw InvalidArgument("predict: --task must be ner or mrc");
  const int max_answer =
      o.max_answer_len > 0 ? o.max_answer_len : (mode == TaskMode::Ner ? kMaxAnswerLenNer : kMaxAnswerLenMrc);
  const auto records = parse_pbr_jsonl(read_file(o.input));
  std::string text;
  long long skipped = 0, fallback = 0;
  for (const auto& x : records) {
    nlohmann::ordered_json j{{"id", x.id}, {"language", x.language}, {"noisy", {x.noisy.start, x.noisy.end}}};
    if (encoded_length(x) > ckpt.params.config.max_len) {
      ++skipped;
      j["span"] = {x.noisy.start, x.noisy.end};
      j["text"] = x.passage.slice_text(x.noisy.start, x.noisy.end);
      j["type"] = nullptr;
      j["skipped"] = true;
    } else {
      const EncodedExample e = encode_example(x, ckpt.vocab, ckpt.types, ckpt.params.config.max_len);
      const Decoded d = predict(ckpt.params, e, ckpt.types, max_answer, o.lambda);
      if (d.fallback) ++fallback;
      j["span"] = {d.span.start, d.span.end};
      j["text"] = x.passage.slice_text(d.span.start, d.span.end);
      j["type"] = d.type ? nlohmann::ordered_json(*d.type) : nlohmann::ordered_json(nullptr);
      j["score"] = d.score;
      if (d.fallback) j["fallback"] = true;
    }
    text += j.dump() + "\n";
  }
  if (o.out.empty()) std::cout << text;
  else write_file(o.out, text);
  info("predict: " + std::to_string(records.size()) + " predictions (" + std::to_string(skipped) +
       " over max_len, " + std::to_string(fallback) + " fallbacks)");
  return 0;
}

// -------------------------------------------------------------------- eval

nlohmann::ordered_json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"true_positives", p.true_positives}, {"predicted", p.predicted}, {"gold", p.gold}};
}

nlohmann::ordered_json ner_report(const std::vector<LabeledSentence>& pred,
                                  const std::vector<LabeledSentence>& gold, const std::string& language) {
  if (pred.size() != gold.size()) {
    throw FormatError("eval: " + std::to_string(pred.size()) + " predicted sentences vs " +
                      std::to_string(gold.size()) + " gold sentences");
  }
  std::vector<std::vector<Span>> ps, gs;
  std::vector<int> lengths;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (pred[i].tokens.tokens != gold[i].tokens.tokens) {
      throw FormatError("eval: sentence " + std::to_string(i + 1) + " tokens differ between files");
    }
    ps.push_back(pred[i].spans());
    gs.push_back(gold[i].spans());
    lengths.push_back(static_cast<int>(gold[i].tokens.size()));
  }
  nlohmann::ordered_json j;
  j["task"] = "ner";
  j["sentences"] = static_cast<long long>(gold.size());
  j["entity"] = prf_json(entity_f1(ps, gs));
  j["errors"] = error_report(ps, gs, language).to_json();
  j["upper_bounds"] = {
      {"baseline_f1", entity_f1(ps, gs).f1},
      {"boundary_correct_f1", oracle_upper_bounds(ps, gs, lengths, OracleMode::BoundaryCorrect).f1},
      {"type_correct_f1", oracle_upper_bounds(ps, gs, lengths, OracleMode::TypeCorrect).f1}};
  return j;
}

nlohmann::ordered_json mrc_report(const std::string& pred_path, const std::string& gold_path) {
  const auto gold = parse_pbr_jsonl(read_file(gold_path));
  std::map<std::string, Span> pred;
  for_each_jsonl(read_file(pred_path), [&](const nlohmann::json& j, std::size_t line) {
    try {
      const auto& s = j.at("span");
      pred[j.at("id").get<std::string>()] = Span(s.at(0).get<int>(), s.at(1).get<int>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("'" + pred_path + "' line " + std::to_string(line) + ": " + e.what());
    }
  });
  struct Acc {
    std::vector<Span> preds, golds;
    double f1 = 0.0, em = 0.0;
  };
  std::map<std::string, Acc> by_lang;
  Acc all;
  for (const auto& g : gold) {
    auto it = pred.find(g.id);
    if (it == pred.end()) throw FormatError("eval: no prediction for '" + g.id + "'");
    const Span p = it->second;
    if (!p.valid_in(static_cast<int>(g.passage.size()))) {
      throw FormatError("eval: prediction for '" + g.id + "' lies outside the passage");
    }
    const SpanScore s = span_f1_em(g.passage.slice_text(p.start, p.end),
                                   {g.passage.slice_text(g.gold.start, g.gold.end)});
    for (Acc* a : {&by_lang[g.language], &all}) {
      a->preds.push_back(p);
      a->golds.push_back(Span(g.gold.start, g.gold.end));
      a->f1 += s.f1;
      a->em += s.em;
    }
  }
  auto summarize = [](const Acc& a, const std::string& lang) {
    const double n = static_cast<double>(std::max<std::size_t>(1, a.preds.size()));
    nlohmann::ordered_json j{{"f1", a.f1 / n}, {"em", a.em / n}};
    j["errors"] = error_report(a.preds, a.golds, lang).to_json();
    return j;
  };
  nlohmann::ordered_json j;
  j["task"] = "mrc";
  j["answers"] = static_cast<long long>(gold.size());
  j["overall"] = summarize(all, "all");
  nlohmann::ordered_json langs = nlohmann::ordered_json::object();
  for (const auto& [lang, acc] : by_lang) langs[lang] = summarize(acc, lang);
  j["languages"] = langs;
  return j;
}

struct EvalOptions {
  std::string task = "ner", pred, gold, report, language = "en";
};

int run_eval(const EvalOptions& o) {
  if (o.task == "ner") {
    emit_json(ner_report(parse_conll(read_file(o.pred)), parse_conll(read_file(o.gold)), o.language),
              o.report);
  } else if (o.task == "mrc") {
    emit_json(mrc_report(o.pred, o.gold), o.report);
  } else {
    throw InvalidArgument("eval: --task must be ner or mrc");
  }
  return 0;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeOptions {
  std::string dump, conll, pred, out, language = "en";
  double phi = 0.5;
  std::uint64_t seed = 0;
};

int run_analyze(const AnalyzeOptions& o) {
  if (o.dump.empty() && o.conll.empty()) throw InvalidArgument("analyze: give --dump and/or --conll");
  nlohmann::ordered_json j;
  if (!o.dump.empty()) {
    const auto pages = parse_wiki_jsonl(read_file(o.dump));
    FilterConfig fc;
    fc.seed = o.seed;
    const FilterResult r = filter_passages(pages, fc);
    NoisePolicy policy;
    policy.phi = o.phi;
    policy.seed = o.seed;
    SynthStats stats;
    const auto records = build_pbr_records(r.passages, policy, SynthMode::Mrc, HeuristicTyper{}, &stats);
    std::vector<Span> noisy, gold;
    std::map<std::string, long long> wh;
    for (const auto& x : records) {
      noisy.push_back(x.noisy);
      gold.push_back(x.gold);
      ++wh[x.question->tokens.front()];
    }
    j["corpus"] = {{"filter", r.stats.to_json()}, {"languages", to_json(corpus_stats(r.passages))}};
    j["pbr"] = {{"noise", stats.to_json()},
                {"taxonomy", error_report(noisy, gold, "all").to_json()},
                {"question_words", wh}};
  }
  if (!o.conll.empty()) {
    const auto gold = parse_conll(read_file(o.conll));
    const auto pred = o.pred.empty() ? gold : parse_conll(read_file(o.pred));
    auto report = ner_report(pred, gold, o.language);
    nlohmann::ordered_json consistency;
    for (int win : {0, 1, 2, 3}) {
      std::vector<MatchReport> reports;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        reports.push_back(match_entities(pred[i].spans(), gold[i].spans(),
                                         static_cast<int>(gold[i].tokens.size()), window(win)));
      }
      consistency[win == 0 ? "entire" : std::to_string(win)] = window_consistency_f1(gold, reports);
    }
    report["window_consistency_f1"] = consistency;
    j["ner"] = report;
  }
  emit_json(j, o.out);
  return 0;
}

}  // namespace
}  // namespace calibre::cli

int main(int argc, char** argv) {
  using namespace calibre;
  using namespace calibre::cli;
  CLI::App app{"Boundary calibration pipeline: corpus mining, noise synthesis, pairing, "
               "scheduling, training, prediction and evaluation."};
  app.set_config("--config", "", "Config file (TOML/INI); command-line flags take precedence");
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Global seed")->capture_default_str();

  IngestOptions ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Filter a wiki JSONL dump into anchor passages");
  c_ingest->add_option("--dump", ingest.dump, "Wiki pages JSONL")->required();
  c_ingest->add_option("--out", ingest.out, "Passages JSONL")->required();
  c_ingest->add_option("--stats", ingest.stats, "Statistics JSON (default stdout)");
  c_ingest->add_option("--min-tokens", ingest.min_tokens)->capture_default_str();
  c_ingest->add_option("--max-tokens", ingest.max_tokens)->capture_default_str();
  c_ingest->add_option("--max-anchor-tokens", ingest.max_anchor_tokens)->capture_default_str();
  c_ingest->add_option("--min-anchors", ingest.min_anchors)->capture_default_str();
  c_ingest->add_option("--per-page-cap", ingest.per_page_cap, "0 keeps every passage")->capture_default_str();
  c_ingest->add_option("--seed", ingest.seed);

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Garble anchors into PBR records, or augment records (SNA)");
  c_synth->add_option("--passages", synth.passages, "Passages JSONL");
  c_synth->add_option("--records", synth.records, "Existing records to augment");
  c_synth->add_option("--out", synth.out, "Records JSONL")->required();
  c_synth->add_option("--stats", synth.stats, "Statistics JSON (default stdout)");
  c_synth->add_option("--mode", synth.mode, "ner ([PAD] question) or mrc (generated question)")
      ->capture_default_str();
  c_synth->add_option("--phi", synth.phi, "Garbling probability")->capture_default_str();
  c_synth->add_option("--op-weights", synth.op_weights, "Add,Delete,Shift weights")->capture_default_str();
  c_synth->add_option("--empirical,--op-report", synth.op_report,
                      "Error-report JSON giving empirical op weights");
  c_synth->add_flag("--sna", synth.sna, "Append a garbled copy of each garbled record");
  c_synth->add_option("--seed", synth.seed);

  PairsOptions pairs;
  auto* c_pairs = app.add_subcommand("pairs", "Pair base predictions with gold entities");
  c_pairs->add_option("--gold", pairs.gold, "Gold CoNLL")->required();
  c_pairs->add_option("--pred", pairs.pred, "Predicted CoNLL");
  c_pairs->add_option("--predictions", pairs.predictions, "Predicted spans JSONL {sentence_id, spans}");
  c_pairs->add_option("--out", pairs.out, "Calibration examples JSONL")->required();
  c_pairs->add_option("--report", pairs.report, "Report JSON (default stdout)");
  c_pairs->add_option("--n-win", pairs.n_win, "Window in tokens; 0 searches the entire sentence")
      ->capture_default_str();
  c_pairs->add_option("--lang", pairs.language, "Language code")->capture_default_str();

  ScheduleOptions sched;
  auto* c_sched = app.add_subcommand("schedule", "Build continual-learning stage manifests");
  c_sched->add_option("--size", sched.sizes, "lang:count, in introduction order");
  c_sched->add_option("--records", sched.records, "Count languages from a records JSONL");
  c_sched->add_option("--languages", sched.languages, "Comma-separated introduction order for --records");
  c_sched->add_option("--plan", sched.plan, "continual, sequential or mixed")->capture_default_str();
  c_sched->add_option("--retain", sched.retain, "Share of earlier languages kept")->capture_default_str();
  c_sched->add_option("--override", sched.overrides, "stage:lang:count");
  c_sched->add_flag("--flat", sched.flat, "Sample retained data from the full corpus, not the previous stage");
  c_sched->add_option("--out", sched.out, "Manifest JSON (default stdout)");
  c_sched->add_option("--seed", sched.seed);

  CalibTrainOptions pre;
  std::string pre_summary;
  auto* c_pre = app.add_subcommand("pretrain", "Phrase boundary recovery pre-training");
  c_pre->add_option("--train", pre.train, "PBR records JSONL")->required();
  c_pre->add_option("--init", pre.init, "Continue from a checkpoint");
  c_pre->add_option("--out", pre.out, "Checkpoint path")->required();
  c_pre->add_option("--stages", pre.stages, "Stage manifest JSON");
  c_pre->add_option("--summary", pre_summary, "Summary JSON (default stdout)");
  c_pre->add_option("--seed", pre.seed);
  pre.model.add(c_pre);
  pre.train_opts.add(c_pre, false);

  CalibTrainOptions fine;
  BaseTrainOptions base;
  std::string target = "calibrator", fine_summary;
  auto* c_fine = app.add_subcommand("finetune", "Fine-tune the calibrator, or train the base tagger");
  c_fine->add_option("--target", target, "calibrator or base")->capture_default_str();
  c_fine->add_option("--train", fine.train, "Examples JSONL (calibrator) or CoNLL (base)")
      ->required();
  c_fine->add_option("--init", fine.init, "Pre-trained calibrator checkpoint");
  c_fine->add_option("--out", fine.out, "Checkpoint path")->required();
  c_fine->add_option("--task", fine.task, "ner or mrc")->capture_default_str();
  c_fine->add_option("--stages", fine.stages, "Stage manifest JSON");
  c_fine->add_flag("--sna", fine.sna, "Self noise augmentation of the training set");
  c_fine->add_option("--phi", fine.phi, "Garbling probability for --sna")->capture_default_str();
  c_fine->add_option("--summary", fine_summary, "Summary JSON (default stdout)");
  c_fine->add_option("--seed", fine.seed);
  fine.model.add(c_fine);
  fine.train_opts.add(c_fine, true);

  PredictOptions pred;
  auto* c_pred = app.add_subcommand("predict", "Calibrate noisy spans, or tag CoNLL with a base model");
  c_pred->add_option("--model", pred.model, "Checkpoint")->required();
  c_pred->add_option("--input", pred.input, "Examples JSONL or CoNLL")->required();
  c_pred->add_option("--out", pred.out, "Predictions (default stdout)");
  c_pred->add_option("--task", pred.task, "ner or mrc")->capture_default_str();
  c_pred->add_option("--max-answer-len", pred.max_answer_len, "0 uses 8 (ner) or 30 (mrc)")
      ->capture_default_str();
  c_pred->add_option("--lambda", pred.lambda, "Weight of the span-matching score")->capture_default_str();

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "Score predictions");
  c_eval->add_option("--task", ev.task, "ner or mrc")->capture_default_str();
  c_eval->add_option("--pred", ev.pred, "CoNLL (ner) or predictions JSONL (mrc)")
      ->required();
  c_eval->add_option("--gold", ev.gold, "CoNLL (ner) or examples JSONL (mrc)")
      ->required();
  c_eval->add_option("--report", ev.report, "Report JSON (default stdout)");
  c_eval->add_option("--lang", ev.language, "Language label for the ner report")->capture_default_str();

  AnalyzeOptions an;
  auto* c_an = app.add_subcommand("analyze", "Corpus, noise, pairing and error analysis without training");
  c_an->add_option("--dump", an.dump, "Wiki pages JSONL");
  c_an->add_option("--conll", an.conll, "Gold CoNLL");
  c_an->add_option("--pred", an.pred, "Predicted CoNLL (default: the gold file)");
  c_an->add_option("--phi", an.phi, "Garbling probability")->capture_default_str();
  c_an->add_option("--lang", an.language)->capture_default_str();
  c_an->add_option("--out", an.out, "Report JSON (default stdout)");
  c_an->add_option("--seed", an.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  // A subcommand --seed wins over the global one.
  auto pick_seed = [&](CLI::App* sub, std::uint64_t& s) {
    if (sub->count("--seed") == 0) s = seed;
  };
  try {
    if (*c_ingest) {
      pick_seed(c_ingest, ingest.seed);
      return run_ingest(ingest);
    }
    if (*c_synth) {
      pick_seed(c_synth, synth.seed);
      return run_synth(synth);
    }
    if (*c_pairs) return run_pairs(pairs);
    if (*c_sched) {
      pick_seed(c_sched, sched.seed);
      return run_schedule(sched);
    }
    if (*c_pre) {
      pick_seed(c_pre, pre.seed);
      return train_calibrator(pre, TaskMode::Pretrain, pre_summary);
    }
    if (*c_fine) {
      pick_seed(c_fine, fine.seed);
      if (target == "base") {
        if (!fine.init.empty() || !fine.stages.empty() || fine.sna) {
          throw InvalidArgument("--init, --stages and --sna apply to --target calibrator only");
        }
        base.train = fine.train;
        base.out = fine.out;
        base.seed = fine.seed;
        base.model = fine.model;
        base.train_opts = fine.train_opts;
        return train_base(base, fine_summary);
      }
      if (target != "calibrator") throw InvalidArgument("--target must be calibrator or base");
      const TaskMode mode = parse_task_mode(fine.task);
      if (mode == TaskMode::Pretrain) throw InvalidArgument("finetune: --task must be ner or mrc");
      return train_calibrator(fine, mode, fine_summary);
    }
    if (*c_pred) return run_predict(pred);
    if (*c_eval) return run_eval(ev);
    if (*c_an) {
      pick_seed(c_an, an.seed);
      return run_analyze(an);
    }
  } catch (const DivergenceError& e) {
    std::cerr << "calibre: training diverged at epoch " << e.epoch << ", step " << e.step << ": "
              << e.what() << " (last good parameters saved)\n";
    return 3;
  } catch (const InvalidArgument& e) {
    std::cerr << "calibre: invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "calibre: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "calibre: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "calibre: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
