#include "daedra/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "daedra/dataset.hpp"
#include "daedra/manifest.hpp"
#include "daedra/prng.hpp"
#include "daedra/records.hpp"
#include "daedra/tokenizer.hpp"

namespace daedra::pipeline {

namespace fs = std::filesystem;
using manifest::RunManifest;
using nlohmann::ordered_json;

namespace {

std::atomic<bool> g_logging{true};
std::mutex g_log_mutex;

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StageError("cannot write " + path);
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageError("cannot read " + path);
  return in;
}

void close_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw StageError("write error on " + path);
  out.close();
}

std::vector<Report> read_reports(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return records::read_jsonl(in);
  } catch (const std::exception& e) {
    throw StageError(path + ": " + e.what());
  }
}

wordpiece::Vocabulary read_vocab(const std::string& path) {
  try {
    return wordpiece::load_vocab(path);
  } catch (const std::exception& e) {
    throw StageError(path + ": " + e.what());
  }
}

/// Output directories must be absent or empty unless forced.
void prepare_output_dir(const std::string& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) throw StageError(dir + " exists and is not a directory");
    if (!fs::is_empty(dir, ec) && !force) {
      throw StageError(dir + " is not empty (use --force to overwrite)");
    }
  }
  fs::create_directories(dir, ec);
  if (ec) throw StageError("cannot create " + dir + ": " + ec.message());
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw StageError("cannot create " + parent.string() + ": " + ec.message());
}

std::string dir_of(const std::string& path) {
  const fs::path parent = fs::absolute(path).parent_path();
  return parent.string();
}

RunManifest start_manifest(std::string stage) {
  RunManifest m;
  m.stage = std::move(stage);
  m.started_at = manifest::timestamp_now();
  return m;
}

void finish_manifest(RunManifest& m, const std::string& path) {
  m.finished_at = manifest::timestamp_now();
  manifest::write_manifest(path, m);
}

ordered_json prf_json(const eval::Prf& p) {
  return ordered_json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

template <typename T>
void set_if(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

void log_event(std::string_view level, std::string_view event, const ordered_json& fields) {
  if (!g_logging.load()) return;
  ordered_json line;
  line["ts"] = manifest::timestamp_now();
  line["level"] = level;
  line["event"] = event;
  for (const auto& [k, v] : fields.items()) line[k] = v;
  const std::lock_guard lock(g_log_mutex);
  std::cerr << line.dump() << '\n';
}

void set_logging(bool enabled) { g_logging = enabled; }

void require_fresh(const std::string& path, bool force) {
  std::error_code ec;
  if (!force && fs::exists(path, ec)) {
    throw StageError(path + " already exists (use --force to overwrite)");
  }
}

std::string sidecar_manifest_path(const std::string& output) { return output + ".run.json"; }

// ingest ---------------------------------------------------------------------

IngestSummary ingest(const IngestOptions& options) {
  if (options.inputs.empty()) throw StageError("ingest needs at least one input");
  const std::string manifest_path = sidecar_manifest_path(options.output);
  require_fresh(options.output, options.force);
  require_fresh(manifest_path, options.force);
  for (const auto& in : options.inputs) {
    if (fs::absolute(in) == fs::absolute(options.output)) {
      throw StageError("output would overwrite input " + in);
    }
  }
  RunManifest m = start_manifest("ingest");

  struct FileResult {
    ParseSummary parse;
    std::vector<Report> reports;
    std::size_t empty_text = 0;
    std::string error;
  };
  std::vector<FileResult> results(options.inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      FileResult& r = results[i];
      try {
        std::ifstream in = open_input(options.inputs[i]);
        r.parse = parse_vaers_csv(in, options.parse, [&](RawReport&& raw) {
          if (auto rep = to_report(raw)) {
            r.reports.push_back(std::move(*rep));
          } else {
            ++r.empty_text;
          }
        });
      } catch (const std::exception& e) {
        r.error = options.inputs[i] + ": " + e.what();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, results.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (const auto& r : results) {
    if (!r.error.empty()) throw StageError(r.error);
  }

  ensure_parent(options.output);
  std::ofstream out = open_output(options.output);
  IngestSummary summary;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < results.size(); ++i) {
    FileResult& r = results[i];
    IngestFileSummary fs_summary{options.inputs[i], r.parse, 0, r.empty_text, 0};
    for (const Report& rep : r.reports) {
      if (!seen.insert(rep.vaers_id).second) {
        ++fs_summary.duplicates;
        continue;
      }
      out << records::to_jsonl(rep) << '\n';
      ++fs_summary.kept;
    }
    summary.kept += fs_summary.kept;
    log_event("info", "ingest.file",
              {{"path", fs_summary.path},
               {"rows", r.parse.rows},
               {"errors", r.parse.errors},
               {"empty_text", fs_summary.empty_text},
               {"duplicates", fs_summary.duplicates},
               {"kept", fs_summary.kept},
               {"utf8_bom", r.parse.utf8_bom}});
    for (const auto& sample : r.parse.error_samples) {
      log_event("warn", "ingest.malformed_row", {{"path", fs_summary.path}, {"detail", sample}});
    }
    summary.files.push_back(std::move(fs_summary));
  }
  close_output(out, options.output);

  for (const auto& in : options.inputs) m.inputs.push_back(manifest::digest_input(in));
  m.outputs.push_back(manifest::digest_output(options.output, dir_of(manifest_path)));
  m.config = {{"encoding", options.parse.encoding == Encoding::kLatin1 ? "latin1" : "utf8"},
              {"on_error", options.parse.on_error == ErrorPolicy::kAbort ? "abort" : "skip"}};
  ordered_json files = ordered_json::array();
  for (const auto& f : summary.files) {
    files.push_back({{"path", f.path},
                     {"rows", f.parse.rows},
                     {"malformed", f.parse.errors},
                     {"empty_text", f.empty_text},
                     {"duplicates", f.duplicates},
                     {"kept", f.kept}});
  }
  m.details = {{"files", files}, {"records", summary.kept}};
  finish_manifest(m, manifest_path);
  return summary;
}

// stats ----------------------------------------------------------------------

std::string stats_json(const CorpusStats& s) {
  ordered_json j;
  j["records"] = s.record_count;
  j["words"] = s.word_count;
  ordered_json classes = ordered_json::array();
  for (const auto& [label, share] : s.class_histogram) {
    classes.push_back({{"class", label},
                       {"outcomes", describe(ClassId(label))},
                       {"count", share.count},
                       {"fraction", share.fraction}});
  }
  j["classes"] = classes;
  return j.dump(2) + "\n";
}

CorpusStats stats(const std::string& input) {
  std::ifstream in = open_input(input);
  CorpusStatsBuilder builder;
  try {
    records::read_jsonl(in, [&](Report&& r) { builder.add(r); });
  } catch (const std::exception& e) {
    throw StageError(input + ": " + e.what());
  }
  return builder.finish();
}

// split ----------------------------------------------------------------------

SplitAssignment split(const SplitOptions& options) {
  prepare_output_dir(options.output_dir, options.force);
  RunManifest m = start_manifest("split");
  const std::vector<Report> reports = read_reports(options.input);
  SplitAssignment a;
  try {
    a = stratified_split(reports, options.ratios, options.seed);
  } catch (const std::exception& e) {
    throw StageError(e.what());
  }

  const fs::path dir(options.output_dir);
  for (Partition p : kAllPartitions) {
    const std::string path = (dir / (std::string(to_string(p)) + ".jsonl")).string();
    std::ofstream out = open_output(path);
    for (const Report& r : reports) {
      if (a.entries.at(r.vaers_id).partition == p) out << records::to_jsonl(r) << '\n';
    }
    close_output(out, path);
    m.outputs.push_back(manifest::digest_output(path, dir.string()));
  }

  m.inputs.push_back(manifest::digest_input(options.input));
  m.seed = options.seed;
  m.config = {{"ratios",
               {{"train", options.ratios.train},
                {"test", options.ratios.test},
                {"validation", options.ratios.validation}}}};
  ordered_json cuts = ordered_json::array();
  const bool single_band = !std::isfinite(a.quintiles.cuts[0]);
  if (!single_band) {
    for (double c : a.quintiles.cuts) cuts.push_back(c);
  }
  ordered_json strata = ordered_json::object();
  for (const auto& [key, counts] : a.stratum_counts()) {
    strata[key.to_string()] = {{"train", counts[0]}, {"test", counts[1]}, {"validation", counts[2]}};
  }
  m.details = {
      {"algorithm", a.algorithm},
      {"method", "stratified apportionment by sex x age quintile (largest remainder)"},
      {"seed", a.seed},
      {"quintile_cuts", cuts},
      {"single_age_band", single_band},
      {"counts",
       {{"train", a.count(Partition::kTrain)},
        {"test", a.count(Partition::kTest)},
        {"validation", a.count(Partition::kValidation)}}},
      {"strata", strata}};
  finish_manifest(m, (dir / "split-manifest.json").string());
  log_event("info", "split.done",
            {{"records", reports.size()}, {"strata", a.stratum_counts().size()}});
  return a;
}

// train-tokenizer ------------------------------------------------------------

wordpiece::Vocabulary train_tokenizer(const TokenizerTrainingOptions& options) {
  if (options.inputs.empty()) throw StageError("train-tokenizer needs at least one input");
  const std::string manifest_path = sidecar_manifest_path(options.output);
  require_fresh(options.output, options.force);
  require_fresh(manifest_path, options.force);
  RunManifest m = start_manifest("train-tokenizer");

  wordpiece::WordCounter counter;
  for (const auto& path : options.inputs) {
    std::ifstream in = open_input(path);
    try {
      records::read_jsonl(in, [&](Report&& r) { counter.add_text(r.text); });
    } catch (const std::exception& e) {
      throw StageError(path + ": " + e.what());
    }
    m.inputs.push_back(manifest::digest_input(path));
  }
  wordpiece::Vocabulary vocab;
  try {
    vocab = wordpiece::train_wordpiece(counter, options.train);
  } catch (const std::exception& e) {
    throw StageError(e.what());
  }
  ensure_parent(options.output);
  wordpiece::save_vocab(vocab, options.output);

  m.outputs.push_back(manifest::digest_output(options.output, dir_of(manifest_path)));
  m.config = {{"vocab_size", options.train.target_size},
              {"min_frequency", options.train.min_frequency}};
  m.details = {{"distinct_words", counter.counts().size()}, {"vocab_entries", vocab.size()}};
  finish_manifest(m, manifest_path);
  log_event("info", "train_tokenizer.done",
            {{"entries", vocab.size()}, {"target", options.train.target_size}});
  return vocab;
}

// tokenize -------------------------------------------------------------------

TokenizeResult tokenize_text(const std::string& vocab_path, const std::string& text) {
  const wordpiece::Vocabulary vocab = read_vocab(vocab_path);
  const wordpiece::EncodedText enc = wordpiece::encode(text, vocab);
  TokenizeResult r;
  r.ids = enc.ids;
  r.truncated = enc.truncated;
  for (auto id : enc.ids) r.tokens.push_back(vocab.token(id));
  return r;
}

// compare --------------------------------------------------------------------

std::vector<selection::CandidateConfig> load_candidates(const std::string& path) {
  std::ifstream in = open_input(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw StageError(path + ": " + e.what());
  }
  const nlohmann::json& list = j.is_array() ? j : j.value("candidates", nlohmann::json::array());
  if (!list.is_array() || list.empty()) throw StageError(path + ": no candidates");
  const fs::path base = fs::path(path).parent_path();

  std::vector<selection::CandidateConfig> out;
  for (const auto& c : list) {
    try {
      selection::CandidateConfig cfg;
      cfg.name = c.at("name").get<std::string>();
      const std::string kind = c.value("tokenizer", std::string("domain"));
      if (kind == "generic") {
        cfg.tokenizer = selection::TokenizerSource::kGenericVocab;
        if (c.contains("vocab")) {
          const fs::path v = c.at("vocab").get<std::string>();
          cfg.vocab_path = (v.is_absolute() ? v : base / v).string();
        }
      } else if (kind == "domain") {
        cfg.tokenizer = selection::TokenizerSource::kDomainTrained;
      } else {
        throw StageError("unknown tokenizer kind '" + kind + "'");
      }
      set_if(c, "vocab_size", cfg.tokenizer_options.target_size);
      set_if(c, "min_frequency", cfg.tokenizer_options.min_frequency);
      if (c.contains("train")) {
        model::TrainConfig base_cfg = selection::CandidateConfig::selection_defaults();
        const auto& t = c.at("train");
        set_if(t, "batch_size", base_cfg.batch_size);
        set_if(t, "learning_rate", base_cfg.learning_rate);
        set_if(t, "beta1", base_cfg.beta1);
        set_if(t, "beta2", base_cfg.beta2);
        set_if(t, "epsilon", base_cfg.epsilon);
        set_if(t, "epochs", base_cfg.epochs);
        set_if(t, "eval_every_steps", base_cfg.eval_every_steps);
        set_if(t, "tfidf", base_cfg.tfidf);
        set_if(t, "class_weights", base_cfg.class_weights);
        set_if(t, "max_sequence_length", base_cfg.max_sequence_length);
        cfg.train = base_cfg;
      }
      if (c.contains("precomputed")) {
        const auto& p = c.at("precomputed");
        cfg.precomputed = selection::PrecomputedResult{
            p.at("precision").get<double>(), p.at("recall").get<double>(), p.at("f1").get<double>(),
            p.at("runtime_seconds").get<double>()};
      }
      out.push_back(std::move(cfg));
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(path + ": " + e.what());
    }
  }
  return out;
}

CompareResult compare(const CompareOptions& options) {
  const std::string manifest_path = sidecar_manifest_path(options.output);
  require_fresh(options.output, options.force);
  require_fresh(manifest_path, options.force);
  RunManifest m = start_manifest("compare");

  const auto candidates = load_candidates(options.candidates_path);
  const std::vector<Report> train = read_reports(options.train);
  const std::vector<Report> test = read_reports(options.test);

  // Stratified draw of the bake-off subsample from the training partition.
  SplitAssignment pool;
  pool.seed = options.seed;
  pool.quintiles = age_quintiles_or_single_band(train);
  for (const Report& r : train) {
    pool.entries[r.vaers_id] = SplitEntry{Partition::kTrain, stratum_of(r, pool.quintiles)};
  }
  std::set<std::string> chosen;
  try {
    chosen = stratified_subsample(pool, Partition::kTrain, options.fraction, options.seed);
  } catch (const std::exception& e) {
    throw StageError(e.what());
  }
  std::vector<Report> subsample;
  for (const Report& r : train) {
    if (chosen.contains(r.vaers_id)) subsample.push_back(r);
  }
  log_event("info", "compare.subsample",
            {{"train", train.size()}, {"subsample", subsample.size()}, {"test", test.size()}});

  CompareResult result;
  selection::ComparisonOptions copts;
  copts.threads = options.threads;
  try {
    result.rows = selection::run_comparison(candidates, subsample, test, options.seed, copts);
    result.best = selection::select_best(result.rows, options.epsilon);
  } catch (const std::exception& e) {
    throw StageError(e.what());
  }
  for (const auto& row : result.rows) {
    if (row.error) log_event("warn", "compare.candidate_failed", {{"name", row.name}, {"error", *row.error}});
  }
  result.table = selection::render_table(result.rows);

  ensure_parent(options.output);
  std::ofstream out = open_output(options.output);
  out << selection::comparison_json(result.rows, result.best, options.epsilon, options.seed,
                                    options.fraction);
  close_output(out, options.output);

  m.inputs.push_back(manifest::digest_input(options.candidates_path));
  m.inputs.push_back(manifest::digest_input(options.train));
  m.inputs.push_back(manifest::digest_input(options.test));
  for (const auto& c : candidates) {
    if (!c.vocab_path.empty() && fs::exists(c.vocab_path)) {
      m.inputs.push_back(manifest::digest_input(c.vocab_path));
    }
  }
  m.outputs.push_back(manifest::digest_output(options.output, dir_of(manifest_path)));
  m.seed = options.seed;
  m.config = {{"fraction", options.fraction}, {"epsilon", options.epsilon}};
  m.details = {{"best", result.best}, {"subsample", subsample.size()}};
  finish_manifest(m, manifest_path);
  return result;
}

// train ----------------------------------------------------------------------

model::TrainConfig train_config_from_json(const nlohmann::json& j, Profile profile) {
  model::TrainConfig c = profile == Profile::kProtocol ? model::TrainConfig::reference_protocol()
                                                    : model::TrainConfig::desk_profile();
  if (!j.is_object()) throw StageError("train config must be a JSON object");
  static const std::set<std::string> kKeys = {
      "batch_size", "learning_rate", "beta1",         "beta2",         "epsilon",
      "epochs",     "eval_every_steps", "seed",       "tfidf",         "class_weights",
      "max_sequence_length"};
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.contains(k)) throw StageError("unknown train config key '" + k + "'");
  }
  try {
    set_if(j, "batch_size", c.batch_size);
    set_if(j, "learning_rate", c.learning_rate);
    set_if(j, "beta1", c.beta1);
    set_if(j, "beta2", c.beta2);
    set_if(j, "epsilon", c.epsilon);
    set_if(j, "epochs", c.epochs);
    set_if(j, "eval_every_steps", c.eval_every_steps);
    set_if(j, "seed", c.seed);
    set_if(j, "tfidf", c.tfidf);
    set_if(j, "class_weights", c.class_weights);
    set_if(j, "max_sequence_length", c.max_sequence_length);
    c.validate();
  } catch (const std::exception& e) {
    throw StageError(std::string("train config: ") + e.what());
  }
  return c;
}

ordered_json train_config_to_json(const model::TrainConfig& c) {
  return ordered_json{{"batch_size", c.batch_size},
                      {"learning_rate", c.learning_rate},
                      {"beta1", c.beta1},
                      {"beta2", c.beta2},
                      {"epsilon", c.epsilon},
                      {"epochs", c.epochs},
                      {"eval_every_steps", c.eval_every_steps},
                      {"seed", c.seed},
                      {"tfidf", c.tfidf},
                      {"class_weights", c.class_weights},
                      {"max_sequence_length", c.max_sequence_length}};
}

TrainOutcome train(const TrainOptions& options) {
  nlohmann::json raw = nlohmann::json::object();
  if (!options.config_path.empty()) {
    std::ifstream in = open_input(options.config_path);
    try {
      raw = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
      throw StageError(options.config_path + ": " + e.what());
    }
  }
  model::TrainConfig config = train_config_from_json(raw, options.profile);
  if (options.seed) config.seed = *options.seed;

  prepare_output_dir(options.output_dir, options.force);
  RunManifest m = start_manifest("train");
  const fs::path dir(options.output_dir);

  const wordpiece::Vocabulary vocab = read_vocab(options.vocab);
  const std::string vocab_digest = manifest::sha256_file(options.vocab);
  const std::vector<Report> train_reports = read_reports(options.train);
  const std::vector<Report> test_reports = read_reports(options.test);
  const PreparedData data = prepare_data(train_reports, test_reports, vocab, config);
  const ordered_json config_json = train_config_to_json(config);
  const char* profile_name = options.profile == Profile::kProtocol ? "protocol" : "desk";

  model::Classifier clf;
  clf.idf = data.idf;
  clf.max_sequence_length = config.max_sequence_length;
  std::vector<std::string> written;
  auto checkpoint_path = [&](std::uint64_t step) {
    return (dir / ("checkpoint-" + std::to_string(step) + ".bin")).string();
  };

  model::TrainResult result;
  try {
    result = model::train(
        data.train, data.test, vocab.size(), config, [&](const model::Checkpoint& cp) {
          clf.params = cp.params;
          const ordered_json meta = {{"step", cp.step},
                                     {"profile", profile_name},
                                     {"config", config_json},
                                     {"vocab_sha256", vocab_digest},
                                     {"test_micro", prf_json(cp.test_metrics.micro)},
                                     {"test_macro", prf_json(cp.test_metrics.macro)}};
          const std::string path = checkpoint_path(cp.step);
          model::save_checkpoint(path, clf, cp.optimizer, cp.step, meta.dump());
          written.push_back(path);
          log_event("info", "train.checkpoint",
                    {{"step", cp.step}, {"f1", cp.test_metrics.micro.f1}});
        });
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(e.what());
  }

  const std::string history_path = (dir / "history.jsonl").string();
  {
    std::ofstream out = open_output(history_path);
    for (const auto& h : result.history) {
      out << ordered_json{{"step", h.step},
                          {"loss", h.loss},
                          {"f1", h.f1},
                          {"precision", h.precision},
                          {"recall", h.recall}}
                 .dump()
          << '\n';
    }
    close_output(out, history_path);
  }

  TrainOutcome outcome;
  outcome.best_checkpoint = checkpoint_path(result.best.step);
  const std::string best_path = (dir / "best.json").string();
  {
    std::ofstream out = open_output(best_path);
    out << ordered_json{{"checkpoint", fs::path(outcome.best_checkpoint).filename().string()},
                        {"step", result.best.step},
                        {"selection", "highest test micro-F1, earliest on ties"},
                        {"test_micro", prf_json(result.best.test_metrics.micro)},
                        {"test_macro", prf_json(result.best.test_metrics.macro)},
                        {"total_steps", result.total_steps},
                        {"initial_loss", result.initial_loss},
                        {"final_loss", result.final_loss}}
               .dump(2)
        << '\n';
    close_output(out, best_path);
  }

  m.inputs.push_back(manifest::digest_input(options.train));
  m.inputs.push_back(manifest::digest_input(options.test));
  m.inputs.push_back(manifest::digest_input(options.vocab));
  if (!options.config_path.empty()) m.inputs.push_back(manifest::digest_input(options.config_path));
  for (const auto& p : written) m.outputs.push_back(manifest::digest_output(p, dir.string()));
  m.outputs.push_back(manifest::digest_output(history_path, dir.string()));
  m.outputs.push_back(manifest::digest_output(best_path, dir.string()));
  m.seed = config.seed;
  m.config = config_json;
  m.config["profile"] = profile_name;
  m.details = {{"train_examples", data.train.size()},
               {"test_examples", data.test.size()},
               {"vocab_size", vocab.size()},
               {"best_step", result.best.step}};
  finish_manifest(m, (dir / "run-manifest.json").string());

  outcome.result = std::move(result);
  return outcome;
}

// evaluate -------------------------------------------------------------------

namespace {

model::CheckpointFile read_checkpoint(const std::string& path) {
  try {
    return model::load_checkpoint(path);
  } catch (const std::exception& e) {
    throw StageError(path + ": " + e.what());
  }
}

void check_vocab_matches(const model::CheckpointFile& ckpt, const std::string& vocab_path) {
  const auto header = nlohmann::json::parse(ckpt.header_json, nullptr, false);
  if (header.is_discarded()) return;
  const auto meta = header.value("metadata", nlohmann::json::object());
  if (!meta.contains("vocab_sha256")) return;
  if (meta.at("vocab_sha256").get<std::string>() != manifest::sha256_file(vocab_path)) {
    throw StageError(vocab_path + " is not the vocabulary the checkpoint was trained with");
  }
}

}  // namespace

EvaluateOutcome evaluate(const EvaluateOptions& options) {
  const std::string manifest_path = sidecar_manifest_path(options.output);
  const fs::path stem = fs::path(options.output).replace_extension();
  const std::string classwise_path = stem.string() + ".classwise.csv";
  const std::string combos_path = stem.string() + ".set-combinations.csv";
  require_fresh(options.output, options.force);
  require_fresh(manifest_path, options.force);
  if (options.csv) {
    require_fresh(classwise_path, options.force);
    require_fresh(combos_path, options.force);
  }
  RunManifest m = start_manifest("evaluate");

  const model::CheckpointFile ckpt = read_checkpoint(options.checkpoint);
  const wordpiece::Vocabulary vocab = read_vocab(options.vocab);
  check_vocab_matches(ckpt, options.vocab);
  const std::vector<Report> reports = read_reports(options.data);
  if (reports.empty()) throw StageError(options.data + " holds no records");

  std::vector<ClassId> preds;
  std::vector<ClassId> golds;
  preds.reserve(reports.size());
  golds.reserve(reports.size());
  try {
    for (const Report& r : reports) {
      preds.push_back(ckpt.classifier.predict(vocab, r.text).first);
      golds.push_back(r.label());
    }
  } catch (const std::exception& e) {
    throw StageError(e.what());
  }

  EvaluateOutcome outcome{eval::classwise_report(preds, golds),
                          eval::set_combination_table(preds, golds)};
  ensure_parent(options.output);
  {
    std::ofstream out = open_output(options.output);
    out << eval::metrics_json(outcome.report, outcome.table, options.average);
    close_output(out, options.output);
  }
  m.outputs.push_back(manifest::digest_output(options.output, dir_of(manifest_path)));
  if (options.csv) {
    std::ofstream cw = open_output(classwise_path);
    eval::write_classwise_csv(cw, outcome.report);
    close_output(cw, classwise_path);
    std::ofstream sc = open_output(combos_path);
    eval::write_set_combination_csv(sc, outcome.table);
    close_output(sc, combos_path);
    m.outputs.push_back(manifest::digest_output(classwise_path, dir_of(manifest_path)));
    m.outputs.push_back(manifest::digest_output(combos_path, dir_of(manifest_path)));
  }

  m.inputs.push_back(manifest::digest_input(options.checkpoint));
  m.inputs.push_back(manifest::digest_input(options.vocab));
  m.inputs.push_back(manifest::digest_input(options.data));
  m.config = {{"average", options.average == eval::Average::kMicro ? "micro" : "weighted"}};
  m.details = {{"examples", outcome.report.examples},
               {"headline_f1", outcome.report.headline(options.average).f1},
               {"checkpoint_step", ckpt.step}};
  finish_manifest(m, manifest_path);
  log_event("info", "evaluate.done",
            {{"examples", outcome.report.examples},
             {"micro_f1", outcome.report.micro.f1},
             {"weighted_f1", outcome.report.weighted.f1}});
  return outcome;
}

// predict --------------------------------------------------------------------

Prediction predict(const std::string& checkpoint, const std::string& vocab_path,
                   const std::string& text) {
  const model::CheckpointFile ckpt = read_checkpoint(checkpoint);
  const wordpiece::Vocabulary vocab = read_vocab(vocab_path);
  check_vocab_matches(ckpt, vocab_path);
  try {
    auto [label, probs] = ckpt.classifier.predict(vocab, text);
    return Prediction{label, probs};
  } catch (const std::exception& e) {
    throw StageError(e.what());
  }
}

// export ---------------------------------------------------------------------

std::size_t export_ids(const ExportOptions& options) {
  const std::string manifest_path = sidecar_manifest_path(options.output);
  require_fresh(options.output, options.force);
  require_fresh(manifest_path, options.force);
  if (fs::absolute(options.input) == fs::absolute(options.output)) {
    throw StageError("output would overwrite input " + options.input);
  }
  RunManifest m = start_manifest("export");
  const wordpiece::Vocabulary vocab = read_vocab(options.vocab);

  std::ifstream in = open_input(options.input);
  ensure_parent(options.output);
  std::ofstream out = open_output(options.output);
  std::size_t n = 0;
  std::size_t truncated = 0;
  try {
    records::read_jsonl(in, [&](Report&& r) {
      const wordpiece::EncodedText enc = wordpiece::encode(r.text, vocab, options.max_sequence_length);
      if (enc.truncated) ++truncated;
      out << ordered_json{{"id", r.vaers_id}, {"label", r.label().value()}, {"input_ids", enc.ids}}.dump()
          << '\n';
      ++n;
    });
  } catch (const std::exception& e) {
    throw StageError(options.input + ": " + e.what());
  }
  close_output(out, options.output);

  m.inputs.push_back(manifest::digest_input(options.input));
  m.inputs.push_back(manifest::digest_input(options.vocab));
  m.outputs.push_back(manifest::digest_output(options.output, dir_of(manifest_path)));
  m.config = {{"max_sequence_length", options.max_sequence_length}};
  m.details = {{"records", n}, {"truncated", truncated}};
  finish_manifest(m, manifest_path);
  return n;
}

}  // namespace daedra::pipeline
