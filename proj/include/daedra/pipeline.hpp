#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "daedra/corpus.hpp"
#include "daedra/evaluation.hpp"
#include "daedra/model.hpp"
#include "daedra/selection.hpp"
#include "daedra/splitter.hpp"
#include "json.hpp"

namespace daedra::pipeline {

/// Version of the on-disk formats (JSONL records, vocab, checkpoints, manifests).
inline constexpr int kDataSchemaVersion = 1;

/// Any failure inside a stage; the CLI maps it to exit code 1.
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line-delimited JSON on standard error.
void log_event(std::string_view level, std::string_view event,
               const nlohmann::ordered_json& fields = nlohmann::ordered_json::object());
void set_logging(bool enabled);

// ingest ---------------------------------------------------------------------

struct IngestOptions {
  std::vector<std::string> inputs;
  std::string output;
  ParseOptions parse;
  std::size_t threads = 1;
  bool force = false;
};

struct IngestFileSummary {
  std::string path;
  ParseSummary parse;
  std::size_t kept = 0;
  std::size_t empty_text = 0;
  std::size_t duplicates = 0;
};

struct IngestSummary {
  std::vector<IngestFileSummary> files;
  std::size_t kept = 0;
};

/// Parses each VAERSDATA CSV, drops blank narratives and repeated ids (first
/// occurrence wins, in input order) and writes the reports as JSONL.
IngestSummary ingest(const IngestOptions& options);

// stats ----------------------------------------------------------------------

std::string stats_json(const CorpusStats& stats);
CorpusStats stats(const std::string& input);

// split ----------------------------------------------------------------------

struct SplitOptions {
  std::string input;
  std::string output_dir;
  Ratios ratios;
  std::uint64_t seed = 0;
  bool force = false;
};

/// Writes train.jsonl, test.jsonl, validation.jsonl (input order preserved
/// within each) and split-manifest.json.
SplitAssignment split(const SplitOptions& options);

// train-tokenizer ------------------------------------------------------------

struct TokenizerTrainingOptions {
  std::vector<std::string> inputs;
  std::string output;
  wordpiece::TrainOptions train;
  bool force = false;
};

wordpiece::Vocabulary train_tokenizer(const TokenizerTrainingOptions& options);

// tokenize -------------------------------------------------------------------

struct TokenizeResult {
  std::vector<std::string> tokens;
  std::vector<wordpiece::TokenId> ids;  // includes [CLS] and [SEP]
  bool truncated = false;
};

TokenizeResult tokenize_text(const std::string& vocab_path, const std::string& text);

// compare --------------------------------------------------------------------

struct CompareOptions {
  std::string candidates_path;
  std::string train;
  std::string test;
  std::string output;
  double fraction = 0.10;
  std::uint64_t seed = 0;
  double epsilon = selection::kDefaultTieEpsilon;
  std::size_t threads = 1;
  bool force = false;
};

struct CompareResult {
  std::vector<selection::ComparisonRow> rows;
  std::string best;
  std::string table;
};

/// Candidate file: {"candidates": [{"name", "tokenizer": "domain"|"generic",
/// "vocab", "vocab_size", "min_frequency", "train": {...}, "precomputed": {...}}]}.
std::vector<selection::CandidateConfig> load_candidates(const std::string& path);
CompareResult compare(const CompareOptions& options);

// train ----------------------------------------------------------------------

enum class Profile { kDesk, kProtocol };

/// Profile defaults, then every key present in the JSON object.
model::TrainConfig train_config_from_json(const nlohmann::json& j, Profile profile);
nlohmann::ordered_json train_config_to_json(const model::TrainConfig& c);

struct TrainOptions {
  std::string train;
  std::string test;
  std::string vocab;
  std::string config_path;  // optional
  Profile profile = Profile::kDesk;
  std::optional<std::uint64_t> seed;  // overrides the config
  std::string output_dir;
  bool force = false;
};

struct TrainOutcome {
  model::TrainResult result;
  std::string best_checkpoint;  // path
};

/// Writes checkpoint-<step>.bin at every evaluation, history.jsonl, best.json
/// and run-manifest.json.
TrainOutcome train(const TrainOptions& options);

// evaluate -------------------------------------------------------------------

struct EvaluateOptions {
  std::string checkpoint;
  std::string vocab;
  std::string data;
  std::string output;
  bool csv = false;  // also <output stem>.classwise.csv and .set-combinations.csv
  eval::Average average = eval::Average::kMicro;
  bool force = false;
};

struct EvaluateOutcome {
  eval::MetricsReport report;
  eval::SetCombinationTable table;
};

EvaluateOutcome evaluate(const EvaluateOptions& options);

// predict --------------------------------------------------------------------

struct Prediction {
  ClassId label;
  model::Probabilities probabilities;
};

Prediction predict(const std::string& checkpoint, const std::string& vocab, const std::string& text);

// export ---------------------------------------------------------------------

struct ExportOptions {
  std::string input;
  std::string vocab;
  std::string output;
  std::size_t max_sequence_length = wordpiece::kDefaultMaxSequenceLength;
  bool force = false;
};

/// One {"id", "label", "input_ids"} line per record. Returns the record count.
std::size_t export_ids(const ExportOptions& options);

// shared ---------------------------------------------------------------------

/// Throws StageError if `path` exists and `force` is false.
void require_fresh(const std::string& path, bool force);
/// `<output>.run.json`, the manifest path for single-file stages.
std::string sidecar_manifest_path(const std::string& output);

}  // namespace daedra::pipeline
