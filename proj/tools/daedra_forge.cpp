#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "daedra/labels.hpp"
#include "daedra/manifest.hpp"
#include "daedra/pipeline.hpp"
#include "daedra/records.hpp"

namespace {

namespace pl = daedra::pipeline;

constexpr int kExitOk = 0;
constexpr int kExitStage = 1;
constexpr int kExitUsage = 2;

daedra::Ratios parse_ratios(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--ratios", "not a number: '" + item + "'");
    }
  }
  if (parts.size() != 3) throw CLI::ValidationError("--ratios", "expected train,test,validation");
  return daedra::Ratios{parts[0], parts[1], parts[2]};
}

std::string version_text() {
  std::ostringstream out;
  out << daedra::manifest::kToolName << ' ' << daedra::manifest::kToolVersion
      << " (data schema " << pl::kDataSchemaVersion << ", record schema "
      << daedra::records::kSchemaVersion << ", checkpoint format "
      << daedra::model::kCheckpointFormatVersion << ")";
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VAERS outcome corpus builder, tokenizer trainer and classifier evaluator",
               "daedra-forge"};
  app.set_version_flag("--version", version_text());
  app.require_subcommand(1);

  std::size_t threads = 1;
  bool quiet = false;
  app.add_option("--threads", threads, "Worker threads for stages that parallelise")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Suppress JSON log lines on stderr");

  // ingest
  pl::IngestOptions ingest;
  std::string encoding = "latin1";
  std::string on_error = "skip";
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse VAERSDATA CSVs into labelled JSONL");
  ingest_cmd->add_option("--input", ingest.inputs, "VAERSDATA CSV files")->required();
  ingest_cmd->add_option("--output", ingest.output, "Output JSONL")->required();
  ingest_cmd->add_option("--encoding", encoding, "Text encoding (a UTF-8 BOM wins)")
      ->check(CLI::IsMember({"latin1", "utf8"}));
  ingest_cmd->add_option("--on-error", on_error, "Malformed row policy")
      ->check(CLI::IsMember({"skip", "abort"}));
  ingest_cmd->add_flag("--force", ingest.force, "Overwrite existing outputs");

  // stats
  std::string stats_input;
  auto* stats_cmd = app.add_subcommand("stats", "Record, word and class counts of a JSONL corpus");
  stats_cmd->add_option("--input", stats_input, "JSONL corpus")->required();

  // split
  pl::SplitOptions split;
  std::string ratios = "0.7,0.15,0.15";
  auto* split_cmd = app.add_subcommand("split", "Stratified train/test/validation split");
  split_cmd->add_option("--input", split.input, "JSONL corpus")->required();
  split_cmd->add_option("--seed", split.seed, "Random seed");
  split_cmd->add_option("--ratios", ratios, "train,test,validation");
  split_cmd->add_option("--output", split.output_dir, "Output directory")->required();
  split_cmd->add_flag("--force", split.force, "Overwrite existing outputs");

  // train-tokenizer
  pl::TokenizerTrainingOptions tok;
  auto* tok_cmd = app.add_subcommand("train-tokenizer", "Train a WordPiece vocabulary");
  tok_cmd->add_option("--input", tok.inputs, "JSONL corpora")->required();
  tok_cmd->add_option("--vocab-size", tok.train.target_size, "Target vocabulary size")
      ->check(CLI::PositiveNumber);
  tok_cmd->add_option("--min-freq", tok.train.min_frequency, "Minimum pair frequency");
  tok_cmd->add_option("--output", tok.output, "Output vocab.txt")->required();
  tok_cmd->add_flag("--force", tok.force, "Overwrite existing outputs");

  // tokenize
  std::string tokenize_vocab;
  std::string tokenize_text;
  auto* tokenize_cmd = app.add_subcommand("tokenize", "Show the pieces and ids of a text");
  tokenize_cmd->add_option("--vocab", tokenize_vocab, "vocab.txt")->required();
  tokenize_cmd->add_option("--text", tokenize_text, "Text to tokenize")->required();

  // compare
  pl::CompareOptions compare;
  auto* compare_cmd = app.add_subcommand("compare", "Tokenizer/model bake-off on a subsample");
  compare_cmd->add_option("--candidates", compare.candidates_path, "Candidate JSON file")->required();
  compare_cmd->add_option("--train", compare.train, "Training JSONL")->required();
  compare_cmd->add_option("--test", compare.test, "Test JSONL")->required();
  compare_cmd->add_option("--fraction", compare.fraction, "Training subsample fraction")
      ->check(CLI::Range(0.0, 1.0));
  compare_cmd->add_option("--seed", compare.seed, "Random seed");
  compare_cmd->add_option("--epsilon", compare.epsilon, "F1 tie tolerance for selection")
      ->check(CLI::NonNegativeNumber);
  compare_cmd->add_option("--out", compare.output, "Output comparison.json")->required();
  compare_cmd->add_flag("--force", compare.force, "Overwrite existing outputs");

  // train
  pl::TrainOptions train;
  std::string profile = "desk";
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train the softmax-regression classifier");
  train_cmd->add_option("--train", train.train, "Training JSONL")->required();
  train_cmd->add_option("--test", train.test, "Test JSONL for checkpoint selection")->required();
  train_cmd->add_option("--vocab", train.vocab, "vocab.txt")->required();
  train_cmd->add_option("--config", train.config_path, "JSON training config");
  train_cmd->add_option("--profile", profile, "Defaults: desk (lr 1e-2) or protocol (lr 2e-5)")
      ->check(CLI::IsMember({"desk", "protocol"}));
  auto* seed_opt = train_cmd->add_option("--seed", train_seed, "Overrides the config seed");
  train_cmd->add_option("--out-dir", train.output_dir, "Output directory")->required();
  train_cmd->add_flag("--force", train.force, "Overwrite existing outputs");

  // evaluate
  pl::EvaluateOptions evaluate;
  std::string average = "micro";
  auto* eval_cmd = app.add_subcommand("evaluate", "Class-wise metrics and set-combination table");
  eval_cmd->add_option("--checkpoint", evaluate.checkpoint, "checkpoint-<step>.bin")->required();
  eval_cmd->add_option("--vocab", evaluate.vocab, "vocab.txt")->required();
  eval_cmd->add_option("--data", evaluate.data, "JSONL to score")->required();
  eval_cmd->add_option("--out", evaluate.output, "Output metrics.json")->required();
  eval_cmd->add_flag("--csv", evaluate.csv, "Also write class-wise and set-combination CSVs");
  eval_cmd->add_option("--average", average, "Headline averaging")
      ->check(CLI::IsMember({"micro", "weighted"}));
  eval_cmd->add_flag("--force", evaluate.force, "Overwrite existing outputs");

  // predict
  std::string predict_checkpoint;
  std::string predict_vocab;
  std::string predict_text;
  auto* predict_cmd = app.add_subcommand("predict", "Classify one narrative");
  predict_cmd->add_option("--checkpoint", predict_checkpoint, "checkpoint-<step>.bin")->required();
  predict_cmd->add_option("--vocab", predict_vocab, "vocab.txt")->required();
  predict_cmd->add_option("--text", predict_text, "Narrative")->required();

  // export
  pl::ExportOptions exp;
  auto* export_cmd = app.add_subcommand("export", "Attach token ids to a JSONL partition");
  export_cmd->add_option("--input", exp.input, "JSONL partition")->required();
  export_cmd->add_option("--vocab", exp.vocab, "vocab.txt")->required();
  export_cmd->add_option("--output", exp.output, "Output JSONL")->required();
  export_cmd->add_option("--max-length", exp.max_sequence_length, "Maximum ids per record")
      ->check(CLI::Range(2, 1 << 20));
  export_cmd->add_flag("--force", exp.force, "Overwrite existing outputs");

  // verify
  std::string verify_manifest;
  auto* verify_cmd = app.add_subcommand("verify", "Re-hash the files recorded in a run manifest");
  verify_cmd->add_option("manifest", verify_manifest, "Manifest JSON")->required();

  try {
    app.parse(argc, argv);
    if (*split_cmd) split.ratios = parse_ratios(ratios);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  pl::set_logging(!quiet);

  try {
    if (*ingest_cmd) {
      ingest.parse.encoding = encoding == "utf8" ? daedra::Encoding::kUtf8 : daedra::Encoding::kLatin1;
      ingest.parse.on_error =
          on_error == "abort" ? daedra::ErrorPolicy::kAbort : daedra::ErrorPolicy::kSkipAndCount;
      ingest.threads = threads;
      const auto s = pl::ingest(ingest);
      std::cout << "ingested " << s.kept << " records from " << s.files.size() << " file(s) into "
                << ingest.output << '\n';
      for (const auto& f : s.files) {
        std::cout << "  " << f.path << ": rows " << f.parse.rows << ", malformed "
                  << f.parse.errors << ", empty text " << f.empty_text << ", duplicates "
                  << f.duplicates << ", kept " << f.kept << '\n';
      }
    } else if (*stats_cmd) {
      std::cout << pl::stats_json(pl::stats(stats_input));
    } else if (*split_cmd) {
      const auto a = pl::split(split);
      std::cout << "train " << a.count(daedra::Partition::kTrain) << ", test "
                << a.count(daedra::Partition::kTest) << ", validation "
                << a.count(daedra::Partition::kValidation) << " -> " << split.output_dir << '\n';
    } else if (*tok_cmd) {
      const auto v = pl::train_tokenizer(tok);
      std::cout << "vocabulary of " << v.size() << " entries -> " << tok.output << '\n';
    } else if (*tokenize_cmd) {
      const auto r = pl::tokenize_text(tokenize_vocab, tokenize_text);
      for (std::size_t i = 0; i < r.ids.size(); ++i) {
        std::cout << r.ids[i] << '\t' << r.tokens[i] << '\n';
      }
      if (r.truncated) std::cout << "(truncated)\n";
    } else if (*compare_cmd) {
      compare.threads = threads;
      const auto r = pl::compare(compare);
      std::cout << r.table << "selected: " << r.best << '\n';
    } else if (*train_cmd) {
      train.profile = profile == "protocol" ? pl::Profile::kProtocol : pl::Profile::kDesk;
      if (*seed_opt) train.seed = train_seed;
      const auto r = pl::train(train);
      std::cout << "trained " << r.result.total_steps << " steps; best checkpoint "
                << r.best_checkpoint << " (micro-F1 " << std::fixed << std::setprecision(4)
                << r.result.best.test_metrics.micro.f1 << ")\n";
    } else if (*eval_cmd) {
      evaluate.average = average == "weighted" ? daedra::eval::Average::kWeighted
                                               : daedra::eval::Average::kMicro;
      const auto r = pl::evaluate(evaluate);
      std::cout << std::fixed << std::setprecision(4) << average << " F1 "
                << r.report.headline(evaluate.average).f1 << " over " << r.report.examples
                << " records -> " << evaluate.output << '\n';
    } else if (*predict_cmd) {
      const auto p = pl::predict(predict_checkpoint, predict_vocab, predict_text);
      std::cout << "class " << p.label.value() << " (" << daedra::describe(p.label) << ")\n";
      std::cout << std::fixed << std::setprecision(6);
      for (int c = 0; c < daedra::kNumClasses; ++c) {
        std::cout << "  " << c << '\t' << daedra::describe(daedra::ClassId(c)) << '\t'
                  << p.probabilities[static_cast<std::size_t>(c)] << '\n';
      }
    } else if (*export_cmd) {
      const auto n = pl::export_ids(exp);
      std::cout << "exported " << n << " records -> " << exp.output << '\n';
    } else if (*verify_cmd) {
      const auto r = daedra::manifest::verify(verify_manifest);
      for (const auto& p : r.problems) std::cout << p << '\n';
      std::cout << (r.ok() ? "ok" : "MISMATCH") << ": " << r.files_checked << " file(s) checked\n";
      return r.ok() ? kExitOk : kExitStage;
    }
  } catch (const std::exception& e) {
    pl::log_event("error", "stage.failed", {{"error", e.what()}});
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return kExitOk;
}
