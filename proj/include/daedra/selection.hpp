#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "daedra/corpus.hpp"
#include "daedra/model.hpp"
#include "daedra/tokenizer.hpp"

namespace daedra::selection {

enum class TokenizerSource { kGenericVocab, kDomainTrained };

/// Metrics measured elsewhere (an external trainer, a published table).
struct PrecomputedResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double runtime_seconds = 0.0;
};

struct CandidateConfig {
  std::string name;
  TokenizerSource tokenizer = TokenizerSource::kDomainTrained;
  std::string vocab_path;                       // kGenericVocab, read from disk
  std::optional<wordpiece::Vocabulary> vocab;   // kGenericVocab, takes precedence
  wordpiece::TrainOptions tokenizer_options;    // kDomainTrained
  model::TrainConfig train = selection_defaults();
  std::optional<PrecomputedResult> precomputed;

  /// Bake-off protocol: 3 epochs instead of 5.
  static model::TrainConfig selection_defaults() {
    model::TrainConfig c = model::TrainConfig::desk_profile();
    c.epochs = 3;
    return c;
  }
};

struct ComparisonRow {
  std::string name;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // micro
  double runtime_seconds = 0.0;
  std::size_t vocab_size = 0;
  std::optional<std::string> error;
};

struct ComparisonOptions {
  /// Runtime is part of the ranking, so candidates must run one at a time.
  bool rank_by_runtime = true;
  std::size_t threads = 1;
};

/// Trains and scores every candidate on the same data and seed, then ranks
/// by F1 descending, runtime ascending. A failing candidate yields a row
/// with `error` set instead of aborting the run. Throws on duplicate names
/// or an empty candidate list.
std::vector<ComparisonRow> run_comparison(std::span<const CandidateConfig> candidates,
                                          std::span<const Report> train_subsample,
                                          std::span<const Report> test_set, std::uint64_t seed,
                                          const ComparisonOptions& options = {});

void rank_rows(std::vector<ComparisonRow>& rows);

inline constexpr double kDefaultTieEpsilon = 0.001;

/// Among successful rows whose F1 is within epsilon of the best, the fastest.
std::string select_best(std::span<const ComparisonRow> rows,
                        double epsilon = kDefaultTieEpsilon);

/// Precision, Recall, F1 (4 decimals) and Runtime, in ranked order.
std::string render_table(std::span<const ComparisonRow> rows);
std::string comparison_json(std::span<const ComparisonRow> rows, const std::string& best,
                            double epsilon, std::uint64_t seed, double fraction);

}  // namespace daedra::selection
