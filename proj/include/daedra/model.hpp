#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "daedra/evaluation.hpp"
#include "daedra/labels.hpp"
#include "daedra/tokenizer.hpp"

namespace daedra::model {

using wordpiece::TokenId;

/// Sparse term weights, ascending by token id, ids unique.
struct FeatureVector {
  std::vector<std::pair<TokenId, double>> entries;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Term frequencies of the non-special ids.
FeatureVector featurize(const wordpiece::EncodedText& encoded);

using Probabilities = std::array<double, kNumClasses>;

/// Softmax regression: weights are class-major, kNumClasses x vocab_size.
struct ModelParams {
  std::size_t vocab_size = 0;
  std::vector<double> weights;
  std::array<double, kNumClasses> bias{};

  static ModelParams zeros(std::size_t vocab_size);

  double& weight(int c, std::size_t j) {
    return weights[static_cast<std::size_t>(c) * vocab_size + j];
  }
  double weight(int c, std::size_t j) const {
    return weights[static_cast<std::size_t>(c) * vocab_size + j];
  }
  bool all_finite() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::array<double, kNumClasses> logits(const ModelParams& p, const FeatureVector& x);
/// softmax(Wx + b) with max subtraction. Throws DimensionError on ids past vocab_size.
Probabilities forward(const ModelParams& p, const FeatureVector& x);

struct Example {
  FeatureVector features;
  ClassId label;
};

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grad;
};

/// Mean (optionally class-weighted) cross-entropy over the batch and its
/// analytic gradient. Per-example contributions are summed in batch order.
LossAndGrad loss_and_grad(const ModelParams& p, std::span<const Example> batch,
                          const std::array<double, kNumClasses>* class_weights = nullptr);

/// Mean cross-entropy only.
double mean_loss(const ModelParams& p, std::span<const Example> data);

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 5;
  std::uint64_t eval_every_steps = 5000;
  std::uint64_t seed = 0;
  bool tfidf = false;
  bool class_weights = false;
  std::size_t max_sequence_length = wordpiece::kDefaultMaxSequenceLength;

  /// Protocol defaults: batch 64, lr 2e-5, Adam(0.9, 0.999, 1e-8), 5 epochs,
  /// evaluation every 5,000 steps.
  static TrainConfig reference_protocol() { return {}; }
  /// Same protocol with a learning rate suited to a linear model.
  static TrainConfig desk_profile() {
    TrainConfig c;
    c.learning_rate = 1e-2;
    return c;
  }
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct AdamState {
  std::vector<double> m;  // weights then bias
  std::vector<double> v;
  std::uint64_t step = 0;

  static AdamState zeros(const ModelParams& p);
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bias-corrected Adam. Throws NonFiniteGradientError (parameters untouched)
/// if any gradient component is NaN or infinite.
void adam_step(ModelParams& p, const ModelParams& grads, AdamState& state,
               const TrainConfig& config);

struct Checkpoint {
  ModelParams params;
  AdamState optimizer;
  std::uint64_t step = 0;
  eval::MetricsReport test_metrics;
};

struct HistoryEntry {
  std::uint64_t step = 0;
  double loss = 0.0;  // mean training-batch loss since the previous evaluation
  double f1 = 0.0;    // micro
  double precision = 0.0;
  double recall = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::vector<HistoryEntry> history;
  std::uint64_t total_steps = 0;
  double initial_loss = 0.0;  // full training set, before the first step
  double final_loss = 0.0;    // full training set, after the last step
};

/// epochs * ceil(n / batch_size).
std::uint64_t total_steps(std::size_t n, const TrainConfig& config);

/// Per-epoch seeded shuffle, short final batch kept. Evaluates on test_set at
/// every multiple of eval_every_steps and after the last step; keeps the
/// checkpoint with the highest micro-F1, earliest on ties.
TrainResult train(std::span<const Example> train_set, std::span<const Example> test_set,
                  std::size_t vocab_size, const TrainConfig& config,
                  const std::function<void(const Checkpoint&)>& on_checkpoint = {});

std::vector<ClassId> predict_all(const ModelParams& p, std::span<const Example> data);
ClassId argmax(const Probabilities& probs);

/// Inverse document frequency, ln((1 + n) / (1 + df)) + 1.
std::vector<double> fit_idf(std::span<const Example> data, std::size_t vocab_size);
void apply_idf(FeatureVector& x, const std::vector<double>& idf);

/// Everything needed to score raw text.
struct Classifier {
  ModelParams params;
  std::optional<std::vector<double>> idf;
  std::size_t max_sequence_length = wordpiece::kDefaultMaxSequenceLength;

  FeatureVector features(const wordpiece::Vocabulary& vocab, std::string_view text) const;
  std::pair<ClassId, Probabilities> predict(const wordpiece::Vocabulary& vocab,
                                            std::string_view text) const;
};

/// Versioned binary container: magic, format version, JSON header, then
/// little-endian doubles (weights, bias, Adam m, Adam v, idf).
struct CheckpointFile {
  Classifier classifier;
  AdamState optimizer;
  std::uint64_t step = 0;
  std::string header_json;  // metadata as stored (metrics, config, vocab digest)
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

void save_checkpoint(const std::string& path, const Classifier& classifier,
                     const AdamState& optimizer, std::uint64_t step,
                     const std::string& metadata_json);
CheckpointFile load_checkpoint(const std::string& path);

}  // namespace daedra::model
