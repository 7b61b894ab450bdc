#include "daedra/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "daedra/prng.hpp"

namespace daedra::model {

FeatureVector featurize(const wordpiece::EncodedText& encoded) {
  std::map<TokenId, double> counts;
  for (TokenId id : encoded.ids) {
    if (!wordpiece::is_special(id)) counts[id] += 1.0;
  }
  FeatureVector x;
  x.entries.assign(counts.begin(), counts.end());
  return x;
}

ModelParams ModelParams::zeros(std::size_t vocab_size) {
  ModelParams p;
  p.vocab_size = vocab_size;
  p.weights.assign(vocab_size * kNumClasses, 0.0);
  return p;
}

bool ModelParams::all_finite() const {
  const auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(weights.begin(), weights.end(), finite) &&
         std::all_of(bias.begin(), bias.end(), finite);
}

std::array<double, kNumClasses> logits(const ModelParams& p, const FeatureVector& x) {
  std::array<double, kNumClasses> z = p.bias;
  for (const auto& [id, value] : x.entries) {
    if (id < 0 || static_cast<std::size_t>(id) >= p.vocab_size) {
      throw DimensionError("feature id " + std::to_string(id) + " outside vocabulary of " +
                           std::to_string(p.vocab_size));
    }
    for (int c = 0; c < kNumClasses; ++c) z[static_cast<std::size_t>(c)] += p.weight(c, static_cast<std::size_t>(id)) * value;
  }
  return z;
}

namespace {

Probabilities softmax(const std::array<double, kNumClasses>& z) {
  const double top = *std::max_element(z.begin(), z.end());
  Probabilities out{};
  double sum = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    out[c] = std::exp(z[c] - top);
    sum += out[c];
  }
  for (double& v : out) v /= sum;
  return out;
}

// log-softmax of the gold class, computed without forming probabilities.
double gold_log_prob(const std::array<double, kNumClasses>& z, int gold) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - top);
  return z[static_cast<std::size_t>(gold)] - top - std::log(sum);
}

template <typename Get>
double accumulate_batch(const ModelParams& p, std::size_t n, Get&& get,
                        const std::array<double, kNumClasses>* class_weights,
                        ModelParams* grad) {
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Example& ex = get(i);
    const auto z = logits(p, ex.features);
    const int gold = ex.label.value();
    const double w = class_weights ? (*class_weights)[static_cast<std::size_t>(gold)] : 1.0;
    loss += -w * gold_log_prob(z, gold);
    if (grad == nullptr) continue;
    const Probabilities probs = softmax(z);
    for (int c = 0; c < kNumClasses; ++c) {
      const double delta = w * scale * (probs[static_cast<std::size_t>(c)] - (c == gold ? 1.0 : 0.0));
      grad->bias[static_cast<std::size_t>(c)] += delta;
      for (const auto& [id, value] : ex.features.entries) {
        grad->weight(c, static_cast<std::size_t>(id)) += delta * value;
      }
    }
  }
  return loss * scale;
}

}  // namespace

Probabilities forward(const ModelParams& p, const FeatureVector& x) {
  return softmax(logits(p, x));
}

LossAndGrad loss_and_grad(const ModelParams& p, std::span<const Example> batch,
                          const std::array<double, kNumClasses>* class_weights) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad needs a non-empty batch");
  LossAndGrad out;
  out.grad = ModelParams::zeros(p.vocab_size);
  out.loss = accumulate_batch(
      p, batch.size(), [&](std::size_t i) -> const Example& { return batch[i]; },
      class_weights, &out.grad);
  return out;
}

double mean_loss(const ModelParams& p, std::span<const Example> data) {
  if (data.empty()) return 0.0;
  return accumulate_batch(
      p, data.size(), [&](std::size_t i) -> const Example& { return data[i]; }, nullptr,
      nullptr);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (eval_every_steps < 1) throw std::invalid_argument("eval_every_steps must be >= 1");
  if (max_sequence_length < 2) throw std::invalid_argument("max_sequence_length must be >= 2");
}

AdamState AdamState::zeros(const ModelParams& p) {
  AdamState s;
  s.m.assign(p.weights.size() + kNumClasses, 0.0);
  s.v.assign(p.weights.size() + kNumClasses, 0.0);
  return s;
}

void adam_step(ModelParams& p, const ModelParams& grads, AdamState& state,
               const TrainConfig& config) {
  const std::size_t nw = p.weights.size();
  if (grads.weights.size() != nw || state.m.size() != nw + kNumClasses ||
      state.v.size() != nw + kNumClasses) {
    throw DimensionError("adam_step: parameter, gradient and state shapes disagree");
  }
  for (std::size_t i = 0; i < nw + kNumClasses; ++i) {
    const double g = i < nw ? grads.weights[i] : grads.bias[i - nw];
    if (!std::isfinite(g)) {
      throw NonFiniteGradientError("non-finite gradient at component " + std::to_string(i) +
                                   " (step " + std::to_string(state.step + 1) + ")");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(config.beta1, t);
  const double correct2 = 1.0 - std::pow(config.beta2, t);
  auto update = [&](double& param, double g, std::size_t i) {
    double& m = state.m[i];
    double& v = state.v[i];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    const double m_hat = m / correct1;
    const double v_hat = v / correct2;
    param -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  };
  for (std::size_t i = 0; i < nw; ++i) update(p.weights[i], grads.weights[i], i);
  for (std::size_t c = 0; c < kNumClasses; ++c) update(p.bias[c], grads.bias[c], nw + c);
}

std::uint64_t total_steps(std::size_t n, const TrainConfig& config) {
  const std::uint64_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  return per_epoch * config.epochs;
}

ClassId argmax(const Probabilities& probs) {
  return ClassId(static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin()));
}

std::vector<ClassId> predict_all(const ModelParams& p, std::span<const Example> data) {
  std::vector<ClassId> out;
  out.reserve(data.size());
  for (const Example& ex : data) out.push_back(argmax(forward(p, ex.features)));
  return out;
}

TrainResult train(std::span<const Example> train_set, std::span<const Example> test_set,
                  std::size_t vocab_size, const TrainConfig& config,
                  const std::function<void(const Checkpoint&)>& on_checkpoint) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (test_set.empty()) throw std::invalid_argument("test set is empty");

  std::array<double, kNumClasses> weights{};
  const std::array<double, kNumClasses>* class_weights = nullptr;
  if (config.class_weights) {
    std::array<std::size_t, kNumClasses> counts{};
    for (const Example& ex : train_set) ++counts[static_cast<std::size_t>(ex.label.value())];
    const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      weights[c] = counts[c] == 0 ? 0.0
                                  : static_cast<double>(train_set.size()) /
                                        (static_cast<double>(present) * static_cast<double>(counts[c]));
    }
    class_weights = &weights;
  }

  std::vector<ClassId> golds;
  golds.reserve(test_set.size());
  for (const Example& ex : test_set) golds.push_back(ex.label);

  TrainResult result;
  ModelParams params = ModelParams::zeros(vocab_size);
  AdamState state = AdamState::zeros(params);
  result.initial_loss = mean_loss(params, train_set);

  double best_f1 = -1.0;
  double interval_loss = 0.0;
  std::size_t interval_batches = 0;
  std::uint64_t step = 0;
  std::uint64_t last_eval = 0;

  auto evaluate = [&] {
    const std::vector<ClassId> preds = predict_all(params, test_set);
    Checkpoint cp{params, state, step, eval::classwise_report(preds, golds)};
    HistoryEntry h;
    h.step = step;
    h.loss = interval_batches ? interval_loss / static_cast<double>(interval_batches) : 0.0;
    h.f1 = cp.test_metrics.micro.f1;
    h.precision = cp.test_metrics.micro.precision;
    h.recall = cp.test_metrics.micro.recall;
    result.history.push_back(h);
    interval_loss = 0.0;
    interval_batches = 0;
    last_eval = step;
    if (on_checkpoint) on_checkpoint(cp);
    if (h.f1 > best_f1) {
      best_f1 = h.f1;
      result.best = std::move(cp);
    }
  };

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(mix64(config.seed ^ mix64(epoch + 1)));
    shuffle(std::span<std::size_t>(order), rng);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      ModelParams grad = ModelParams::zeros(vocab_size);
      const double loss = accumulate_batch(
          params, n, [&](std::size_t i) -> const Example& { return train_set[order[start + i]]; },
          class_weights, &grad);
      adam_step(params, grad, state, config);
      ++step;
      interval_loss += loss;
      ++interval_batches;
      if (step % config.eval_every_steps == 0) evaluate();
    }
  }
  if (last_eval != step) evaluate();

  result.total_steps = step;
  result.final_loss = mean_loss(params, train_set);
  return result;
}

std::vector<double> fit_idf(std::span<const Example> data, std::size_t vocab_size) {
  std::vector<double> df(vocab_size, 0.0);
  for (const Example& ex : data) {
    for (const auto& [id, value] : ex.features.entries) {
      if (static_cast<std::size_t>(id) < vocab_size) df[static_cast<std::size_t>(id)] += 1.0;
    }
  }
  const double n = static_cast<double>(data.size());
  std::vector<double> idf(vocab_size);
  for (std::size_t j = 0; j < vocab_size; ++j) idf[j] = std::log((1.0 + n) / (1.0 + df[j])) + 1.0;
  return idf;
}

void apply_idf(FeatureVector& x, const std::vector<double>& idf) {
  for (auto& [id, value] : x.entries) {
    if (static_cast<std::size_t>(id) < idf.size()) value *= idf[static_cast<std::size_t>(id)];
  }
}

FeatureVector Classifier::features(const wordpiece::Vocabulary& vocab,
                                   std::string_view text) const {
  FeatureVector x = featurize(wordpiece::encode(text, vocab, max_sequence_length));
  if (idf) apply_idf(x, *idf);
  return x;
}

std::pair<ClassId, Probabilities> Classifier::predict(const wordpiece::Vocabulary& vocab,
                                                      std::string_view text) const {
  const Probabilities probs = forward(params, features(vocab, text));
  return {argmax(probs), probs};
}

}  // namespace daedra::model
