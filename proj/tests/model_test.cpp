#include <cmath>
#include <filesystem>
#include <numeric>

#include "daedra/model.hpp"
#include "daedra/prng.hpp"
#include "doctest.h"

using namespace daedra;
using namespace daedra::model;

namespace {

FeatureVector fv(std::vector<std::pair<TokenId, double>> entries) { return FeatureVector{std::move(entries)}; }

ModelParams random_params(std::size_t vocab, SplitMix64& rng, double scale = 1.0) {
  ModelParams p = ModelParams::zeros(vocab);
  for (double& w : p.weights) w = scale * (2 * rng.uniform() - 1);
  for (double& b : p.bias) b = scale * (2 * rng.uniform() - 1);
  return p;
}

std::vector<Example> random_batch(std::size_t vocab, std::size_t n, SplitMix64& rng) {
  std::vector<Example> batch;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<TokenId, double> counts;
    const auto k = 1 + rng.below(4);
    for (std::size_t j = 0; j < k; ++j) counts[static_cast<TokenId>(rng.below(vocab))] += 1 + rng.below(3);
    batch.push_back({FeatureVector{{counts.begin(), counts.end()}}, ClassId(static_cast<int>(rng.below(8)))});
  }
  return batch;
}

// Max over components of |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
double max_relative_fd_error(ModelParams p, const std::vector<Example>& batch,
                             const std::array<double, kNumClasses>* weights = nullptr) {
  const LossAndGrad analytic = loss_and_grad(p, batch, weights);
  constexpr double h = 1e-4;
  double worst = 0.0;
  auto probe = [&](double& param, double g) {
    const double saved = param;
    param = saved + h;
    const double up = loss_and_grad(p, batch, weights).loss;
    param = saved - h;
    const double down = loss_and_grad(p, batch, weights).loss;
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(g), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(g - numeric) / denom);
  };
  for (std::size_t i = 0; i < p.weights.size(); ++i) probe(p.weights[i], analytic.grad.weights[i]);
  for (std::size_t c = 0; c < kNumClasses; ++c) probe(p.bias[c], analytic.grad.bias[c]);
  return worst;
}

// Two classes with disjoint supports: class 0 uses ids 5..9, class 1 ids 10..14.
std::vector<Example> separable(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::map<TokenId, double> counts;
    for (int k = 0; k < 3; ++k) counts[static_cast<TokenId>(5 + 5 * label + rng.below(5))] += 1;
    counts[static_cast<TokenId>(15 + rng.below(5))] += 1;  // shared noise
    out.push_back({FeatureVector{{counts.begin(), counts.end()}}, ClassId(label)});
  }
  return out;
}

}  // namespace

TEST_CASE("featurize") {
  const wordpiece::EncodedText e{{wordpiece::kClsId, 7, 7, 9, wordpiece::kSepId}, false};
  CHECK(featurize(e) == fv({{7, 2.0}, {9, 1.0}}));
  CHECK(featurize({{wordpiece::kClsId, wordpiece::kSepId}, false}).entries.empty());
  const wordpiece::EncodedText shuffled{{wordpiece::kClsId, 9, 7, wordpiece::kUnkId, 7, wordpiece::kSepId}, false};
  const wordpiece::EncodedText sorted{{wordpiece::kClsId, 7, 7, 9, wordpiece::kUnkId, wordpiece::kSepId}, false};
  CHECK(featurize(shuffled) == featurize(sorted));
}

TEST_CASE("forward") {
  const ModelParams zero = ModelParams::zeros(20);
  for (double p : forward(zero, fv({{3, 2.0}}))) CHECK(p == doctest::Approx(1.0 / 8));

  ModelParams biased = ModelParams::zeros(20);
  biased.bias[3] = 1000;
  const Probabilities probs = forward(biased, fv({}));
  CHECK(probs[3] == doctest::Approx(1.0));
  CHECK(argmax(probs).value() == 3);

  CHECK_THROWS_AS(forward(zero, fv({{20, 1.0}})), DimensionError);

  SplitMix64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    ModelParams p = random_params(12, rng, 5.0);
    const auto x = random_batch(12, 1, rng)[0].features;
    const Probabilities pr = forward(p, x);
    CHECK(std::abs(std::accumulate(pr.begin(), pr.end(), 0.0) - 1.0) <= 1e-9);
    for (double v : pr) CHECK(v >= 0.0);
    const ClassId before = argmax(pr);
    for (double& b : p.bias) b += 123.0;
    CHECK(argmax(forward(p, x)) == before);
  }
}

TEST_CASE("loss_and_grad") {
  const ModelParams zero = ModelParams::zeros(10);
  const std::vector<Example> one = {{fv({{1, 1.0}}), ClassId(2)}};
  CHECK(loss_and_grad(zero, one).loss == doctest::Approx(std::log(8.0)));
  CHECK_THROWS_AS(loss_and_grad(zero, std::vector<Example>{}), std::invalid_argument);

  SplitMix64 rng(21);
  const ModelParams p = random_params(10, rng);
  const auto batch = random_batch(10, 6, rng);
  std::vector<Example> doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  const LossAndGrad a = loss_and_grad(p, batch);
  const LossAndGrad b = loss_and_grad(p, doubled);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
  for (std::size_t i = 0; i < a.grad.weights.size(); ++i)
    CHECK(a.grad.weights[i] == doctest::Approx(b.grad.weights[i]).epsilon(1e-12));
}

TEST_CASE("loss_and_grad agrees with central finite differences") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    ModelParams p = random_params(10, rng);
    const auto batch = random_batch(10, 5, rng);
    CHECK(max_relative_fd_error(p, batch) < 1e-5);
  }
  std::array<double, kNumClasses> weights{};
  for (std::size_t c = 0; c < kNumClasses; ++c) weights[c] = 0.5 + 0.25 * static_cast<double>(c);
  ModelParams p = random_params(10, rng);
  CHECK(max_relative_fd_error(p, random_batch(10, 7, rng), &weights) < 1e-5);
}

TEST_CASE("adam_step") {
  TrainConfig cfg = TrainConfig::reference_protocol();
  CHECK(cfg.learning_rate == 2e-5);
  CHECK(cfg.beta1 == 0.9);
  CHECK(cfg.beta2 == 0.999);
  CHECK(cfg.epsilon == 1e-8);
  CHECK(cfg.batch_size == 64);
  CHECK(cfg.epochs == 5);
  CHECK(cfg.eval_every_steps == 5000);

  SUBCASE("zero gradient leaves parameters and decays moments") {
    SplitMix64 rng(1);
    ModelParams p = random_params(4, rng);
    const ModelParams before = p;
    AdamState s = AdamState::zeros(p);
    for (double& m : s.m) m = 1.0;
    for (double& v : s.v) v = 1.0;
    // nonzero moments would move params, so start from zero moments for the
    // "unchanged" half and check decay separately
    AdamState fresh = AdamState::zeros(p);
    adam_step(p, ModelParams::zeros(4), fresh, cfg);
    CHECK(p == before);
    ModelParams q = before;
    adam_step(q, ModelParams::zeros(4), s, cfg);
    CHECK(s.m[0] == doctest::Approx(0.9));
    CHECK(s.v[0] == doctest::Approx(0.999));
  }

  SUBCASE("first step moves each coordinate by about lr against the gradient") {
    ModelParams p = ModelParams::zeros(3);
    ModelParams g = ModelParams::zeros(3);
    g.weights[0] = 0.5;
    g.weights[1] = -2.0;
    g.bias[0] = 1e-3;
    AdamState s = AdamState::zeros(p);
    cfg.learning_rate = 0.1;
    adam_step(p, g, s, cfg);
    // m_hat = g, v_hat = g^2  =>  delta = -lr * g / (|g| + eps)
    CHECK(p.weights[0] == doctest::Approx(-0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
    CHECK(p.weights[1] == doctest::Approx(0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
    CHECK(p.bias[0] == doctest::Approx(-0.1 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-12));
    CHECK(p.weights[2] == 0.0);
    CHECK(s.step == 1);
  }

  SUBCASE("non-finite gradient aborts without touching parameters") {
    ModelParams p = ModelParams::zeros(3);
    ModelParams g = ModelParams::zeros(3);
    g.weights[4] = std::nan("");
    AdamState s = AdamState::zeros(p);
    CHECK_THROWS_AS(adam_step(p, g, s, cfg), NonFiniteGradientError);
    CHECK(p == ModelParams::zeros(3));
    CHECK(s.step == 0);
  }
}

TEST_CASE("train on a separable two-class set") {
  const auto train_set = separable(200, 1);
  const auto test_set = separable(100, 2);
  TrainConfig cfg = TrainConfig::desk_profile();
  cfg.eval_every_steps = 5;
  cfg.seed = 13;
  std::vector<std::uint64_t> seen_steps;
  const TrainResult r = train(train_set, test_set, 20, cfg,
                              [&](const Checkpoint& c) { seen_steps.push_back(c.step); });
  CHECK(r.total_steps == 5 * 4);
  CHECK(r.total_steps == total_steps(200, cfg));
  CHECK(r.best.test_metrics.micro.f1 >= 0.99);
  CHECK(r.final_loss < r.initial_loss);
  CHECK(seen_steps == std::vector<std::uint64_t>{5, 10, 15, 20});
  for (const auto& h : r.history) CHECK(r.best.test_metrics.micro.f1 >= h.f1);

  // same seed, same trajectory
  const TrainResult again = train(train_set, test_set, 20, cfg);
  CHECK(again.best.params == r.best.params);
  CHECK(again.best.step == r.best.step);
}

TEST_CASE("train: evaluation cadence and short final batch") {
  const auto train_set = separable(130, 3);
  const auto test_set = separable(20, 4);
  TrainConfig cfg = TrainConfig::desk_profile();
  cfg.epochs = 2;
  const TrainResult once = train(train_set, test_set, 20, cfg);
  CHECK(once.total_steps == 2 * 3);  // 130 / 64 -> 3 batches per epoch
  REQUIRE(once.history.size() == 1);
  CHECK(once.history[0].step == 6);

  cfg.eval_every_steps = 4;
  const TrainResult periodic = train(train_set, test_set, 20, cfg);
  REQUIRE(periodic.history.size() == 2);
  CHECK(periodic.history[0].step == 4);
  CHECK(periodic.history[1].step == 6);

  CHECK_THROWS_AS(train(std::vector<Example>{}, test_set, 20, cfg), std::invalid_argument);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(train_set, test_set, 20, cfg), std::invalid_argument);
}

TEST_CASE("class weights and tf-idf are opt-in") {
  const auto train_set = separable(64, 5);
  TrainConfig cfg = TrainConfig::desk_profile();
  cfg.epochs = 1;
  cfg.class_weights = true;
  CHECK(train(train_set, train_set, 20, cfg).best.params.all_finite());

  const auto idf = fit_idf(train_set, 20);
  CHECK(idf[0] == doctest::Approx(std::log(65.0) + 1.0));  // unseen id
  FeatureVector x = fv({{5, 2.0}});
  apply_idf(x, idf);
  CHECK(x.entries[0].second == doctest::Approx(2.0 * idf[5]));
}

TEST_CASE("Classifier::predict") {
  std::vector<std::string> tokens(wordpiece::kSpecialTokens.begin(), wordpiece::kSpecialTokens.end());
  for (const char* t : {"neutral", "filler", "intussusception", "fever"}) tokens.emplace_back(t);
  const auto vocab = wordpiece::Vocabulary::from_tokens(tokens);

  Classifier clf;
  clf.params = ModelParams::zeros(vocab.size());
  clf.params.bias[1] = 0.5;
  CHECK(clf.predict(vocab, "").first.value() == 1);

  const TokenId intus = *vocab.find("intussusception");
  clf.params.weight(2, static_cast<std::size_t>(intus)) = 3.0;
  CHECK(clf.predict(vocab, "neutral filler").first.value() == 1);
  CHECK(clf.predict(vocab, "neutral intussusception filler").first.value() == 2);
  CHECK(clf.predict(vocab, "fever intussusception neutral").second ==
        clf.predict(vocab, "neutral fever intussusception").second);
}

TEST_CASE("checkpoint round trip") {
  SplitMix64 rng(9);
  Classifier clf;
  clf.params = random_params(30, rng);
  clf.idf = std::vector<double>(30, 1.5);
  clf.max_sequence_length = 128;
  AdamState s = AdamState::zeros(clf.params);
  s.step = 17;
  s.m[3] = 0.25;
  s.v[40] = 0.125;

  const auto path = std::filesystem::temp_directory_path() / "daedra_ckpt_test.bin";
  save_checkpoint(path.string(), clf, s, 17, R"({"note":"x"})");
  const CheckpointFile f = load_checkpoint(path.string());
  CHECK(f.classifier.params == clf.params);
  CHECK(f.classifier.idf == clf.idf);
  CHECK(f.classifier.max_sequence_length == 128);
  CHECK(f.optimizer == s);
  CHECK(f.step == 17);
  CHECK(f.header_json.find("\"note\":\"x\"") != std::string::npos);
  std::filesystem::remove(path);
  CHECK_THROWS(load_checkpoint(path.string()));
}
