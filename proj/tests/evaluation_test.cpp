#include <cmath>
#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

#include "daedra/evaluation.hpp"
#include "daedra/prng.hpp"
#include "doctest.h"

using namespace daedra;
using namespace daedra::eval;

namespace {

std::vector<ClassId> ids(std::initializer_list<int> v) {
  std::vector<ClassId> out;
  for (int x : v) out.emplace_back(x);
  return out;
}

std::vector<ClassId> random_labels(SplitMix64& rng, std::size_t n) {
  std::vector<ClassId> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(static_cast<int>(rng.below(8)));
  return out;
}

}  // namespace

TEST_CASE("confusion_for_class") {
  const ClassId c(3);
  CHECK(confusion_for_class(ids({3, 3}), ids({3, 3}), c) == ConfusionCounts{2, 0, 0, 0});
  CHECK(confusion_for_class(ids({3}), ids({5}), c) == ConfusionCounts{0, 1, 0, 0});
  CHECK(confusion_for_class(ids({3}), ids({5}), ClassId(5)) == ConfusionCounts{0, 0, 1, 0});
  CHECK(confusion_for_class(ids({}), ids({}), c) == ConfusionCounts{});
  CHECK_THROWS_AS(confusion_for_class(ids({1}), ids({}), c), std::invalid_argument);
}

TEST_CASE("prf") {
  const Prf perfect = prf({1, 0, 0, 0});
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);

  const Prf mixed = prf({2, 1, 1, 0});
  CHECK(mixed.precision == doctest::Approx(2.0 / 3));
  CHECK(mixed.recall == doctest::Approx(2.0 / 3));
  CHECK(mixed.f1 == doctest::Approx(2.0 / 3));

  const Prf none = prf({0, 0, 5, 0});
  CHECK(none.precision == 0.0);
  CHECK_FALSE(none.precision_defined);
  CHECK(none.recall == 0.0);
  CHECK(none.recall_defined);
  CHECK(none.f1 == 0.0);
}

TEST_CASE("f1 is the harmonic mean of precision and recall") {
  SplitMix64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const ConfusionCounts c{rng.below(50), rng.below(50), rng.below(50), rng.below(50)};
    const Prf s = prf(c);
    if (s.precision > 0 && s.recall > 0) {
      CHECK(std::abs(s.f1 - 2 * s.precision * s.recall / (s.precision + s.recall)) <= 1e-12);
    }
  }
}

TEST_CASE("micro_f1 equals accuracy") {
  CHECK(micro_f1(ids({1, 2, 3}), ids({1, 2, 3})) == 1.0);
  CHECK(micro_f1(ids({1, 2, 3}), ids({0, 0, 0})) == 0.0);
  CHECK_THROWS_AS(micro_f1(ids({}), ids({})), std::invalid_argument);

  SplitMix64 rng(6);
  const auto preds = random_labels(rng, 200);
  const auto golds = random_labels(rng, 200);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 200; ++i) correct += preds[i] == golds[i];
  CHECK(std::abs(micro_f1(preds, golds) - correct / 200.0) <= 1e-12);
}

TEST_CASE("classwise_report") {
  SUBCASE("perfect predictions") {
    std::vector<ClassId> labels;
    for (int c = 0; c < 8; ++c)
      for (int k = 0; k <= c; ++k) labels.emplace_back(c);
    const MetricsReport r = classwise_report(labels, labels);
    for (int c = 0; c < 8; ++c) {
      CHECK(r.per_class[static_cast<std::size_t>(c)].scores.f1 == 1.0);
      CHECK(r.per_class[static_cast<std::size_t>(c)].support == static_cast<std::uint64_t>(c + 1));
    }
    CHECK(r.micro.f1 == 1.0);
    CHECK(r.macro.f1 == 1.0);
  }

  SUBCASE("dominant no-event class scores best") {
    // 80 no-event all correct; minority classes half right, rest predicted 0
    std::vector<ClassId> preds;
    std::vector<ClassId> golds;
    for (int i = 0; i < 80; ++i) {
      preds.emplace_back(0);
      golds.emplace_back(0);
    }
    for (int c = 1; c < 8; ++c) {
      for (int k = 0; k < 4; ++k) {
        golds.emplace_back(c);
        preds.emplace_back(k < 2 ? c : 0);
      }
    }
    const MetricsReport r = classwise_report(preds, golds);
    for (int c = 1; c < 8; ++c) CHECK(r.per_class[0].scores.f1 > r.per_class[static_cast<std::size_t>(c)].scores.f1);
    std::uint64_t support = 0;
    for (const auto& m : r.per_class) support += m.support;
    CHECK(support == preds.size());
  }

  SUBCASE("per-event projection ignores other bits") {
    // differ only in the ER bit: death task is perfect
    const auto preds = ids({0, 1, 4, 5, 6, 7, 2});
    const auto golds = ids({1, 0, 5, 4, 7, 6, 3});
    const MetricsReport r = classwise_report(preds, golds);
    const EventMetrics& death = r.per_event[static_cast<std::size_t>(EventKind::kDeath)];
    CHECK(death.scores.f1 == 1.0);
    CHECK(death.counts == ConfusionCounts{4, 0, 0, 3});
    CHECK(r.per_event[static_cast<std::size_t>(EventKind::kEr)].scores.f1 == 0.0);
  }

  SUBCASE("macro skips empty classes, weighted uses support") {
    const auto preds = ids({0, 0, 1, 0});
    const auto golds = ids({0, 0, 1, 1});
    const MetricsReport r = classwise_report(preds, golds);
    const double f0 = prf({2, 1, 0, 1}).f1;
    const double f1 = prf({1, 0, 1, 2}).f1;
    CHECK(r.macro.f1 == doctest::Approx((f0 + f1) / 2));
    CHECK(r.weighted.f1 == doctest::Approx((2 * f0 + 2 * f1) / 4));
  }
}

TEST_CASE("brute-force tally oracle on small instances") {
  SplitMix64 rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng.below(21);
    const auto preds = random_labels(rng, n);
    const auto golds = random_labels(rng, n);
    const MetricsReport r = classwise_report(preds, golds);
    for (int c = 0; c < 8; ++c) {
      std::uint64_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += preds[i].value() == c && golds[i].value() == c;
        fp += preds[i].value() == c && golds[i].value() != c;
        fn += preds[i].value() != c && golds[i].value() == c;
      }
      CHECK(confusion_for_class(preds, golds, ClassId(c)) == ConfusionCounts{tp, fp, fn, n - tp - fp - fn});
      CHECK(r.per_class[static_cast<std::size_t>(c)].support == tp + fn);
    }
    // permutation invariance
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle(std::span<std::size_t>(order), rng);
    std::vector<ClassId> pp, gg;
    for (std::size_t i : order) {
      pp.push_back(preds[i]);
      gg.push_back(golds[i]);
    }
    const MetricsReport q = classwise_report(pp, gg);
    CHECK(q.micro.f1 == r.micro.f1);
    CHECK(q.macro.f1 == r.macro.f1);
  }
}

TEST_CASE("set combination table") {
  CHECK(categorize(ClassId(3), ClassId(1)) == Category::kPartial);
  CHECK(categorize(ClassId(0), ClassId(0)) == Category::kExact);
  CHECK(categorize(ClassId(4), ClassId(1)) == Category::kWrong);
  CHECK(categorize(ClassId(0), ClassId(1)) == Category::kWrong);

  const auto preds = ids({3, 0, 4, 3});
  const auto golds = ids({1, 0, 1, 3});
  const SetCombinationTable t = set_combination_table(preds, golds);
  CHECK(t.total() == 4);
  CHECK(t.counts[3][1] == 1);
  CHECK(t.total(Category::kExact) == 2);
  CHECK(t.total(Category::kPartial) == 1);
  CHECK(t.total(Category::kWrong) == 1);
  CHECK_THROWS_AS(set_combination_table(preds, ids({1})), std::invalid_argument);
}

TEST_CASE("report serialization") {
  const auto preds = ids({0, 1, 1, 3});
  const auto golds = ids({0, 1, 2, 3});
  const MetricsReport r = classwise_report(preds, golds);
  const std::string json = metrics_json(r, set_combination_table(preds, golds), Average::kMicro);
  CHECK(json.find("\"per_event\"") != std::string::npos);
  CHECK(json.find("\"undefined\"") != std::string::npos);  // empty classes flagged

  std::ostringstream classwise;
  write_classwise_csv(classwise, r);
  const std::string cw = classwise.str();
  CHECK(std::count(cw.begin(), cw.end(), '\n') == 9);
  std::ostringstream combos;
  write_set_combination_csv(combos, set_combination_table(preds, golds));
  const std::string sc = combos.str();
  CHECK(std::count(sc.begin(), sc.end(), '\n') == 65);
}
