#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>

#include "daedra/labels.hpp"

namespace daedra::eval {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Ratios whose denominator is zero are reported as 0 and flagged undefined.
struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
};

/// Throws std::invalid_argument when the spans differ in length.
ConfusionCounts confusion_for_class(std::span<const ClassId> preds,
                                    std::span<const ClassId> golds, ClassId c);

/// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = 2tp/(2tp+fp+fn).
Prf prf(const ConfusionCounts& counts);

/// F1 over one-vs-rest counts pooled across all classes. Equals accuracy for
/// single-label data. Throws on empty or mismatched input.
double micro_f1(std::span<const ClassId> preds, std::span<const ClassId> golds);

struct ClassMetrics {
  Prf scores;
  std::uint64_t support = 0;
};

struct EventMetrics {
  ConfusionCounts counts;
  Prf scores;
};

enum class Average { kMicro, kWeighted };

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  Prf micro;
  Prf macro;     // unweighted mean over classes with support > 0
  Prf weighted;  // support-weighted mean
  std::array<EventMetrics, 3> per_event{};  // indexed by EventKind
  std::uint64_t examples = 0;

  const Prf& headline(Average a) const { return a == Average::kMicro ? micro : weighted; }
};

MetricsReport classwise_report(std::span<const ClassId> preds, std::span<const ClassId> golds);

enum class Category { kExact, kPartial, kWrong };
std::string_view to_string(Category c);

/// exact: same class; partial: different but sharing an event; wrong otherwise.
Category categorize(ClassId predicted, ClassId actual);

struct SetCombinationTable {
  /// counts[predicted][actual]
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const;
  std::uint64_t total(Category c) const;
};

SetCombinationTable set_combination_table(std::span<const ClassId> preds,
                                          std::span<const ClassId> golds);

/// JSON object mirroring MetricsReport plus the 8x8 table.
std::string metrics_json(const MetricsReport& report, const SetCombinationTable& table,
                         Average headline);
/// class, outcomes, precision, recall, f1, support (one row per class).
void write_classwise_csv(std::ostream& out, const MetricsReport& report);
/// predicted, actual, count, category (all 64 cells).
void write_set_combination_csv(std::ostream& out, const SetCombinationTable& table);

}  // namespace daedra::eval
