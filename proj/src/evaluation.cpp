#include "daedra/evaluation.hpp"

#include <stdexcept>

#include "json.hpp"

namespace daedra::eval {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

namespace {

void check_lengths(std::span<const ClassId> preds, std::span<const ClassId> golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("prediction/gold length mismatch: " +
                                std::to_string(preds.size()) + " vs " +
                                std::to_string(golds.size()));
  }
}

double ratio(std::uint64_t num, std::uint64_t den, bool& defined) {
  defined = den != 0;
  return defined ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

Prf mean_of(const std::array<ClassMetrics, kNumClasses>& per_class, bool weighted) {
  Prf out;
  double total = 0.0;
  for (const ClassMetrics& m : per_class) {
    if (m.support == 0) continue;
    const double w = weighted ? static_cast<double>(m.support) : 1.0;
    out.precision += w * m.scores.precision;
    out.recall += w * m.scores.recall;
    out.f1 += w * m.scores.f1;
    total += w;
  }
  if (total == 0.0) {
    out.precision_defined = out.recall_defined = out.f1_defined = false;
    return out;
  }
  out.precision /= total;
  out.recall /= total;
  out.f1 /= total;
  return out;
}

}  // namespace

ConfusionCounts confusion_for_class(std::span<const ClassId> preds,
                                    std::span<const ClassId> golds, ClassId c) {
  check_lengths(preds, golds);
  ConfusionCounts out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == c;
    const bool g = golds[i] == c;
    if (p && g) {
      ++out.tp;
    } else if (p) {
      ++out.fp;
    } else if (g) {
      ++out.fn;
    } else {
      ++out.tn;
    }
  }
  return out;
}

Prf prf(const ConfusionCounts& counts) {
  Prf out;
  out.precision = ratio(counts.tp, counts.tp + counts.fp, out.precision_defined);
  out.recall = ratio(counts.tp, counts.tp + counts.fn, out.recall_defined);
  out.f1 = ratio(2 * counts.tp, 2 * counts.tp + counts.fp + counts.fn, out.f1_defined);
  return out;
}

double micro_f1(std::span<const ClassId> preds, std::span<const ClassId> golds) {
  check_lengths(preds, golds);
  if (preds.empty()) throw std::invalid_argument("micro_f1 of an empty evaluation set");
  ConfusionCounts pooled;
  for (int c = 0; c < kNumClasses; ++c) pooled += confusion_for_class(preds, golds, ClassId(c));
  return prf(pooled).f1;
}

MetricsReport classwise_report(std::span<const ClassId> preds, std::span<const ClassId> golds) {
  check_lengths(preds, golds);
  MetricsReport report;
  report.examples = preds.size();

  std::array<ConfusionCounts, kNumClasses> per_class{};
  std::array<ConfusionCounts, 3> per_event{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i].value();
    const int g = golds[i].value();
    for (int c = 0; c < kNumClasses; ++c) {
      auto& cc = per_class[static_cast<std::size_t>(c)];
      if (p == c && g == c) {
        ++cc.tp;
      } else if (p == c) {
        ++cc.fp;
      } else if (g == c) {
        ++cc.fn;
      } else {
        ++cc.tn;
      }
    }
    const EventSet pe = events_of(preds[i]);
    const EventSet ge = events_of(golds[i]);
    for (EventKind e : kAllEvents) {
      auto& ec = per_event[static_cast<std::size_t>(e)];
      const bool pp = pe.contains(e);
      const bool gg = ge.contains(e);
      if (pp && gg) {
        ++ec.tp;
      } else if (pp) {
        ++ec.fp;
      } else if (gg) {
        ++ec.fn;
      } else {
        ++ec.tn;
      }
    }
  }

  ConfusionCounts pooled;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& cc = per_class[static_cast<std::size_t>(c)];
    report.per_class[static_cast<std::size_t>(c)] = ClassMetrics{prf(cc), cc.tp + cc.fn};
    pooled += cc;
  }
  report.micro = prf(pooled);
  report.macro = mean_of(report.per_class, false);
  report.weighted = mean_of(report.per_class, true);
  for (std::size_t e = 0; e < 3; ++e) {
    report.per_event[e] = EventMetrics{per_event[e], prf(per_event[e])};
  }
  return report;
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::kExact:
      return "exact";
    case Category::kPartial:
      return "partial";
    case Category::kWrong:
      return "wrong";
  }
  return "?";
}

Category categorize(ClassId predicted, ClassId actual) {
  if (predicted == actual) return Category::kExact;
  if (!events_of(predicted).intersect(events_of(actual)).empty()) return Category::kPartial;
  return Category::kWrong;
}

std::uint64_t SetCombinationTable::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts) {
    for (std::uint64_t c : row) n += c;
  }
  return n;
}

std::uint64_t SetCombinationTable::total(Category category) const {
  std::uint64_t n = 0;
  for (int p = 0; p < kNumClasses; ++p) {
    for (int a = 0; a < kNumClasses; ++a) {
      if (categorize(ClassId(p), ClassId(a)) == category) {
        n += counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(a)];
      }
    }
  }
  return n;
}

SetCombinationTable set_combination_table(std::span<const ClassId> preds,
                                          std::span<const ClassId> golds) {
  check_lengths(preds, golds);
  SetCombinationTable table;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ++table.counts[static_cast<std::size_t>(preds[i].value())]
                  [static_cast<std::size_t>(golds[i].value())];
  }
  return table;
}

namespace {

nlohmann::ordered_json prf_json(const Prf& s) {
  nlohmann::ordered_json j;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  nlohmann::ordered_json undefined = nlohmann::ordered_json::array();
  if (!s.precision_defined) undefined.push_back("precision");
  if (!s.recall_defined) undefined.push_back("recall");
  if (!s.f1_defined) undefined.push_back("f1");
  if (!undefined.empty()) j["undefined"] = undefined;
  return j;
}

}  // namespace

std::string metrics_json(const MetricsReport& report, const SetCombinationTable& table,
                         Average headline) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["examples"] = report.examples;
  j["headline_average"] = headline == Average::kMicro ? "micro" : "weighted";
  j["headline_f1"] = report.headline(headline).f1;
  j["micro"] = prf_json(report.micro);
  j["macro"] = prf_json(report.macro);
  j["weighted"] = prf_json(report.weighted);

  ordered_json classes = ordered_json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
    ordered_json row = prf_json(m.scores);
    row["class"] = c;
    row["outcomes"] = describe(ClassId(c));
    row["support"] = m.support;
    classes.push_back(std::move(row));
  }
  j["per_class"] = std::move(classes);

  ordered_json events;
  for (EventKind e : kAllEvents) {
    const EventMetrics& m = report.per_event[static_cast<std::size_t>(e)];
    ordered_json row = prf_json(m.scores);
    row["tp"] = m.counts.tp;
    row["fp"] = m.counts.fp;
    row["fn"] = m.counts.fn;
    row["tn"] = m.counts.tn;
    events[std::string(event_name(e))] = std::move(row);
  }
  j["per_event"] = std::move(events);

  ordered_json matrix = ordered_json::array();
  for (const auto& row : table.counts) matrix.push_back(row);
  j["set_combinations"] = {
      {"axes", "counts[predicted][actual]"},
      {"counts", std::move(matrix)},
      {"exact", table.total(Category::kExact)},
      {"partial", table.total(Category::kPartial)},
      {"wrong", table.total(Category::kWrong)},
  };
  return j.dump(2);
}

void write_classwise_csv(std::ostream& out, const MetricsReport& report) {
  out << "class,outcomes,precision,recall,f1,support\n";
  for (int c = 0; c < kNumClasses; ++c) {
    const ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
    out << c << ',' << describe(ClassId(c)) << ',' << m.scores.precision << ','
        << m.scores.recall << ',' << m.scores.f1 << ',' << m.support << '\n';
  }
}

void write_set_combination_csv(std::ostream& out, const SetCombinationTable& table) {
  out << "predicted,actual,count,category\n";
  for (int p = 0; p < kNumClasses; ++p) {
    for (int a = 0; a < kNumClasses; ++a) {
      out << describe(ClassId(p)) << ',' << describe(ClassId(a)) << ','
          << table.counts[static_cast<std::size_t>(p)][static_cast<std::size_t>(a)] << ','
          << to_string(categorize(ClassId(p), ClassId(a))) << '\n';
    }
  }
}

}  // namespace daedra::eval
