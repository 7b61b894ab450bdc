#include "daedra/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <future>
#include <set>
#include <sstream>

#include "daedra/dataset.hpp"
#include "json.hpp"

namespace daedra::selection {

namespace {

ComparisonRow run_candidate(const CandidateConfig& c, std::span<const Report> train,
                            std::span<const Report> test, std::uint64_t seed) {
  ComparisonRow row;
  row.name = c.name;
  if (c.precomputed) {
    row.precision = c.precomputed->precision;
    row.recall = c.precomputed->recall;
    row.f1 = c.precomputed->f1;
    row.runtime_seconds = c.precomputed->runtime_seconds;
    return row;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    wordpiece::Vocabulary vocab;
    if (c.tokenizer == TokenizerSource::kGenericVocab) {
      vocab = c.vocab ? *c.vocab : wordpiece::load_vocab(c.vocab_path);
    } else {
      vocab = wordpiece::train_wordpiece(count_words(train), c.tokenizer_options);
    }
    row.vocab_size = vocab.size();
    model::TrainConfig config = c.train;
    config.seed = seed;
    const PreparedData data = prepare_data(train, test, vocab, config);
    const model::TrainResult result = model::train(data.train, data.test, vocab.size(), config);
    const eval::MetricsReport& m = result.best.test_metrics;
    row.precision = m.macro.precision;
    row.recall = m.macro.recall;
    row.f1 = m.micro.f1;
  } catch (const std::exception& e) {
    row.error = e.what();
    row.precision = row.recall = row.f1 = 0.0;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  row.runtime_seconds = std::max(elapsed.count(), 1e-9);
  return row;
}

}  // namespace

std::vector<ComparisonRow> run_comparison(std::span<const CandidateConfig> candidates,
                                          std::span<const Report> train_subsample,
                                          std::span<const Report> test_set, std::uint64_t seed,
                                          const ComparisonOptions& options) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to compare");
  std::set<std::string> names;
  for (const CandidateConfig& c : candidates) {
    if (!names.insert(c.name).second) {
      throw std::invalid_argument("duplicate candidate name: " + c.name);
    }
  }

  std::vector<ComparisonRow> rows;
  rows.reserve(candidates.size());
  if (options.rank_by_runtime || options.threads <= 1) {
    for (const CandidateConfig& c : candidates) {
      rows.push_back(run_candidate(c, train_subsample, test_set, seed));
    }
  } else {
    // Wall-clock is not ranked here, so overlapping runs are harmless.
    for (std::size_t begin = 0; begin < candidates.size(); begin += options.threads) {
      const std::size_t end = std::min(candidates.size(), begin + options.threads);
      std::vector<std::future<ComparisonRow>> jobs;
      for (std::size_t i = begin; i < end; ++i) {
        jobs.push_back(std::async(std::launch::async, run_candidate, std::cref(candidates[i]),
                                  train_subsample, test_set, seed));
      }
      for (auto& job : jobs) rows.push_back(job.get());
    }
  }
  rank_rows(rows);
  return rows;
}

void rank_rows(std::vector<ComparisonRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.f1 != b.f1) return a.f1 > b.f1;
    return a.runtime_seconds < b.runtime_seconds;
  });
}

std::string select_best(std::span<const ComparisonRow> rows, double epsilon) {
  if (rows.empty()) throw std::invalid_argument("select_best: no rows");
  const ComparisonRow* top = nullptr;
  for (const ComparisonRow& r : rows) {
    if (r.error) continue;
    if (top == nullptr || r.f1 > top->f1) top = &r;
  }
  if (top == nullptr) throw std::runtime_error("select_best: every candidate failed");

  constexpr double kSlack = 1e-12;
  const ComparisonRow* best = nullptr;
  for (const ComparisonRow& r : rows) {
    if (r.error || top->f1 - r.f1 > epsilon + kSlack) continue;
    if (best == nullptr || r.runtime_seconds < best->runtime_seconds) best = &r;
  }
  return best->name;
}

std::string render_table(std::span<const ComparisonRow> rows) {
  std::size_t width = 5;
  for (const ComparisonRow& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %12s\n", static_cast<int>(width), "Model",
                "Precision", "Recall", "F1", "Runtime (s)");
  out << buf;
  for (const ComparisonRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.4f  %9.4f  %9.4f  %12.2f", static_cast<int>(width),
                  r.name.c_str(), r.precision, r.recall, r.f1, r.runtime_seconds);
    out << buf;
    if (r.error) out << "  FAILED: " << *r.error;
    out << '\n';
  }
  return out.str();
}

std::string comparison_json(std::span<const ComparisonRow> rows, const std::string& best,
                            double epsilon, std::uint64_t seed, double fraction) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["seed"] = seed;
  j["fraction"] = fraction;
  j["epsilon"] = epsilon;
  j["selected"] = best;
  j["metric_definitions"] = {{"precision", "macro"}, {"recall", "macro"}, {"f1", "micro"}};
  ordered_json out_rows = ordered_json::array();
  for (const ComparisonRow& r : rows) {
    ordered_json row;
    row["name"] = r.name;
    row["precision"] = r.precision;
    row["recall"] = r.recall;
    row["f1"] = r.f1;
    row["runtime_seconds"] = r.runtime_seconds;
    row["vocab_size"] = r.vocab_size;
    row["error"] = r.error ? ordered_json(*r.error) : ordered_json(nullptr);
    out_rows.push_back(std::move(row));
  }
  j["rows"] = std::move(out_rows);
  return j.dump(2);
}

}  // namespace daedra::selection
