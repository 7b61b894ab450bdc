#include "daedra/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "daedra/csv.hpp"
#include "daedra/unicode.hpp"

namespace daedra {

std::string_view to_string(Sex s) {
  switch (s) {
    case Sex::kF:
      return "F";
    case Sex::kM:
      return "M";
    case Sex::kU:
      return "U";
  }
  return "U";
}

std::optional<Sex> parse_sex(std::string_view s) {
  if (s == "F") return Sex::kF;
  if (s == "M") return Sex::kM;
  if (s == "U") return Sex::kU;
  return std::nullopt;
}

namespace {

enum Column { kId, kText, kDied, kEr, kErEd, kHospital, kSex, kAge, kNumColumns };

constexpr std::string_view kColumnNames[kNumColumns] = {
    "VAERS_ID", "SYMPTOM_TEXT", "DIED", "ER_VISIT",
    "ER_ED_VISIT", "HOSPITAL", "SEX", "AGE_YRS"};

std::optional<double> parse_age(std::string_view s) {
  s = unicode::trim(s);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (!std::isfinite(value) || value < 0.0) return std::nullopt;
  return value;
}

}  // namespace

ParseSummary parse_vaers_csv(std::istream& in, const ParseOptions& options,
                             const std::function<void(RawReport&&)>& sink) {
  csv::Reader reader(in);
  ParseSummary summary;
  summary.utf8_bom = reader.had_bom();
  const Encoding encoding = reader.had_bom() ? Encoding::kUtf8 : options.encoding;
  auto decode = [encoding](const std::string& bytes) {
    return encoding == Encoding::kLatin1 ? unicode::latin1_to_utf8(bytes)
                                         : unicode::sanitize_utf8(bytes);
  };

  csv::Row row;
  if (!reader.next(row)) {
    throw IngestError("input has no header row");
  }
  if (row.malformed) {
    throw IngestError("malformed header row: " + row.error);
  }

  int index[kNumColumns];
  std::fill(std::begin(index), std::end(index), -1);
  for (std::size_t i = 0; i < row.fields.size(); ++i) {
    const std::string name(unicode::trim(decode(row.fields[i])));
    for (int c = 0; c < kNumColumns; ++c) {
      if (name == kColumnNames[c] && index[c] < 0) index[c] = static_cast<int>(i);
    }
  }
  if (index[kId] < 0) {
    throw IngestError("header is missing the VAERS_ID column");
  }
  const std::size_t header_width = row.fields.size();

  auto record_error = [&](const csv::Row& r, const std::string& why) {
    ++summary.errors;
    std::string msg = "line " + std::to_string(r.line) + ": " + why;
    if (options.on_error == ErrorPolicy::kAbort) throw IngestError(msg);
    if (summary.error_samples.size() < 20) summary.error_samples.push_back(std::move(msg));
  };

  while (reader.next(row)) {
    ++summary.rows;
    if (row.malformed) {
      record_error(row, row.error);
      continue;
    }
    if (row.fields.size() > header_width) {
      record_error(row, "more fields than header columns");
      continue;
    }
    auto field = [&](Column c) -> const std::string* {
      const int i = index[c];
      if (i < 0 || static_cast<std::size_t>(i) >= row.fields.size()) return nullptr;
      return &row.fields[static_cast<std::size_t>(i)];
    };
    auto flag = [&](Column c) {
      const std::string* f = field(c);
      return f != nullptr && *f == "Y";
    };

    RawReport raw;
    if (const std::string* id = field(kId)) raw.vaers_id = std::string(unicode::trim(decode(*id)));
    if (raw.vaers_id.empty()) {
      record_error(row, "empty VAERS_ID");
      continue;
    }
    if (const std::string* text = field(kText)) raw.symptom_text = decode(*text);
    raw.died = flag(kDied);
    raw.er_visit = flag(kEr);
    raw.er_ed_visit = flag(kErEd);
    raw.hospital = flag(kHospital);
    if (const std::string* sex = field(kSex)) raw.sex = parse_sex(*sex);
    if (const std::string* age = field(kAge)) raw.age_yrs = parse_age(*age);

    ++summary.emitted;
    sink(std::move(raw));
  }
  return summary;
}

std::vector<RawReport> parse_vaers_csv(std::istream& in, const ParseOptions& options,
                                       ParseSummary* summary) {
  std::vector<RawReport> out;
  ParseSummary s = parse_vaers_csv(in, options, [&out](RawReport&& r) {
    out.push_back(std::move(r));
  });
  if (summary != nullptr) *summary = std::move(s);
  return out;
}

OutcomeSet derive_outcomes(const RawReport& raw) {
  return OutcomeSet{raw.er_visit || raw.er_ed_visit, raw.hospital, raw.died};
}

std::optional<Report> to_report(const RawReport& raw) {
  if (!raw.symptom_text) return std::nullopt;
  const std::string_view text = unicode::trim(*raw.symptom_text);
  if (text.empty()) return std::nullopt;
  Report r;
  r.vaers_id = raw.vaers_id;
  r.text = std::string(text);
  r.sex = raw.sex.value_or(Sex::kU);
  r.age_yrs = raw.age_yrs;
  r.outcomes = derive_outcomes(raw);
  return r;
}

std::vector<Report> filter_reports(const std::vector<RawReport>& raws) {
  std::vector<Report> out;
  out.reserve(raws.size());
  for (const RawReport& raw : raws) {
    if (auto r = to_report(raw)) out.push_back(std::move(*r));
  }
  return out;
}

std::vector<Report> filter_reports(const std::vector<Report>& reports) {
  std::vector<Report> out;
  out.reserve(reports.size());
  for (const Report& r : reports) {
    const std::string_view text = unicode::trim(r.text);
    if (text.empty()) continue;
    Report copy = r;
    copy.text = std::string(text);
    out.push_back(std::move(copy));
  }
  return out;
}

void CorpusStatsBuilder::add(const Report& r) {
  ++records_;
  words_ += unicode::split_whitespace(r.text).size();
  ++counts_[r.label().value()];
}

CorpusStats CorpusStatsBuilder::finish() const {
  CorpusStats stats;
  stats.record_count = records_;
  stats.word_count = words_;
  for (const auto& [label, count] : counts_) {
    stats.class_histogram[label] =
        ClassShare{count, static_cast<double>(count) / static_cast<double>(records_)};
  }
  return stats;
}

CorpusStats corpus_stats(const std::vector<Report>& reports) {
  CorpusStatsBuilder builder;
  for (const Report& r : reports) builder.add(r);
  return builder.finish();
}

}  // namespace daedra
