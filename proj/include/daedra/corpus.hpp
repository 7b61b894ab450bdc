#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "daedra/labels.hpp"

namespace daedra {

enum class Sex : std::uint8_t { kF, kM, kU };

std::string_view to_string(Sex s);
/// Exact "F", "M" or "U"; anything else is nullopt.
std::optional<Sex> parse_sex(std::string_view s);

/// One VAERSDATA row as it appears on disk (text already transcoded to
/// UTF-8). Flag fields are true iff the column held exactly "Y".
struct RawReport {
  std::string vaers_id;
  std::optional<std::string> symptom_text;
  bool died = false;
  bool er_visit = false;
  bool er_ed_visit = false;
  bool hospital = false;
  std::optional<Sex> sex;
  std::optional<double> age_yrs;
};

/// A record that survived filtering: non-empty narrative plus derived label.
struct Report {
  std::string vaers_id;
  std::string text;
  Sex sex = Sex::kU;
  std::optional<double> age_yrs;
  OutcomeSet outcomes;

  ClassId label() const { return encode_class(outcomes); }
  friend bool operator==(const Report&, const Report&) = default;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Encoding { kLatin1, kUtf8 };
enum class ErrorPolicy { kSkipAndCount, kAbort };

struct ParseOptions {
  Encoding encoding = Encoding::kLatin1;
  ErrorPolicy on_error = ErrorPolicy::kSkipAndCount;
};

struct ParseSummary {
  std::size_t rows = 0;    // data rows seen, malformed included
  std::size_t emitted = 0;
  std::size_t errors = 0;
  bool utf8_bom = false;
  std::vector<std::string> error_samples;  // first few diagnostics
};

/// Streams RawReports out of a VAERSDATA CSV one row at a time. A UTF-8 BOM
/// forces UTF-8 decoding regardless of options.encoding. Throws IngestError
/// when VAERS_ID is missing from the header, or on the first malformed row
/// under ErrorPolicy::kAbort.
ParseSummary parse_vaers_csv(std::istream& in, const ParseOptions& options,
                             const std::function<void(RawReport&&)>& sink);

std::vector<RawReport> parse_vaers_csv(std::istream& in,
                                       const ParseOptions& options,
                                       ParseSummary* summary = nullptr);

OutcomeSet derive_outcomes(const RawReport& raw);

/// nullopt when the narrative is missing or blank after trimming.
std::optional<Report> to_report(const RawReport& raw);

std::vector<Report> filter_reports(const std::vector<RawReport>& raws);
/// Same validity rule applied to already-built reports.
std::vector<Report> filter_reports(const std::vector<Report>& reports);

struct ClassShare {
  std::size_t count = 0;
  double fraction = 0.0;
  friend bool operator==(const ClassShare&, const ClassShare&) = default;
};

struct CorpusStats {
  std::size_t record_count = 0;
  std::size_t word_count = 0;
  std::map<int, ClassShare> class_histogram;
};

/// Incremental form of corpus_stats for streamed corpora.
class CorpusStatsBuilder {
 public:
  void add(const Report& r);
  CorpusStats finish() const;

 private:
  std::size_t records_ = 0;
  std::size_t words_ = 0;
  std::map<int, std::size_t> counts_;
};

CorpusStats corpus_stats(const std::vector<Report>& reports);

}  // namespace daedra
