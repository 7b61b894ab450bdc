#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace daedra::csv {

/// One physical record. Fields are raw bytes; decoding is the caller's job.
struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
  bool malformed = false;
  std::string error;
};

/// Streaming RFC 4180 reader. Quoted fields may contain commas, doubled
/// quotes and line breaks. Bare CR, LF and CRLF all terminate a record.
///
/// Malformed quoting never desynchronizes the stream by more than the
/// offending record: a stray quote inside an unquoted field or text after a
/// closing quote marks the row malformed and parsing continues to the next
/// unquoted line break. An unterminated quoted field runs to end of input.
class Reader {
 public:
  explicit Reader(std::istream& in);

  /// Reads the next non-blank record. Returns false at end of input.
  bool next(Row& row);

  /// True when the stream began with a UTF-8 byte order mark (consumed).
  bool had_bom() const { return had_bom_; }

 private:
  int get();
  int peek();
  bool fill();

  std::istream& in_;
  std::array<char, 1 << 16> buf_{};
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  std::size_t line_ = 1;
  bool had_bom_ = false;
};

}  // namespace daedra::csv
