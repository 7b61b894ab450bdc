#pragma once

#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "daedra/corpus.hpp"

namespace daedra::records {

/// Version of the JSONL record schema written by to_jsonl.
inline constexpr int kSchemaVersion = 1;

/// {"id": str, "text": str, "sex": "F|M|U", "age": number|null, "label": int}
std::string to_jsonl(const Report& r);
/// Throws std::runtime_error on a line that does not match the schema.
Report from_jsonl(const std::string& line);

void write_jsonl(std::ostream& out, const std::vector<Report>& reports);

/// Streams reports from a JSONL file; blank lines are ignored.
std::size_t read_jsonl(std::istream& in, const std::function<void(Report&&)>& sink);
std::vector<Report> read_jsonl(std::istream& in);
std::vector<Report> read_jsonl_file(const std::string& path);

}  // namespace daedra::records
