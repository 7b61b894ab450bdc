#include "daedra/records.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace daedra::records {

using nlohmann::ordered_json;

std::string to_jsonl(const Report& r) {
  ordered_json j;
  j["id"] = r.vaers_id;
  j["text"] = r.text;
  j["sex"] = std::string(to_string(r.sex));
  if (r.age_yrs) {
    j["age"] = *r.age_yrs;
  } else {
    j["age"] = nullptr;
  }
  j["label"] = r.label().value();
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

Report from_jsonl(const std::string& line) {
  const ordered_json j = ordered_json::parse(line);
  Report r;
  r.vaers_id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  const auto sex = parse_sex(j.at("sex").get<std::string>());
  if (!sex) throw std::runtime_error("record " + r.vaers_id + ": bad sex value");
  r.sex = *sex;
  if (const auto& age = j.at("age"); !age.is_null()) r.age_yrs = age.get<double>();
  r.outcomes = decode_class(ClassId(j.at("label").get<int>()));
  return r;
}

void write_jsonl(std::ostream& out, const std::vector<Report>& reports) {
  for (const Report& r : reports) out << to_jsonl(r) << '\n';
}

std::size_t read_jsonl(std::istream& in, const std::function<void(Report&&)>& sink) {
  std::string line;
  std::size_t n = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      sink(from_jsonl(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
    ++n;
  }
  return n;
}

std::vector<Report> read_jsonl(std::istream& in) {
  std::vector<Report> out;
  read_jsonl(in, [&out](Report&& r) { out.push_back(std::move(r)); });
  return out;
}

std::vector<Report> read_jsonl_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_jsonl(in);
}

}  // namespace daedra::records
