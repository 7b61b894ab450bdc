#include <bit>
#include <cstring>
#include <fstream>

#include "daedra/model.hpp"
#include "json.hpp"

namespace daedra::model {

namespace {

constexpr char kMagic[8] = {'D', 'D', 'F', 'C', 'K', 'P', 'T', '\0'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

template <typename Range>
void put_doubles(std::ostream& out, const Range& values) {
  for (double d : values) put_u64(out, std::bit_cast<std::uint64_t>(d));
}

void get_doubles(std::istream& in, double* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = std::bit_cast<double>(get_u64(in));
}

}  // namespace

void save_checkpoint(const std::string& path, const Classifier& classifier,
                     const AdamState& optimizer, std::uint64_t step,
                     const std::string& metadata_json) {
  const ModelParams& p = classifier.params;
  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["step"] = step;
  header["classes"] = kNumClasses;
  header["vocab_size"] = p.vocab_size;
  header["max_sequence_length"] = classifier.max_sequence_length;
  header["has_idf"] = classifier.idf.has_value();
  header["adam_step"] = optimizer.step;
  header["sections"] = {"weights", "bias", "adam_m", "adam_v", "idf"};
  header["metadata"] = metadata_json.empty() ? nlohmann::ordered_json::object()
                                             : nlohmann::ordered_json::parse(metadata_json);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointFormatVersion);
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_doubles(out, p.weights);
  put_doubles(out, p.bias);
  put_doubles(out, optimizer.m);
  put_doubles(out, optimizer.v);
  if (classifier.idf) put_doubles(out, *classifier.idf);
  if (!out) throw std::runtime_error("write failed: " + path);
}

CheckpointFile load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error(path + " is not a checkpoint file");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format version " + std::to_string(version));
  }
  const std::uint64_t header_len = get_u64(in);
  if (header_len > (1u << 26)) throw std::runtime_error("checkpoint header too large");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
    throw std::runtime_error("checkpoint truncated");
  }
  const auto header = nlohmann::json::parse(text);
  if (header.at("classes").get<int>() != kNumClasses) {
    throw std::runtime_error("checkpoint class count mismatch");
  }

  CheckpointFile f;
  f.header_json = text;
  f.step = header.at("step").get<std::uint64_t>();
  const auto vocab_size = header.at("vocab_size").get<std::size_t>();
  ModelParams& p = f.classifier.params;
  p = ModelParams::zeros(vocab_size);
  get_doubles(in, p.weights.data(), p.weights.size());
  get_doubles(in, p.bias.data(), p.bias.size());
  f.optimizer = AdamState::zeros(p);
  f.optimizer.step = header.at("adam_step").get<std::uint64_t>();
  get_doubles(in, f.optimizer.m.data(), f.optimizer.m.size());
  get_doubles(in, f.optimizer.v.data(), f.optimizer.v.size());
  if (header.at("has_idf").get<bool>()) {
    std::vector<double> idf(vocab_size);
    get_doubles(in, idf.data(), idf.size());
    f.classifier.idf = std::move(idf);
  }
  f.classifier.max_sequence_length = header.at("max_sequence_length").get<std::size_t>();
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("trailing bytes after checkpoint payload");
  }
  if (!p.all_finite()) throw std::runtime_error("checkpoint contains non-finite parameters");
  return f;
}

}  // namespace daedra::model
