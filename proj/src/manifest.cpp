#include "daedra/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace daedra::manifest {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct DigestCtx {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  DigestCtx() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256 initialisation failed");
    }
  }
  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw std::runtime_error("sha256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
      throw std::runtime_error("sha256 finalisation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(kHex[md[i] >> 4]);
      out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
  }
};

ordered_json digest_json(const FileDigest& d) {
  return ordered_json{{"path", d.path}, {"sha256", d.sha256}, {"bytes", d.bytes}};
}

FileDigest digest_from(const ordered_json& j) {
  return FileDigest{j.at("path").get<std::string>(), j.at("sha256").get<std::string>(),
                    j.at("bytes").get<std::uint64_t>()};
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  DigestCtx d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  DigestCtx d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw std::runtime_error("read error on " + path);
  return d.hex();
}

FileDigest digest_input(const std::string& path) {
  const fs::path abs = fs::absolute(path).lexically_normal();
  return FileDigest{abs.string(), sha256_file(path), fs::file_size(path)};
}

FileDigest digest_output(const std::string& path, const std::string& manifest_dir) {
  const fs::path rel = fs::absolute(path).lexically_normal().lexically_relative(
      fs::absolute(manifest_dir).lexically_normal());
  return FileDigest{rel.generic_string(), sha256_file(path), fs::file_size(path)};
}

std::string timestamp_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string to_json(const RunManifest& m) {
  ordered_json j;
  j["schema_version"] = kManifestSchemaVersion;
  j["tool"] = kToolName;
  j["tool_version"] = m.tool_version;
  j["stage"] = m.stage;
  j["seed"] = m.seed ? ordered_json(*m.seed) : ordered_json(nullptr);
  j["inputs"] = ordered_json::array();
  for (const auto& d : m.inputs) j["inputs"].push_back(digest_json(d));
  j["outputs"] = ordered_json::array();
  for (const auto& d : m.outputs) j["outputs"].push_back(digest_json(d));
  j["config"] = m.config;
  j["details"] = m.details;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  return j.dump(2) + "\n";
}

RunManifest from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  RunManifest m;
  m.stage = j.at("stage").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  if (!j.at("seed").is_null()) m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& d : j.at("inputs")) m.inputs.push_back(digest_from(d));
  for (const auto& d : j.at("outputs")) m.outputs.push_back(digest_from(d));
  m.config = j.at("config");
  m.details = j.value("details", ordered_json::object());
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
  return m;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(m);
  if (!out) throw std::runtime_error("write error on " + path);
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

VerifyReport verify(const std::string& manifest_path) {
  const RunManifest m = read_manifest(manifest_path);
  const fs::path base = fs::absolute(manifest_path).parent_path();
  VerifyReport report;
  auto check = [&](const FileDigest& d, const fs::path& p, std::string_view role) {
    ++report.files_checked;
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
      report.problems.push_back(std::string(role) + " missing: " + p.string());
      return;
    }
    if (fs::file_size(p) != d.bytes || sha256_file(p.string()) != d.sha256) {
      report.problems.push_back(std::string(role) + " changed: " + p.string());
    }
  };
  for (const auto& d : m.inputs) check(d, fs::path(d.path), "input");
  for (const auto& d : m.outputs) check(d, base / d.path, "output");
  return report;
}

}  // namespace daedra::manifest
