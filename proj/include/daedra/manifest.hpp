#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace daedra::manifest {

inline constexpr std::string_view kToolName = "daedra-forge";
inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kManifestSchemaVersion = 1;

struct FileDigest {
  std::string path;    // inputs: absolute; outputs: relative to the manifest
  std::string sha256;  // lowercase hex
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string stage;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::optional<std::uint64_t> seed;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  nlohmann::ordered_json details = nlohmann::ordered_json::object();  // stage-specific
  std::string tool_version = std::string(kToolVersion);
  std::string started_at;
  std::string finished_at;
};

std::string sha256_hex(std::string_view bytes);
/// Throws std::runtime_error when the file cannot be read.
std::string sha256_file(const std::string& path);
FileDigest digest_input(const std::string& path);
/// Digest of `path`, recorded relative to `manifest_dir`.
FileDigest digest_output(const std::string& path, const std::string& manifest_dir);

/// UTC ISO-8601. Honours SOURCE_DATE_EPOCH so reruns can be byte-identical.
std::string timestamp_now();

std::string to_json(const RunManifest& m);
RunManifest from_json(const std::string& text);
void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

struct VerifyReport {
  std::size_t files_checked = 0;
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

/// Re-hashes every recorded input and output and reports mismatches.
VerifyReport verify(const std::string& manifest_path);

}  // namespace daedra::manifest
