#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ladder::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Provenance record written to every run directory before any work starts.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string config_path;
  std::string config_sha256;           // of the config file bytes; empty without a file
  std::string resolved_config_sha256;  // of the resolved JSON
  std::vector<std::pair<std::string, std::string>> datasets;  // path -> sha256
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  std::string created_utc;
};

std::string manifest_json(const RunManifest& manifest);

/// Creates <root>/<YYYYMMDD-HHMMSS>-<first 8 hex of key hash>, adding a
/// numeric suffix if that name is taken.
std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& key, std::string* created_utc);

}  // namespace ladder::cli
