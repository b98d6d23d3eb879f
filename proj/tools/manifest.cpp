#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "ladder/array_file.hpp"
#include "ladder/checkpoint.hpp"
#include "ladder/error.hpp"

namespace ladder::cli {
namespace {

std::string to_hex(const unsigned char* p, unsigned n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < n; ++i) {
    out += digits[p[i] >> 4];
    out += digits[p[i] & 15];
  }
  return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw IoError("sha256 failed");
  return to_hex(md, len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  return to_hex(md, len);
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["config"] = {{"path", m.config_path}, {"sha256", m.config_sha256}, {"resolved_sha256", m.resolved_config_sha256}};
  auto datasets = nlohmann::ordered_json::array();
  for (const auto& [path, hash] : m.datasets) datasets.push_back({{"path", path}, {"sha256", hash}});
  j["datasets"] = datasets;
  j["seeds"] = m.seeds;
  j["output_dir"] = m.output_dir;
  j["created_utc"] = m.created_utc;
  j["versions"] = {{"ladder", LADDER_VERSION}, {"checkpoint_format", Checkpoint::kVersion}, {"array_format", "HSICUBE1"}};
  return j.dump(2) + "\n";
}

std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& key, std::string* created_utc) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  if (created_utc) {
    char iso[32];
    std::strftime(iso, sizeof(iso), "%Y-%m-%dT%H:%M:%SZ", &tm);
    *created_utc = iso;
  }
  const std::string base = std::string(stamp) + "-" + sha256_hex(key).substr(0, 8);
  std::filesystem::create_directories(root);
  for (int i = 1;; ++i) {
    const auto dir = root / (i == 1 ? base : base + "-" + std::to_string(i));
    if (std::filesystem::create_directory(dir)) return dir;
  }
}

}  // namespace ladder::cli
