#include "memagent/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "memagent/jsonl.hpp"

namespace memagent {
namespace fs = std::filesystem;

std::string git_blob_sha1(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    const unsigned char b = digest[i];
    out += hex[b >> 4];
    out += hex[b & 15];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string git_blob_sha1_file(const std::string& path) { return git_blob_sha1(read_file(path)); }

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << bytes;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  fs::rename(tmp, target);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"run_id", run_id},   {"command", command},         {"config", config},
          {"seeds", seeds},     {"inputs", inputs},           {"outputs", outputs},
          {"started_at", started_at}, {"finished_at", finished_at}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.command = j.at("command").get<std::string>();
  m.config = j.value("config", nlohmann::json::object());
  m.seeds = j.value("seeds", nlohmann::json::object());
  m.inputs = j.value("inputs", std::map<std::string, std::string>{});
  m.outputs = j.value("outputs", std::map<std::string, std::string>{});
  m.started_at = j.value("started_at", std::string{});
  m.finished_at = j.value("finished_at", std::string{});
  return m;
}

RunManifest begin_manifest(const std::string& command, const nlohmann::json& config,
                           const nlohmann::json& seeds) {
  RunManifest m;
  m.command = command;
  m.config = config;
  m.seeds = seeds;
  m.run_id = git_blob_sha1(command + "\n" + jsonl_dump(config) + "\n" + jsonl_dump(seeds)).substr(0, 12);
  m.started_at = utc_timestamp();
  return m;
}

std::string finish_manifest(RunManifest& m, const std::string& dir,
                            const std::vector<std::string>& outputs, const std::string& tag) {
  m.outputs.clear();
  for (const auto& rel : outputs) m.outputs[rel] = git_blob_sha1_file((fs::path(dir) / rel).string());
  m.finished_at = utc_timestamp();
  const auto path = (fs::path(dir) / ("manifest-" + m.command + (tag.empty() ? "" : "-" + tag) + ".json")).string();
  write_file_atomic(path, m.to_json().dump(2) + "\n");
  return path;
}

std::vector<std::string> verify_manifest(const std::string& manifest_path) {
  const auto m = RunManifest::from_json(nlohmann::json::parse(read_file(manifest_path)));
  const auto dir = fs::path(manifest_path).parent_path();
  std::vector<std::string> problems;
  for (const auto& [rel, hash] : m.outputs) {
    const auto p = (dir / rel).string();
    if (!fs::exists(p)) {
      problems.push_back("missing output " + rel);
    } else if (git_blob_sha1_file(p) != hash) {
      problems.push_back("hash mismatch for " + rel);
    }
  }
  return problems;
}

}  // namespace memagent
