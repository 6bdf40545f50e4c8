#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace memagent {

// SHA-1 of "blob <size>\0<bytes>", the same id git gives the file.
std::string git_blob_sha1(const std::string& bytes);
std::string git_blob_sha1_file(const std::string& path);

struct RunManifest {
  std::string run_id;
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  std::map<std::string, std::string> inputs;   // path -> blob hash
  std::map<std::string, std::string> outputs;  // path relative to the manifest dir -> blob hash
  std::string started_at;
  std::string finished_at;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::string utc_timestamp();

// Starts a manifest; run_id is derived from the command and config so that
// identical invocations share it.
RunManifest begin_manifest(const std::string& command, const nlohmann::json& config,
                           const nlohmann::json& seeds);

// Hashes each output (relative to dir), stamps the finish time and writes
// dir/manifest-<command>[-<tag>].json. Returns the manifest path.
std::string finish_manifest(RunManifest& m, const std::string& dir,
                            const std::vector<std::string>& outputs, const std::string& tag = {});

// Every referenced output exists and matches its hash; returns problems.
std::vector<std::string> verify_manifest(const std::string& manifest_path);

// Writes bytes to path via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

}  // namespace memagent
