#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace xform::cli {

std::string sha256_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

/// Digest of the resolved config; nlohmann objects keep keys sorted, so the
/// hash ignores key order in the source file.
std::string config_hash(const nlohmann::json& config);

/// manifest.json of one command run. Written once with status "running"
/// before outputs exist, then rewritten with output digests on completion.
class RunManifest {
 public:
  RunManifest(std::string command, std::filesystem::path out_dir, nlohmann::json config, std::uint64_t seed);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

  void write_started() const;
  void write_finished(std::string_view status = "complete") const;

  const std::filesystem::path& out_dir() const { return out_dir_; }

 private:
  nlohmann::json to_json(std::string_view status, bool with_outputs) const;

  std::string command_;
  std::filesystem::path out_dir_;
  nlohmann::json config_;
  std::uint64_t seed_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  nlohmann::json extra_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point start_;
};

}  // namespace xform::cli
