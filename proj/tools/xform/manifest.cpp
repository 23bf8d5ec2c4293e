#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <stdexcept>

#include "xform/io.hpp"

namespace xform::cli {

using json = nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string file_digest(const std::filesystem::path& path) { return sha256_hex(io::read_file(path)); }

std::string config_hash(const json& config) { return sha256_hex(config.dump()); }

RunManifest::RunManifest(std::string command, std::filesystem::path out_dir, json config, std::uint64_t seed)
    : command_(std::move(command)),
      out_dir_(std::move(out_dir)),
      config_(std::move(config)),
      seed_(seed),
      start_(std::chrono::steady_clock::now()) {}

void RunManifest::add_input(const std::filesystem::path& path) { inputs_.push_back(path); }

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

json RunManifest::to_json(std::string_view status, bool with_outputs) const {
  json j;
  j["command"] = command_;
  j["status"] = status;
  j["config"] = config_;
  j["config_hash"] = config_hash(config_);
  j["seed"] = seed_;
  j["version"] = XFORM_VERSION;
  json inputs = json::object();
  for (const auto& p : inputs_) inputs[p.string()] = file_digest(p);
  j["inputs"] = inputs;
  json outputs = json::object();
  for (const auto& p : outputs_) {
    outputs[p.filename().string()] = with_outputs && std::filesystem::exists(p) ? file_digest(p) : "";
  }
  j["outputs"] = outputs;
  j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  for (const auto& [k, v] : extra_.items()) j[k] = v;
  return j;
}

void RunManifest::write_started() const {
  std::filesystem::create_directories(out_dir_);
  io::atomic_write(out_dir_ / "manifest.json", to_json("running", false).dump(2) + "\n");
}

void RunManifest::write_finished(std::string_view status) const {
  io::atomic_write(out_dir_ / "manifest.json", to_json(status, true).dump(2) + "\n");
}

}  // namespace xform::cli
