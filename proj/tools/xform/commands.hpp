#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace xform::cli {

namespace fs = std::filesystem;

struct SynthOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  fs::path out;
};

struct EstimateOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
  std::optional<std::size_t> iterations;
  std::optional<fs::path> reference;  // file of dataset indices, one per line
  fs::path data;
  fs::path out;
};

struct ComplementOptions {
  fs::path input;
  fs::path out;
};

struct PolicyOptions {
  std::optional<fs::path> input;  // complement histogram CSV
  std::string task;
  std::size_t k = 2;
  std::string mode = "automated";
  std::uint64_t seed = 0;
  double snap = 0.0;
  double eps = 0.05;
  bool degrees = false;        // rotation values and snap given in degrees
  std::vector<double> values;  // explicit instances instead of sampling
  fs::path out;
};

struct EvalOptions {
  std::optional<fs::path> config;
  std::vector<fs::path> policies;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::size_t> pretext_epochs;
  std::optional<std::size_t> probe_epochs;
  fs::path data;
  fs::path out;
};

// Each command throws xform::Error subclasses on failure; main() maps them
// onto exit statuses.
void cmd_synth(const SynthOptions& opts);
void cmd_estimate(const EstimateOptions& opts);
void cmd_complement(const ComplementOptions& opts);
void cmd_policy(const PolicyOptions& opts);
void cmd_eval(const EvalOptions& opts);

/// Worker count for cmd_eval from XFORM_NUM_WORKERS (default 1).
std::size_t eval_workers();

}  // namespace xform::cli
