#include "commands.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "manifest.hpp"
#include "xform/data/idx.hpp"
#include "xform/data/synthetic.hpp"
#include "xform/dist/histogram.hpp"
#include "xform/dist/policy.hpp"
#include "xform/error.hpp"
#include "xform/gan/estimator.hpp"
#include "xform/io.hpp"
#include "xform/pretext/eval.hpp"

namespace xform::cli {

using json = nlohmann::json;

namespace {

json load_config(const std::optional<fs::path>& path) {
  if (!path) return json::object();
  try {
    auto j = json::parse(io::read_file(*path));
    if (!j.is_object()) throw InvalidInput("config: top level must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path->string() + ": " + e.what());
  }
}

std::string section(const json& config, const char* name) {
  return config.contains(name) ? config.at(name).dump() : "{}";
}

struct DatasetFiles {
  fs::path images, labels, params;
};

DatasetFiles dataset_files(const fs::path& dir) {
  return {dir / "images.idx", dir / "labels.idx", dir / "params.csv"};
}

data::LabeledImageSet load_dataset(const fs::path& dir, RunManifest& manifest) {
  const auto files = dataset_files(dir);
  for (const auto& p : {files.images, files.labels}) {
    if (!fs::exists(p)) throw InvalidInput("dataset file " + p.string() + " does not exist");
    manifest.add_input(p);
  }
  auto set = data::load_idx(files.images, files.labels);
  if (fs::exists(files.params)) {
    data::read_params_csv(files.params, set);
    manifest.add_input(files.params);
  }
  set.validate();
  return set;
}

std::vector<std::size_t> read_index_list(const fs::path& path, std::size_t limit) {
  std::istringstream in(io::read_file(path));
  std::vector<std::size_t> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const double v = io::parse_double(line);
    if (v < 0 || v != std::floor(v) || v >= static_cast<double>(limit)) {
      throw InvalidInput("reference list " + path.string() + ": row " + std::to_string(row) +
                         " is not a dataset index");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw InvalidInput("reference list " + path.string() + " is empty");
  return out;
}

std::string join_lines(const std::vector<std::size_t>& v) {
  std::string out;
  for (auto i : v) out += std::to_string(i) + "\n";
  return out;
}

}  // namespace

void cmd_synth(const SynthOptions& opts) {
  const auto config = load_config(opts.config);
  auto spec = data::SyntheticSpec::from_json(section(config, "synthetic"));
  if (opts.seed) spec.seed = *opts.seed;
  if (opts.samples) spec.samples = *opts.samples;
  spec.validate();

  json resolved;
  resolved["synthetic"] = json::parse(spec.to_json());
  RunManifest manifest("synth", opts.out, resolved, spec.seed);
  if (opts.config) manifest.add_input(*opts.config);
  manifest.write_started();

  const auto set = data::generate_synthetic_dataset(spec);
  const auto files = dataset_files(opts.out);
  data::write_idx(files.images, files.labels, set);
  data::write_params_csv(files.params, set);
  for (const auto& p : {files.images, files.labels, files.params}) manifest.add_output(p);
  manifest.write_finished();
}

void cmd_estimate(const EstimateOptions& opts) {
  const auto config = load_config(opts.config);
  auto cfg = opts.preset ? gan::EstimatorConfig::preset(*opts.preset) : gan::EstimatorConfig{};
  cfg = gan::EstimatorConfig::from_json(section(config, "estimator"), cfg);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.iterations) cfg.iterations = *opts.iterations;
  cfg.validate();

  json resolved;
  resolved["estimator"] = json::parse(cfg.to_json());
  RunManifest manifest("estimate", opts.out, resolved, cfg.seed);
  if (opts.config) manifest.add_input(*opts.config);
  const auto dataset = load_dataset(opts.data, manifest);
  std::vector<std::size_t> ref_idx;
  if (opts.reference) {
    manifest.add_input(*opts.reference);
    ref_idx = read_index_list(*opts.reference, dataset.size());
  } else {
    ref_idx = data::select_reference_indices(dataset, cfg.refs_per_class, cfg.seed);
  }
  const auto reference = dataset.subset(ref_idx);
  manifest.write_started();

  const fs::path ckpt_dir = opts.out;
  gan::TrainOptions train_opts;
  train_opts.checkpoint_dir = ckpt_dir;
  train_opts.on_log = [](const gan::HistoryEntry& e) {
    if (e.iteration % 5000 == 0) {
      std::cerr << "estimate: iteration " << e.iteration << " critic " << e.critic_loss << " generator " << e.gen_loss
                << "\n";
    }
  };
  gan::TrainResult result = [&] {
    try {
      return gan::train_estimator(cfg, dataset, reference, train_opts);
    } catch (const TrainingAborted&) {
      manifest.write_finished("aborted");
      throw;
    }
  }();

  gan::write_estimator_checkpoint(ckpt_dir, result.generator, result.discriminator, cfg.iterations);
  const auto hists = dist::estimate_histogram(result.generator, cfg.hist_samples, cfg.hist_bins,
                                              derive_seed(cfg.seed, 4));
  dist::write_histogram_csv(opts.out / "histogram.csv", hists);
  io::atomic_write(opts.out / "history.csv", result.history.to_csv());
  io::atomic_write(opts.out / "reference.txt", join_lines(ref_idx));
  for (const char* name : {"generator.ckpt", "discriminator.ckpt", "generator.manifest", "histogram.csv",
                           "history.csv", "reference.txt"}) {
    manifest.add_output(opts.out / name);
  }
  manifest.write_finished();
}

void cmd_complement(const ComplementOptions& opts) {
  json resolved;
  resolved["input"] = opts.input.filename().string();
  RunManifest manifest("complement", opts.out, resolved, 0);
  manifest.add_input(opts.input);
  const auto hists = dist::read_histogram_csv(opts.input);
  manifest.write_started();
  std::vector<dist::ParamHistogram> q;
  for (const auto& h : hists) q.push_back(dist::complement_histogram(h));
  dist::write_histogram_csv(opts.out / "complement.csv", q);
  manifest.add_output(opts.out / "complement.csv");
  manifest.write_finished();
}

void cmd_policy(const PolicyOptions& opts) {
  const bool rotation_degrees = opts.degrees && opts.task == "rotation";
  const double unit = rotation_degrees ? std::numbers::pi / 180.0 : 1.0;
  json resolved{{"task", opts.task},  {"k", opts.k},       {"mode", opts.mode},      {"seed", opts.seed},
                {"snap", opts.snap},  {"eps", opts.eps},   {"degrees", opts.degrees}, {"values", opts.values}};
  RunManifest manifest("policy", opts.out, resolved, opts.seed);

  dist::PolicySpec spec;
  if (!opts.values.empty()) {
    std::vector<double> values;
    for (double v : opts.values) values.push_back(v * unit);
    spec = dist::make_policy(opts.task, values);
    spec.seed = opts.seed;
    spec.source = "explicit";
  } else {
    if (!opts.input) throw InvalidInput("policy: --input (complement CSV) or --values is required");
    manifest.add_input(*opts.input);
    const auto q = dist::read_histogram_csv(*opts.input);
    dist::PolicyOptions popts;
    popts.snap = opts.snap * unit;
    popts.manual_eps = opts.eps;
    popts.source = "sha256:" + file_digest(*opts.input);
    spec = dist::build_policy(q, opts.task, opts.k, dist::parse_mode(opts.mode), opts.seed, popts);
  }
  manifest.write_started();
  io::atomic_write(opts.out / "policy.json", spec.to_json());
  manifest.add_output(opts.out / "policy.json");
  manifest.write_finished();
}

std::size_t eval_workers() {
  const char* env = std::getenv("XFORM_NUM_WORKERS");
  if (!env || !*env) return 1;
  const double v = io::parse_double(env);
  if (v < 1 || v != std::floor(v)) throw InvalidInput("XFORM_NUM_WORKERS must be a positive integer");
  return static_cast<std::size_t>(v);
}

void cmd_eval(const EvalOptions& opts) {
  if (opts.policies.empty()) throw InvalidInput("eval: at least one --policy is required");
  if (opts.seeds.empty()) throw InvalidInput("eval: at least one seed is required");
  const auto config = load_config(opts.config);
  auto cfg = pretext::EvalConfig::from_json(section(config, "eval"), pretext::EvalConfig{});
  if (opts.pretext_epochs) cfg.pretext_epochs = *opts.pretext_epochs;
  if (opts.probe_epochs) cfg.probe_epochs = *opts.probe_epochs;
  cfg.validate();

  std::vector<dist::PolicySpec> policies;
  json policy_json = json::array();
  for (const auto& p : opts.policies) {
    policies.push_back(dist::PolicySpec::from_json(io::read_file(p)));
    policy_json.push_back(json::parse(policies.back().to_json()));
  }
  const json schedule = json::parse(cfg.to_json());
  json resolved{{"eval", schedule}, {"policies", policy_json}, {"seeds", opts.seeds}};
  RunManifest manifest("eval", opts.out, resolved, opts.seeds.front());
  manifest.set("schedule_hash", config_hash(schedule));
  if (opts.config) manifest.add_input(*opts.config);
  for (const auto& p : opts.policies) manifest.add_input(p);
  const auto dataset = load_dataset(opts.data, manifest);
  manifest.write_started();

  struct Job {
    std::size_t policy;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    for (auto s : opts.seeds) jobs.push_back({p, s});
  }
  std::vector<std::optional<pretext::ProbeResult>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t j;
      {
        std::lock_guard lock(mu);
        if (next == jobs.size()) return;
        j = next++;
      }
      try {
        results[j] = pretext::evaluate_policy(policies[jobs[j].policy], dataset, jobs[j].seed, cfg);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(eval_workers(), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string csv = pretext::results_csv_header();
  for (const auto& r : results) {
    if (r) csv += pretext::results_csv_row(*r);
  }
  io::atomic_write(opts.out / "results.csv", csv);
  manifest.add_output(opts.out / "results.csv");
  for (const auto& e : errors) {
    if (!e) continue;
    manifest.write_finished("aborted");
    try {
      std::rethrow_exception(e);
    } catch (const TrainingAborted&) {
      throw;
    } catch (const std::exception& ex) {
      throw TrainingAborted(std::string("eval run failed: ") + ex.what());
    }
  }
  manifest.write_finished();
}

}  // namespace xform::cli
