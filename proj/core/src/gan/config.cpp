#include "xform/gan/config.hpp"

#include <cmath>

#include "json.hpp"
#include "xform/error.hpp"

namespace xform::gan {

using json = nlohmann::json;

void EstimatorConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("estimator: lambda must be >= 0");
  if (n_critic < 1) throw InvalidInput("estimator: n_critic must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidInput("estimator: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidInput("estimator: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidInput("estimator: beta2 must lie in [0, 1)");
  if (batch < 1) throw InvalidInput("estimator: batch must be >= 1");
  if (crop < 1) throw InvalidInput("estimator: crop must be >= 1");
  if (hist_samples < 1000) throw InvalidInput("estimator: hist_samples must be >= 1000");
  if (hist_bins < 2) throw InvalidInput("estimator: hist_bins must be >= 2");
  if (refs_per_class < 1) throw InvalidInput("estimator: refs_per_class must be >= 1");
  if (log_every < 1) throw InvalidInput("estimator: log_every must be >= 1");
}

EstimatorConfig EstimatorConfig::preset(std::string_view name) {
  EstimatorConfig cfg;
  if (name == "paper") return cfg;
  if (name == "desk") {
    cfg.iterations = 50000;
    return cfg;
  }
  if (name == "smoke") {
    cfg.iterations = 100;
    cfg.hist_samples = 10000;
    return cfg;
  }
  throw InvalidInput("unknown preset '" + std::string(name) + "' (expected desk, paper or smoke)");
}

EstimatorConfig EstimatorConfig::from_json(std::string_view text, const EstimatorConfig& base) {
  EstimatorConfig cfg = base;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InvalidInput("estimator config must be a JSON object");
    if (j.contains("preset")) cfg = preset(j.at("preset").get<std::string>());
    for (const auto& [key, value] : j.items()) {
      if (key == "preset") continue;
      if (key == "lambda") cfg.lambda = value.get<double>();
      else if (key == "n_critic") cfg.n_critic = value.get<std::size_t>();
      else if (key == "lr" || key == "alpha") cfg.lr = value.get<double>();
      else if (key == "beta1") cfg.beta1 = value.get<double>();
      else if (key == "beta2") cfg.beta2 = value.get<double>();
      else if (key == "batch") cfg.batch = value.get<std::size_t>();
      else if (key == "iterations") cfg.iterations = value.get<std::size_t>();
      else if (key == "crop") cfg.crop = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "kind") cfg.kind = tf::parse_kind(value.get<std::string>());
      else if (key == "layout") {
        const auto s = value.get<std::string>();
        if (s == "split") cfg.layout = nn::GeneratorLayout::split;
        else if (s == "joint") cfg.layout = nn::GeneratorLayout::joint;
        else throw InvalidInput("estimator: layout must be split or joint");
      }
      else if (key == "hist_samples") cfg.hist_samples = value.get<std::size_t>();
      else if (key == "hist_bins") cfg.hist_bins = value.get<std::size_t>();
      else if (key == "refs_per_class") cfg.refs_per_class = value.get<std::size_t>();
      else if (key == "checkpoint_every") cfg.checkpoint_every = value.get<std::size_t>();
      else if (key == "log_every") cfg.log_every = value.get<std::size_t>();
      else throw InvalidInput("estimator config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("estimator config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

EstimatorConfig EstimatorConfig::from_json(std::string_view text) { return from_json(text, EstimatorConfig{}); }

std::string EstimatorConfig::to_json() const {
  json j;
  j["lambda"] = lambda;
  j["n_critic"] = n_critic;
  j["lr"] = lr;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["batch"] = batch;
  j["iterations"] = iterations;
  j["crop"] = crop;
  j["seed"] = seed;
  j["kind"] = std::string(tf::kind_name(kind));
  j["layout"] = layout == nn::GeneratorLayout::split ? "split" : "joint";
  j["hist_samples"] = hist_samples;
  j["hist_bins"] = hist_bins;
  j["refs_per_class"] = refs_per_class;
  j["checkpoint_every"] = checkpoint_every;
  j["log_every"] = log_every;
  return j.dump();
}

}  // namespace xform::gan
