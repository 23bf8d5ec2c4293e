#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "xform/nn/networks.hpp"
#include "xform/transforms/params.hpp"

namespace xform::gan {

struct EstimatorConfig {
  double lambda = 10.0;  // gradient-penalty weight
  std::size_t n_critic = 5;
  double lr = 5e-5;
  double beta1 = 0.0;
  double beta2 = 0.9;
  std::size_t batch = 10;
  std::size_t iterations = 500000;
  std::size_t crop = 24;
  std::uint64_t seed = 0;
  tf::TransformKind kind = tf::TransformKind::affine;
  nn::GeneratorLayout layout = nn::GeneratorLayout::split;
  std::size_t hist_samples = 100000;
  std::size_t hist_bins = 50;
  std::size_t refs_per_class = 3;
  std::size_t checkpoint_every = 0;  // 0: no intermediate checkpoints
  std::size_t log_every = 1;

  void validate() const;

  /// "paper" (500,000 iterations), "desk" (50,000) or "smoke" (100 iterations,
  /// 10,000 histogram samples).
  static EstimatorConfig preset(std::string_view name);
  /// Keys of the JSON object override `base`; "alpha" is accepted as an alias
  /// of "lr" and a "preset" key selects the base. Unknown keys are rejected.
  static EstimatorConfig from_json(std::string_view text, const EstimatorConfig& base);
  static EstimatorConfig from_json(std::string_view text);
  std::string to_json() const;
};

}  // namespace xform::gan
