#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xform/data/dataset.hpp"
#include "xform/random.hpp"

namespace xform::data {

enum class BaseShape { bar, l_shape, triangle, cross };

std::string_view shape_name(BaseShape s);

/// Mixture of uniform and point-mass components over one physical parameter.
struct ParamDistribution {
  struct Component {
    enum class Type { uniform, delta } type = Type::delta;
    double lo = 0.0;  // uniform lower bound, or the delta location
    double hi = 0.0;
    double weight = 1.0;
  };
  std::vector<Component> components;

  static ParamDistribution uniform(double lo, double hi);
  static ParamDistribution delta(double value);

  double sample(Rng& rng) const;
  /// Mixture CDF (point masses contribute a step).
  double cdf(double x) const;
  /// Throws InvalidInput when the support leaves the parameter's physical range.
  void validate(tf::ParamId id) const;
};

struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t image_size = 32;
  std::size_t channels = 1;  // 1 (grayscale) or 3 (one colour per class)
  std::size_t samples = 5000;
  std::size_t supersample = 4;
  std::uint64_t seed = 0;
  /// Missing parameters stay at identity.
  std::map<tf::ParamId, ParamDistribution> distributions;

  const ParamDistribution* distribution(tf::ParamId id) const;
  void validate() const;

  /// JSON object form (see docs/formats.md). Rotation bounds may be given in
  /// degrees with "unit": "deg".
  static SyntheticSpec from_json(std::string_view text);
  std::string to_json() const;
};

/// Upright base image of one class, C x H x W, rendered with supersampling.
std::vector<double> render_base_image(BaseShape shape, const SyntheticSpec& spec);

/// Renders each sample's class shape under affine (and, for 3 channels,
/// colour) parameters drawn from the spec; deterministic in spec.seed.
LabeledImageSet generate_synthetic_dataset(const SyntheticSpec& spec);

}  // namespace xform::data
