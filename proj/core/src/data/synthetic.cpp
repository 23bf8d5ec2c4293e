#include "xform/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "xform/ad/ops.hpp"
#include "xform/error.hpp"
#include "xform/transforms/color.hpp"
#include "xform/transforms/geometric.hpp"

namespace xform::data {

using json = nlohmann::json;

std::string_view shape_name(BaseShape s) {
  switch (s) {
    case BaseShape::bar: return "bar";
    case BaseShape::l_shape: return "l_shape";
    case BaseShape::triangle: return "triangle";
    case BaseShape::cross: return "cross";
  }
  return "?";
}

ParamDistribution ParamDistribution::uniform(double lo, double hi) {
  return ParamDistribution{{Component{Component::Type::uniform, lo, hi, 1.0}}};
}

ParamDistribution ParamDistribution::delta(double value) {
  return ParamDistribution{{Component{Component::Type::delta, value, value, 1.0}}};
}

double ParamDistribution::sample(Rng& rng) const {
  double total = 0.0;
  for (const auto& c : components) total += c.weight;
  double pick = uniform01(rng) * total;
  const Component* chosen = &components.back();
  for (const auto& c : components) {
    if (pick < c.weight) {
      chosen = &c;
      break;
    }
    pick -= c.weight;
  }
  if (chosen->type == Component::Type::delta) return chosen->lo;
  return chosen->lo + (chosen->hi - chosen->lo) * uniform01(rng);
}

double ParamDistribution::cdf(double x) const {
  double total = 0.0, acc = 0.0;
  for (const auto& c : components) {
    total += c.weight;
    if (c.type == Component::Type::delta || c.hi <= c.lo) {
      acc += x >= c.lo ? c.weight : 0.0;
    } else {
      acc += c.weight * std::clamp((x - c.lo) / (c.hi - c.lo), 0.0, 1.0);
    }
  }
  return acc / total;
}

void ParamDistribution::validate(tf::ParamId id) const {
  const std::string name(tf::param_name(id));
  if (components.empty()) throw InvalidInput("distribution for '" + name + "' has no components");
  const auto range = tf::physical_range(id);
  for (const auto& c : components) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw InvalidInput("distribution for '" + name + "': component weights must be positive");
    }
    const double hi = c.type == Component::Type::delta ? c.lo : c.hi;
    if (!std::isfinite(c.lo) || !std::isfinite(hi) || c.lo > hi) {
      throw InvalidInput("distribution for '" + name + "': invalid bounds");
    }
    // Rotation's physical range is a closed circle; allow rounding at +-pi.
    const double slack = 1e-12;
    if (c.lo < range.lo - slack || hi > range.hi + slack) {
      throw InvalidInput("distribution for '" + name + "': support [" + std::to_string(c.lo) + ", " +
                         std::to_string(hi) + "] exceeds physical range [" + std::to_string(range.lo) + ", " +
                         std::to_string(range.hi) + "]");
    }
  }
}

const ParamDistribution* SyntheticSpec::distribution(tf::ParamId id) const {
  auto it = distributions.find(id);
  return it == distributions.end() ? nullptr : &it->second;
}

void SyntheticSpec::validate() const {
  if (classes < 1 || classes > 4) throw InvalidInput("synthetic: classes must be in [1, 4]");
  if (image_size < 4) throw InvalidInput("synthetic: image_size must be at least 4");
  if (channels != 1 && channels != 3) throw InvalidInput("synthetic: channels must be 1 or 3");
  if (samples < 1) throw InvalidInput("synthetic: samples must be at least 1");
  if (supersample < 1) throw InvalidInput("synthetic: supersample must be at least 1");
  for (const auto& [id, dist] : distributions) {
    if (channels == 1 && tf::kind_of(id) == tf::TransformKind::color) {
      throw InvalidInput("synthetic: colour parameter '" + std::string(tf::param_name(id)) +
                         "' needs channels = 3");
    }
    dist.validate(id);
  }
}

namespace {

double unit_factor(const json& j, tf::ParamId id) {
  const std::string unit = j.value("unit", std::string("native"));
  if (unit == "native") return 1.0;
  if (unit == "deg" && id == tf::ParamId::rotation) return std::numbers::pi / 180.0;
  throw InvalidInput("synthetic: unit '" + unit + "' not supported for '" + std::string(tf::param_name(id)) + "'");
}

ParamDistribution::Component parse_component(const json& j, double factor) {
  ParamDistribution::Component c;
  const std::string type = j.at("type").get<std::string>();
  c.weight = j.value("weight", 1.0);
  if (type == "uniform") {
    c.type = ParamDistribution::Component::Type::uniform;
    c.lo = j.at("lo").get<double>() * factor;
    c.hi = j.at("hi").get<double>() * factor;
  } else if (type == "delta") {
    c.type = ParamDistribution::Component::Type::delta;
    c.lo = c.hi = j.at("value").get<double>() * factor;
  } else {
    throw InvalidInput("synthetic: unknown component type '" + type + "'");
  }
  return c;
}

json component_json(const ParamDistribution::Component& c) {
  if (c.type == ParamDistribution::Component::Type::delta) {
    return {{"type", "delta"}, {"value", c.lo}, {"weight", c.weight}};
  }
  return {{"type", "uniform"}, {"lo", c.lo}, {"hi", c.hi}, {"weight", c.weight}};
}

}  // namespace

SyntheticSpec SyntheticSpec::from_json(std::string_view text) {
  SyntheticSpec spec;
  try {
    const json j = json::parse(text);
    spec.classes = j.value("classes", spec.classes);
    spec.image_size = j.value("image_size", spec.image_size);
    spec.channels = j.value("channels", spec.channels);
    spec.samples = j.value("samples", spec.samples);
    spec.supersample = j.value("supersample", spec.supersample);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("distributions")) {
      for (const auto& [name, d] : j.at("distributions").items()) {
        const tf::ParamId id = tf::parse_param(name);
        const double factor = unit_factor(d, id);
        ParamDistribution dist;
        if (d.at("type").get<std::string>() == "mixture") {
          for (const auto& c : d.at("components")) dist.components.push_back(parse_component(c, factor));
        } else {
          dist.components.push_back(parse_component(d, factor));
        }
        spec.distributions[id] = std::move(dist);
      }
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string SyntheticSpec::to_json() const {
  json j;
  j["classes"] = classes;
  j["image_size"] = image_size;
  j["channels"] = channels;
  j["samples"] = samples;
  j["supersample"] = supersample;
  j["seed"] = seed;
  json dists = json::object();
  for (const auto& [id, dist] : distributions) {
    json comps = json::array();
    for (const auto& c : dist.components) comps.push_back(component_json(c));
    dists[std::string(tf::param_name(id))] = {{"type", "mixture"}, {"components", comps}};
  }
  j["distributions"] = dists;
  return j.dump();
}

namespace {

// Shapes live in normalized device coordinates (x right, y down) inside a
// disc of radius 0.65, so any rotation keeps them clear of the 24/32 crop
// border.
bool inside_shape(BaseShape shape, double x, double y) {
  switch (shape) {
    case BaseShape::bar: {
      const bool stem = std::abs(x) <= 0.12 && y >= -0.15 && y <= 0.55;
      const double dy = y + 0.35;
      const bool knob = x * x + dy * dy <= 0.22 * 0.22;
      return stem || knob;
    }
    case BaseShape::l_shape: {
      const bool upright = x >= -0.35 && x <= -0.1 && y >= -0.5 && y <= 0.5;
      const bool foot = x >= -0.35 && x <= 0.4 && y >= 0.25 && y <= 0.5;
      return upright || foot;
    }
    case BaseShape::triangle:
      return x >= -0.45 && y <= 0.45 && y >= x;
    case BaseShape::cross: {
      const bool post = std::abs(x) <= 0.1 && y >= -0.55 && y <= 0.55;
      const bool beam = std::abs(y + 0.2) <= 0.1 && std::abs(x) <= 0.35;
      return post || beam;
    }
  }
  return false;
}

constexpr std::array<std::array<double, 3>, 4> kClassColors{{
    {0.9, 0.3, 0.2},
    {0.2, 0.8, 0.3},
    {0.25, 0.35, 0.9},
    {0.85, 0.8, 0.2},
}};

// Coverage of each output pixel by the shape seen through `m` (target ->
// source, row-major 2x3), box-averaged over supersample^2 subpixels.
std::vector<double> render_mask(BaseShape shape, std::span<const double> m, std::size_t size, std::size_t ss) {
  std::vector<double> out(size * size, 0.0);
  const double span = size > 1 ? static_cast<double>(size - 1) : 1.0;
  const double inv = 1.0 / static_cast<double>(ss * ss);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      std::size_t hits = 0;
      for (std::size_t a = 0; a < ss; ++a) {
        const double py = static_cast<double>(i) + (static_cast<double>(a) + 0.5) / static_cast<double>(ss) - 0.5;
        const double y = size > 1 ? -1.0 + 2.0 * py / span : 0.0;
        for (std::size_t b = 0; b < ss; ++b) {
          const double px = static_cast<double>(j) + (static_cast<double>(b) + 0.5) / static_cast<double>(ss) - 0.5;
          const double x = size > 1 ? -1.0 + 2.0 * px / span : 0.0;
          const double sx = m[0] * x + m[1] * y + m[2];
          const double sy = m[3] * x + m[4] * y + m[5];
          hits += inside_shape(shape, sx, sy) ? 1 : 0;
        }
      }
      out[i * size + j] = static_cast<double>(hits) * inv;
    }
  }
  return out;
}

std::vector<double> colorize(const std::vector<double>& mask, std::size_t cls, std::size_t channels) {
  if (channels == 1) return mask;
  std::vector<double> out(3 * mask.size());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < mask.size(); ++k) out[c * mask.size() + k] = mask[k] * kClassColors[cls][c];
  }
  return out;
}

constexpr std::array<double, 6> kIdentityMatrix{1, 0, 0, 0, 1, 0};

}  // namespace

std::vector<double> render_base_image(BaseShape shape, const SyntheticSpec& spec) {
  auto mask = render_mask(shape, kIdentityMatrix, spec.image_size, spec.supersample);
  return colorize(mask, static_cast<std::size_t>(shape), spec.channels);
}

LabeledImageSet generate_synthetic_dataset(const SyntheticSpec& spec) {
  spec.validate();
  ad::NoGradGuard no_grad;
  LabeledImageSet out;
  out.channels = spec.channels;
  out.height = out.width = spec.image_size;
  out.num_classes = spec.classes;
  for (auto id : tf::params_of(tf::TransformKind::affine)) out.param_ids.push_back(id);
  if (spec.channels == 3) {
    for (auto id : tf::params_of(tf::TransformKind::color)) out.param_ids.push_back(id);
  }
  const std::size_t np = out.param_ids.size();
  out.labels.resize(spec.samples);
  out.ground_truth.resize(spec.samples * np);
  out.pixels.resize(spec.samples * out.image_size());

  for (std::size_t i = 0; i < spec.samples; ++i) {
    Rng rng(derive_seed(spec.seed, i));
    const std::size_t cls = i % spec.classes;
    out.labels[i] = static_cast<int>(cls);
    std::vector<double> normalized(np);
    for (std::size_t k = 0; k < np; ++k) {
      const tf::ParamId id = out.param_ids[k];
      const auto* dist = spec.distribution(id);
      double phys = tf::denormalize_unit(id, tf::identity_normalized(id));
      if (dist) phys = dist->sample(rng);
      out.ground_truth[i * np + k] = phys;
      normalized[k] = tf::normalize_unit(id, phys);
    }
    const auto theta = ad::Var::constant({1, 6}, std::vector<double>(normalized.begin(), normalized.begin() + 6));
    const auto m = tf::affine_matrix(theta);
    auto img = colorize(render_mask(static_cast<BaseShape>(cls), m.values(), spec.image_size, spec.supersample), cls,
                        spec.channels);
    if (spec.channels == 3) {
      const auto images = ad::Var::constant({1, 3, spec.image_size, spec.image_size}, std::move(img));
      const auto color = ad::Var::constant({1, 4}, std::vector<double>(normalized.begin() + 6, normalized.end()));
      const auto colored = tf::apply_color_transform(images, color);
      const auto v = colored.values();
      img.assign(v.begin(), v.end());
    }
    std::copy(img.begin(), img.end(), out.pixels.begin() + static_cast<std::ptrdiff_t>(i * out.image_size()));
  }
  return out;
}

}  // namespace xform::data
