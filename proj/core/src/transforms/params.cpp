#include "xform/transforms/params.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "xform/error.hpp"

namespace xform::tf {

namespace {

constexpr std::array kAffine{ParamId::scale, ParamId::rotation, ParamId::tx,
                             ParamId::ty,    ParamId::shear_x,  ParamId::shear_y};
constexpr std::array kColor{ParamId::brightness, ParamId::saturation, ParamId::contrast, ParamId::hue};

constexpr std::array<std::pair<ParamId, std::string_view>, 10> kNames{{
    {ParamId::scale, "scale"},
    {ParamId::rotation, "rotation"},
    {ParamId::tx, "tx"},
    {ParamId::ty, "ty"},
    {ParamId::shear_x, "shear_x"},
    {ParamId::shear_y, "shear_y"},
    {ParamId::brightness, "brightness"},
    {ParamId::saturation, "saturation"},
    {ParamId::contrast, "contrast"},
    {ParamId::hue, "hue"},
}};

bool is_log2(ParamId id) {
  return id == ParamId::scale || id == ParamId::brightness || id == ParamId::contrast;
}

}  // namespace

std::string_view kind_name(TransformKind kind) { return kind == TransformKind::affine ? "affine" : "color"; }

TransformKind parse_kind(std::string_view name) {
  if (name == "affine") return TransformKind::affine;
  if (name == "color") return TransformKind::color;
  throw InvalidInput("unknown transform kind '" + std::string(name) + "'");
}

std::span<const ParamId> params_of(TransformKind kind) {
  if (kind == TransformKind::affine) return kAffine;
  return kColor;
}

TransformKind kind_of(ParamId id) {
  switch (id) {
    case ParamId::brightness:
    case ParamId::saturation:
    case ParamId::contrast:
    case ParamId::hue: return TransformKind::color;
    default: return TransformKind::affine;
  }
}

std::string_view param_name(ParamId id) {
  for (const auto& [k, name] : kNames)
    if (k == id) return name;
  return "?";
}

ParamId parse_param(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  throw InvalidInput("unknown transform parameter '" + std::string(name) + "'");
}

Range physical_range(ParamId id) {
  switch (id) {
    case ParamId::scale:
    case ParamId::brightness:
    case ParamId::contrast: return {0.5, 2.0};
    case ParamId::rotation: return {-std::numbers::pi, std::numbers::pi};
    case ParamId::tx:
    case ParamId::ty:
    case ParamId::shear_x:
    case ParamId::shear_y:
    case ParamId::hue: return {-0.5, 0.5};
    case ParamId::saturation: return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

double denormalize_unit(ParamId id, double n) {
  if (!(n >= -1.0 && n <= 1.0)) {
    throw InvalidInput("denormalize: " + std::string(param_name(id)) + " value " + std::to_string(n) +
                       " outside [-1, 1]");
  }
  if (is_log2(id)) return std::exp(n * std::numbers::ln2);
  switch (id) {
    case ParamId::rotation: return std::numbers::pi * n;
    case ParamId::saturation: return 0.5 * (n + 1.0);
    default: return 0.5 * n;
  }
}

double normalize_unit(ParamId id, double physical) {
  const Range r = physical_range(id);
  // Physical endpoints computed through exp/multiply may overshoot by an ulp.
  const double slack = 1e-12 * std::max(1.0, std::abs(r.hi));
  if (!(physical >= r.lo - slack && physical <= r.hi + slack)) {
    throw InvalidInput("normalize: " + std::string(param_name(id)) + " value " + std::to_string(physical) +
                       " outside [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
  }
  double n;
  if (is_log2(id)) {
    n = std::log2(physical);
  } else if (id == ParamId::rotation) {
    n = physical / std::numbers::pi;
  } else if (id == ParamId::saturation) {
    n = 2.0 * physical - 1.0;
  } else {
    n = 2.0 * physical;
  }
  return std::clamp(n, -1.0, 1.0);
}

double identity_normalized(ParamId id) { return id == ParamId::saturation ? 1.0 : 0.0; }

TransformParams TransformParams::identity(TransformKind kind) {
  TransformParams p;
  p.kind = kind;
  for (ParamId id : params_of(kind)) p.normalized.push_back(identity_normalized(id));
  return p;
}

void TransformParams::validate() const {
  const auto ids = params_of(kind);
  if (normalized.size() != ids.size()) {
    throw InvalidInput(std::string(kind_name(kind)) + " parameters need " + std::to_string(ids.size()) +
                       " values, got " + std::to_string(normalized.size()));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) denormalize_unit(ids[i], normalized[i]);
}

std::vector<double> TransformParams::physical() const { return denormalize_params(*this); }

std::vector<double> denormalize_params(const TransformParams& p) {
  p.validate();
  const auto ids = params_of(p.kind);
  std::vector<double> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) out[i] = denormalize_unit(ids[i], p.normalized[i]);
  return out;
}

}  // namespace xform::tf
