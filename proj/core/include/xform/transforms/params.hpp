#pragma once

// Semantic transformation parameters. Generators emit values in [-1, 1]
// ("normalized"); each coordinate maps monotonically onto a physical range.
//
//   parameter    physical unit                     map
//   scale        isotropic factor in [0.5, 2]      2^s
//   rotation     radians in [-pi, pi]              pi * r
//   tx, ty       fraction of width/height          0.5 * t
//   shear_x/y    shear factor in [-0.5, 0.5]       0.5 * h
//   brightness   factor in [0.5, 2]                2^b
//   saturation   blend factor in [0, 1]            (s + 1) / 2
//   contrast     factor in [0.5, 2]                2^c
//   hue          alpha_hue in [-0.5, 0.5]          h / 2   (theta = 2 pi alpha)

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xform::tf {

enum class TransformKind { affine, color };

enum class ParamId { scale, rotation, tx, ty, shear_x, shear_y, brightness, saturation, contrast, hue };

std::string_view kind_name(TransformKind kind);
TransformKind parse_kind(std::string_view name);

/// Parameter order of a kind's normalized vector.
std::span<const ParamId> params_of(TransformKind kind);
TransformKind kind_of(ParamId id);
std::string_view param_name(ParamId id);
ParamId parse_param(std::string_view name);

struct Range {
  double lo;
  double hi;
};

Range physical_range(ParamId id);
/// Physical value of a normalized coordinate; throws outside [-1, 1].
double denormalize_unit(ParamId id, double normalized);
/// Normalized coordinate of a physical value; throws outside the physical range.
double normalize_unit(ParamId id, double physical);
/// Normalized value that leaves images unchanged (1 for saturation, else 0).
double identity_normalized(ParamId id);

struct TransformParams {
  TransformKind kind = TransformKind::affine;
  std::vector<double> normalized;

  static TransformParams identity(TransformKind kind);
  /// Validates size and range.
  void validate() const;
  std::vector<double> physical() const;
};

std::vector<double> denormalize_params(const TransformParams& p);

}  // namespace xform::tf
