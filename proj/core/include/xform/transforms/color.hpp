#pragma once

#include <array>

#include "xform/ad/tensor.hpp"
#include "xform/transforms/params.hpp"

namespace xform::tf {

/// Luma weights of the grayscale conversion (r, g, b).
inline constexpr std::array<double, 3> kGrayWeights{0.299, 0.587, 0.114};

/// RGB -> YIQ, row-major.
inline constexpr std::array<double, 9> kRgbToYiq{0.299, 0.587, 0.114,   //
                                                 0.596, -0.275, -0.321,  //
                                                 0.212, -0.523, 0.311};

/// Numerical inverse of kRgbToYiq, computed once.
const std::array<double, 9>& yiq_to_rgb();

// Per-sample stages on images [B, 3, H, W]; factors are [B] nodes. None of
// them clamps.

ad::Var adjust_brightness(const ad::Var& images, const ad::Var& alpha);
ad::Var adjust_saturation(const ad::Var& images, const ad::Var& alpha);
ad::Var adjust_contrast(const ad::Var& images, const ad::Var& alpha);
/// Rotates the IQ plane by theta (radians). Implemented as
/// x + T_rgb (R_theta - I) T_yiq x, which equals T_rgb R_theta T_yiq x and is
/// exactly the identity at theta = 0.
ad::Var apply_hue_rotation(const ad::Var& images, const ad::Var& theta);

/// Brightness, saturation, contrast, then hue from normalized parameters
/// [B, 4], clamped to [0, 1] once at the end.
ad::Var apply_color_transform(const ad::Var& images, const ad::Var& normalized);

/// Single image [3, H, W] form.
ad::Var apply_color_transform(const ad::Var& image, const TransformParams& p);

}  // namespace xform::tf
