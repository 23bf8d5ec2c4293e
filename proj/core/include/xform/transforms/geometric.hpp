#pragma once

// Differentiable affine warping in the spatial-transformer style: a 2x3
// matrix maps each output location (normalized device coordinates, [-1, 1]^2
// with corners at pixel centres) to a source location, and the output is
// read from the source with the bilinear kernel
//
//   O[c, i] = sum_n sum_m I[c, n, m] max(0, 1 - |u_i - m|) max(0, 1 - |v_i - n|)
//
// with zero contribution outside the source extent. Gradients flow to both
// the image and the sampling coordinates (and from there to the matrix).

#include <cstddef>

#include "xform/ad/tensor.hpp"
#include "xform/transforms/params.hpp"

namespace xform::tf {

/// Normalized affine parameters [B, 6] (scale, rotation, tx, ty, shear_x,
/// shear_y) to matrices [B, 2, 3] composed as M = T · R · Sh · S.
ad::Var affine_matrix(const ad::Var& normalized);

/// Single-sample form; the normalized vector becomes a parameter leaf so the
/// returned [2, 3] matrix can be differentiated back to it.
ad::Var affine_matrix_from_params(const TransformParams& p);

/// Source pixel coordinates [B, out_h, out_w, 2] as (u, v) = (column, row)
/// for matrices [B, 2, 3] (or a single [2, 3]).
ad::Var make_sampling_grid(const ad::Var& matrices, std::size_t src_h, std::size_t src_w, std::size_t out_h,
                           std::size_t out_w);

/// Bilinear resampling of images [B, C, H, W] (or [C, H, W]) at the grid's
/// source coordinates. Grid batch must match the image batch.
ad::Var bilinear_sample(const ad::Var& images, const ad::Var& grid);

struct CropWindow {
  std::size_t top;
  std::size_t left;
};

/// Offsets floor((H - h) / 2), floor((W - w) / 2).
CropWindow center_crop_offsets(std::size_t h, std::size_t w, std::size_t crop_h, std::size_t crop_w);

/// Central crop over the last two axes.
ad::Var center_crop(const ad::Var& images, std::size_t crop_h, std::size_t crop_w);

/// Warps images [B, C, H, W] by normalized affine parameters [B, 6] at the
/// source resolution.
ad::Var warp_affine(const ad::Var& images, const ad::Var& normalized);

/// Exact rotation by quarter turns (counter-clockwise in image display) over
/// the last two axes; requires square images. Values only, no gradient.
ad::Var rotate_quarter_turns(const ad::Var& images, int quarter_turns);

}  // namespace xform::tf
