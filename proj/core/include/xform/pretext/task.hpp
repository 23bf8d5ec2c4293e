#pragma once

#include <span>
#include <vector>

#include "xform/ad/tensor.hpp"
#include "xform/data/dataset.hpp"
#include "xform/dist/policy.hpp"

namespace xform::pretext {

/// K transformed variants per source image; label i marks policy instance i.
struct PretextBatch {
  ad::Var images;  // [N * K, C, crop, crop], variants of one source adjacent
  std::vector<int> labels;
  std::size_t crop = 0;
};

/// Side length of the centre crop that hides every instance's padding:
///   quarter-turn rotations   image size (lossless)
///   other rotations          size / (|cos| + |sin|), rounded down to even
///   translation              size - 2 ceil(max shift in pixels)
///   scale                    size / max(1, max scale), rounded down to even
///   shear                    size / (1 + max |shear|), rounded down to even
/// Throws InvalidInput if the result is not positive.
std::size_t pretext_crop_size(const dist::PolicySpec& policy, std::size_t image_size);

/// Shift of a translation value in pixels: |t| (size - 1).
double shift_pixels(double translation, std::size_t image_size);

/// Applies one policy instance to images [B, C, S, S], then crops to `crop`.
ad::Var apply_instance(const dist::PolicySpec& policy, std::size_t instance, const ad::Var& images,
                       std::size_t crop);

/// Variants of the selected images (all images when `indices` is empty).
PretextBatch build_pretext_task(const dist::PolicySpec& policy, const data::LabeledImageSet& data,
                                std::span<const std::size_t> indices = {});

}  // namespace xform::pretext
