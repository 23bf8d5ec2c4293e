#pragma once

// IDX files as used by MNIST-style corpora. All header integers big-endian.
//
//   images: magic 0x00000803, then u32 N, H, W, then N*H*W unsigned bytes
//           (magic 0x00000804 adds a channel dimension: N, C, H, W)
//   labels: magic 0x00000801, then u32 N, then N unsigned bytes
//
// Pixel bytes map to [0, 1] by division by 255.

#include <filesystem>
#include <string>
#include <string_view>

#include "xform/data/dataset.hpp"

namespace xform::data {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxColorImagesMagic = 0x00000804;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

LabeledImageSet parse_idx(std::string_view image_bytes, std::string_view label_bytes);
LabeledImageSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

std::string encode_idx_images(const LabeledImageSet& data);
std::string encode_idx_labels(const LabeledImageSet& data);
/// Pixels are rounded to the nearest byte.
void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const LabeledImageSet& data);

}  // namespace xform::data
