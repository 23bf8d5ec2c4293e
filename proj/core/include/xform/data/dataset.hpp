#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xform/ad/tensor.hpp"
#include "xform/transforms/params.hpp"

namespace xform::data {

/// Images in [0, 1] stored as N x C x H x W, with class labels and, for
/// synthetic data, the physical transformation parameters of each image.
struct LabeledImageSet {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t num_classes = 0;
  std::vector<double> pixels;
  std::vector<int> labels;

  /// Parameter columns of `ground_truth` (empty for real data).
  std::vector<tf::ParamId> param_ids;
  /// size() x param_ids.size(), physical units.
  std::vector<double> ground_truth;

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const { return channels * height * width; }
  bool has_ground_truth() const { return !param_ids.empty(); }

  std::span<const double> image(std::size_t i) const;
  std::span<const double> params(std::size_t i) const;
  /// Physical parameter column for one parameter id.
  std::vector<double> param_column(tf::ParamId id) const;

  /// Stacks the given images into a constant [B, C, H, W] tensor.
  ad::Var batch(std::span<const std::size_t> indices) const;
  LabeledImageSet subset(std::span<const std::size_t> indices) const;

  /// Throws InvalidInput when sizes or labels are inconsistent.
  void validate() const;
};

/// Per class, the images closest to the identity transformation (synthetic
/// data), or a seeded pick (data without ground truth).
std::vector<std::size_t> select_reference_indices(const LabeledImageSet& data, std::size_t n_per_class,
                                                  std::uint64_t seed);
LabeledImageSet select_reference_subset(const LabeledImageSet& data, std::size_t n_per_class, std::uint64_t seed);

/// Exact inverse of denormalization for one coordinate.
double normalize_units(double physical, tf::ParamId id);

/// Seeded split into (train, test) index lists, stratified by class.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_test(const LabeledImageSet& data,
                                                                               double test_fraction,
                                                                               std::uint64_t seed);

/// Parameters CSV: header "index,<param>,..." then one row per image.
void write_params_csv(const std::filesystem::path& path, const LabeledImageSet& data);
void read_params_csv(const std::filesystem::path& path, LabeledImageSet& data);

}  // namespace xform::data
