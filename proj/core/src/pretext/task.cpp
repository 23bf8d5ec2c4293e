#include "xform/pretext/task.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xform/ad/ops.hpp"
#include "xform/error.hpp"
#include "xform/transforms/color.hpp"
#include "xform/transforms/geometric.hpp"

namespace xform::pretext {

namespace {

constexpr double kQuarter = std::numbers::pi / 2.0;

bool is_quarter_turn(double theta) { return std::abs(theta / kQuarter - std::round(theta / kQuarter)) < 1e-9; }

int quarter_turns(double theta) {
  const auto k = static_cast<long>(std::llround(theta / kQuarter));
  return static_cast<int>(((k % 4) + 4) % 4);
}

std::size_t floor_even(double v) {
  const auto n = static_cast<std::size_t>(std::floor(v + 1e-9));
  return n - (n % 2);
}

double max_abs(const dist::PolicySpec& policy, tf::ParamId id) {
  double m = 0.0;
  for (std::size_t p = 0; p < policy.params.size(); ++p) {
    if (policy.params[p] != id) continue;
    for (const auto& inst : policy.instances) m = std::max(m, std::abs(inst[p]));
  }
  return m;
}

}  // namespace

double shift_pixels(double translation, std::size_t image_size) {
  return std::abs(translation) * static_cast<double>(image_size - 1);
}

std::size_t pretext_crop_size(const dist::PolicySpec& policy, std::size_t image_size) {
  policy.validate();
  const double size = static_cast<double>(image_size);
  long crop = static_cast<long>(image_size);
  for (const auto id : policy.params) {
    switch (id) {
      case tf::ParamId::rotation: {
        for (const auto& inst : policy.instances) {
          const double theta = inst[0];
          if (is_quarter_turn(theta)) continue;
          const double factor = std::abs(std::cos(theta)) + std::abs(std::sin(theta));
          crop = std::min(crop, static_cast<long>(floor_even(size / factor)));
        }
        break;
      }
      case tf::ParamId::tx:
      case tf::ParamId::ty: {
        const double px = shift_pixels(max_abs(policy, id), image_size);
        crop = std::min(crop, static_cast<long>(image_size) - 2 * static_cast<long>(std::ceil(px - 1e-9)));
        break;
      }
      case tf::ParamId::scale: {
        double max_s = 1.0;
        for (const auto& inst : policy.instances) max_s = std::max(max_s, inst[0]);
        crop = std::min(crop, static_cast<long>(floor_even(size / max_s)));
        break;
      }
      case tf::ParamId::shear_x:
      case tf::ParamId::shear_y:
        crop = std::min(crop, static_cast<long>(floor_even(size / (1.0 + max_abs(policy, id)))));
        break;
      default:
        break;  // colour changes never pad
    }
  }
  if (crop <= 0) throw InvalidInput("pretext: crop for policy " + policy.id() + " is not positive");
  return static_cast<std::size_t>(crop);
}

ad::Var apply_instance(const dist::PolicySpec& policy, std::size_t instance, const ad::Var& images,
                       std::size_t crop) {
  const auto& values = policy.instances.at(instance);
  const std::size_t b = images.dim(0);
  if (policy.params.size() == 1 && policy.params[0] == tf::ParamId::rotation && is_quarter_turn(values[0])) {
    return tf::center_crop(tf::rotate_quarter_turns(images, quarter_turns(values[0])), crop, crop);
  }
  const auto kind = policy.kind();
  const auto ids = tf::params_of(kind);
  std::vector<double> row(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) row[k] = tf::identity_normalized(ids[k]);
  for (std::size_t p = 0; p < policy.params.size(); ++p) {
    const auto pos = std::find(ids.begin(), ids.end(), policy.params[p]) - ids.begin();
    row[static_cast<std::size_t>(pos)] = tf::normalize_unit(policy.params[p], values[p]);
  }
  std::vector<double> all;
  all.reserve(b * row.size());
  for (std::size_t i = 0; i < b; ++i) all.insert(all.end(), row.begin(), row.end());
  const auto theta = ad::Var::constant({b, row.size()}, std::move(all));
  const auto out = kind == tf::TransformKind::affine ? tf::warp_affine(images, theta)
                                                     : tf::apply_color_transform(images, theta);
  return tf::center_crop(out, crop, crop);
}

PretextBatch build_pretext_task(const dist::PolicySpec& policy, const data::LabeledImageSet& data,
                                std::span<const std::size_t> indices) {
  policy.validate();
  if (data.height != data.width) throw InvalidInput("pretext: images must be square");
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    indices = all;
  }
  ad::NoGradGuard no_grad;
  const std::size_t k = policy.size();
  const std::size_t crop = pretext_crop_size(policy, data.height);
  const std::size_t n = indices.size();
  const std::size_t per = data.channels * crop * crop;
  std::vector<double> pixels(n * k * per);
  std::vector<int> labels(n * k);
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    const auto src = data.batch(indices.subspan(start, len));
    for (std::size_t inst = 0; inst < k; ++inst) {
      const auto variant = apply_instance(policy, inst, src, crop);
      const auto v = variant.values();
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t row = (start + j) * k + inst;
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(j * per), per,
                    pixels.begin() + static_cast<std::ptrdiff_t>(row * per));
        labels[row] = static_cast<int>(inst);
      }
    }
  }
  PretextBatch out;
  out.images = ad::Var::constant({n * k, data.channels, crop, crop}, std::move(pixels));
  out.labels = std::move(labels);
  out.crop = crop;
  return out;
}

}  // namespace xform::pretext
