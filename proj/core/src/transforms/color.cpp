#include "xform/transforms/color.hpp"

#include <Eigen/Dense>
#include <numbers>
#include <string>

#include "xform/ad/ops.hpp"
#include "xform/error.hpp"

namespace xform::tf {

using ad::Var;

namespace {

void require_rgb(const char* who, const Var& images) {
  if (images.rank() != 4 || images.dim(1) != 3) {
    throw ShapeError(std::string(who) + ": expected [B, 3, H, W] images, got " + ad::to_string(images.shape()));
  }
}

void require_factor(const char* who, const Var& images, const Var& f) {
  if (f.numel() != images.dim(0)) {
    throw ShapeError(std::string(who) + ": incompatible shapes " + ad::to_string(images.shape()) + " and " +
                     ad::to_string(f.shape()));
  }
}

constexpr std::array<double, 9> gray_replicated() {
  std::array<double, 9> m{};
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t c = 0; c < 3; ++c) m[o * 3 + c] = kGrayWeights[c];
  return m;
}

constexpr auto kGrayMix = gray_replicated();

Var one_minus(const Var& a) { return ad::add_scalar(ad::scale(a, -1.0), 1.0); }

Var column(const Var& x, std::size_t j) { return ad::reshape(ad::narrow(x, 1, j, 1), {x.dim(0)}); }

}  // namespace

const std::array<double, 9>& yiq_to_rgb() {
  static const std::array<double, 9> inv = [] {
    Eigen::Matrix3d t;
    t << kRgbToYiq[0], kRgbToYiq[1], kRgbToYiq[2], kRgbToYiq[3], kRgbToYiq[4], kRgbToYiq[5], kRgbToYiq[6],
        kRgbToYiq[7], kRgbToYiq[8];
    const Eigen::Matrix3d i = t.inverse();
    std::array<double, 9> out{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(r * 3 + c)] = i(r, c);
    return out;
  }();
  return inv;
}

Var adjust_brightness(const Var& images, const Var& alpha) {
  require_rgb("adjust_brightness", images);
  require_factor("adjust_brightness", images, alpha);
  return ad::scale_per_sample(images, alpha);
}

Var adjust_saturation(const Var& images, const Var& alpha) {
  require_rgb("adjust_saturation", images);
  require_factor("adjust_saturation", images, alpha);
  const Var gray = ad::channel_mix(images, kGrayMix, 3);
  return ad::add(ad::scale_per_sample(images, alpha), ad::scale_per_sample(gray, one_minus(alpha)));
}

Var adjust_contrast(const Var& images, const Var& alpha) {
  require_rgb("adjust_contrast", images);
  require_factor("adjust_contrast", images, alpha);
  const std::size_t batch = images.dim(0);
  const double spatial = static_cast<double>(images.dim(2) * images.dim(3));
  const Var gray = ad::channel_mix(images, kGrayWeights, 1);
  const Var gray_mean = ad::scale(ad::sum_axis(ad::flatten(gray), 1), 1.0 / spatial);
  const Var a = ad::reshape(alpha, {batch});
  return ad::add_per_sample(ad::scale_per_sample(images, a), ad::mul(gray_mean, one_minus(a)));
}

Var apply_hue_rotation(const Var& images, const Var& theta) {
  require_rgb("apply_hue_rotation", images);
  require_factor("apply_hue_rotation", images, theta);
  const Var t = ad::reshape(theta, {images.dim(0)});
  const Var yiq = ad::channel_mix(images, kRgbToYiq, 3);
  const Var i = ad::narrow(yiq, 1, 1, 1);
  const Var q = ad::narrow(yiq, 1, 2, 1);
  const Var c1 = ad::add_scalar(ad::cos(t), -1.0);
  const Var s = ad::sin(t);
  const Var di = ad::sub(ad::scale_per_sample(i, c1), ad::scale_per_sample(q, s));
  const Var dq = ad::add(ad::scale_per_sample(i, s), ad::scale_per_sample(q, c1));
  const auto& inv = yiq_to_rgb();
  const std::array<double, 6> back{inv[1], inv[2], inv[4], inv[5], inv[7], inv[8]};
  const std::array<Var, 2> parts{di, dq};
  return ad::add(images, ad::channel_mix(ad::concat(parts, 1), back, 3));
}

Var apply_color_transform(const Var& images, const Var& normalized) {
  require_rgb("apply_color_transform", images);
  if (normalized.rank() != 2 || normalized.dim(1) != 4 || normalized.dim(0) != images.dim(0)) {
    throw ShapeError("apply_color_transform: incompatible shapes " + ad::to_string(images.shape()) + " and " +
                     ad::to_string(normalized.shape()));
  }
  const Var brightness = ad::exp(ad::scale(column(normalized, 0), std::numbers::ln2));
  const Var saturation = ad::add_scalar(ad::scale(column(normalized, 1), 0.5), 0.5);
  const Var contrast = ad::exp(ad::scale(column(normalized, 2), std::numbers::ln2));
  // theta = 2·pi·alpha_hue with alpha_hue = h / 2.
  const Var theta = ad::scale(column(normalized, 3), std::numbers::pi);

  Var x = adjust_brightness(images, brightness);
  x = adjust_saturation(x, saturation);
  x = adjust_contrast(x, contrast);
  x = apply_hue_rotation(x, theta);
  return ad::clamp(x, 0.0, 1.0);
}

Var apply_color_transform(const Var& image, const TransformParams& p) {
  if (p.kind != TransformKind::color) throw InvalidInput("apply_color_transform: parameters are not color");
  p.validate();
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("apply_color_transform: expected a [3, H, W] image, got " + ad::to_string(image.shape()));
  }
  const Var batched = ad::reshape(image, {1, 3, image.dim(1), image.dim(2)});
  const Var params = Var::constant({1, 4}, p.normalized);
  return ad::reshape(apply_color_transform(batched, params), image.shape());
}

}  // namespace xform::tf
