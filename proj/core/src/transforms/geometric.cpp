#include "xform/transforms/geometric.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "xform/ad/ops.hpp"
#include "xform/error.hpp"

namespace xform::tf {

using ad::Shape;
using ad::Var;

namespace {

double ndc(std::size_t index, std::size_t extent) {
  if (extent <= 1) return 0.0;
  return -1.0 + 2.0 * static_cast<double>(index) / static_cast<double>(extent - 1);
}

struct GridGeometry {
  std::size_t batch, src_h, src_w, out_h, out_w;
};

class AffineGridFn final : public ad::Function {
 public:
  AffineGridFn(Var m, GridGeometry geo) : Function({std::move(m)}), geo_(geo) {}
  std::string_view name() const override { return "affine_grid"; }
  bool twice_differentiable() const override { return false; }
  std::vector<Var> backward(const Var& g) const override {
    const double su = 0.5 * static_cast<double>(geo_.src_w > 0 ? geo_.src_w - 1 : 0);
    const double sv = 0.5 * static_cast<double>(geo_.src_h > 0 ? geo_.src_h - 1 : 0);
    std::vector<double> dm(geo_.batch * 6, 0.0);
    const auto gv = g.values();
    for (std::size_t b = 0; b < geo_.batch; ++b) {
      double* d = dm.data() + b * 6;
      for (std::size_t i = 0; i < geo_.out_h; ++i) {
        const double y = ndc(i, geo_.out_h);
        for (std::size_t j = 0; j < geo_.out_w; ++j) {
          const double x = ndc(j, geo_.out_w);
          const double* gp = gv.data() + ((b * geo_.out_h + i) * geo_.out_w + j) * 2;
          const double gu = gp[0] * su, gvv = gp[1] * sv;
          d[0] += gu * x;
          d[1] += gu * y;
          d[2] += gu;
          d[3] += gvv * x;
          d[4] += gvv * y;
          d[5] += gvv;
        }
      }
    }
    return {Var::constant(inputs()[0].shape(), std::move(dm))};
  }

 private:
  GridGeometry geo_;
};

struct SampleGeometry {
  std::size_t batch, channels, h, w, out_h, out_w;
};

// Bilinear taps for one source coordinate.
struct Taps {
  long x0, y0;
  double fx, fy;
  bool any;
};

Taps taps_for(double u, double v, std::size_t h, std::size_t w) {
  Taps t{};
  if (!std::isfinite(u) || !std::isfinite(v) || u <= -1.0 || v <= -1.0 || u >= static_cast<double>(w) ||
      v >= static_cast<double>(h)) {
    t.any = false;
    return t;
  }
  const double fu = std::floor(u), fv = std::floor(v);
  t.x0 = static_cast<long>(fu);
  t.y0 = static_cast<long>(fv);
  t.fx = u - fu;
  t.fy = v - fv;
  t.any = true;
  return t;
}

inline double pixel(const double* plane, long y, long x, std::size_t h, std::size_t w) {
  if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) return 0.0;
  return plane[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
}

inline void add_pixel(double* plane, long y, long x, std::size_t h, std::size_t w, double v) {
  if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) return;
  plane[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] += v;
}

class BilinearFn final : public ad::Function {
 public:
  BilinearFn(Var images, Var grid, SampleGeometry geo) : Function({std::move(images), std::move(grid)}), geo_(geo) {}
  std::string_view name() const override { return "bilinear_sample"; }
  bool twice_differentiable() const override { return false; }
  std::vector<Var> backward(const Var& g) const override {
    const Var& images = inputs()[0];
    const Var& grid = inputs()[1];
    const bool need_img = images.requires_grad(), need_grid = grid.requires_grad();
    std::vector<double> dimg(need_img ? images.numel() : 0, 0.0);
    std::vector<double> dgrid(need_grid ? grid.numel() : 0, 0.0);
    const auto iv = images.values();
    const auto gridv = grid.values();
    const auto gv = g.values();
    const std::size_t plane = geo_.h * geo_.w, out_plane = geo_.out_h * geo_.out_w;
    for (std::size_t b = 0; b < geo_.batch; ++b) {
      for (std::size_t p = 0; p < out_plane; ++p) {
        const std::size_t gi = (b * out_plane + p) * 2;
        const Taps t = taps_for(gridv[gi], gridv[gi + 1], geo_.h, geo_.w);
        if (!t.any) continue;
        const double w00 = (1 - t.fx) * (1 - t.fy), w01 = t.fx * (1 - t.fy);
        const double w10 = (1 - t.fx) * t.fy, w11 = t.fx * t.fy;
        double du = 0.0, dv = 0.0;
        for (std::size_t c = 0; c < geo_.channels; ++c) {
          const double go = gv[(b * geo_.channels + c) * out_plane + p];
          if (go == 0.0) continue;
          const std::size_t base = (b * geo_.channels + c) * plane;
          if (need_img) {
            double* d = dimg.data() + base;
            add_pixel(d, t.y0, t.x0, geo_.h, geo_.w, go * w00);
            add_pixel(d, t.y0, t.x0 + 1, geo_.h, geo_.w, go * w01);
            add_pixel(d, t.y0 + 1, t.x0, geo_.h, geo_.w, go * w10);
            add_pixel(d, t.y0 + 1, t.x0 + 1, geo_.h, geo_.w, go * w11);
          }
          if (need_grid) {
            const double* src = iv.data() + base;
            const double v00 = pixel(src, t.y0, t.x0, geo_.h, geo_.w);
            const double v01 = pixel(src, t.y0, t.x0 + 1, geo_.h, geo_.w);
            const double v10 = pixel(src, t.y0 + 1, t.x0, geo_.h, geo_.w);
            const double v11 = pixel(src, t.y0 + 1, t.x0 + 1, geo_.h, geo_.w);
            du += go * ((v01 - v00) * (1 - t.fy) + (v11 - v10) * t.fy);
            dv += go * ((v10 - v00) * (1 - t.fx) + (v11 - v01) * t.fx);
          }
        }
        if (need_grid) {
          dgrid[gi] += du;
          dgrid[gi + 1] += dv;
        }
      }
    }
    Var gi_img, gi_grid;
    if (need_img) gi_img = Var::constant(images.shape(), std::move(dimg));
    if (need_grid) gi_grid = Var::constant(grid.shape(), std::move(dgrid));
    return {gi_img, gi_grid};
  }

 private:
  SampleGeometry geo_;
};

Var column(const Var& x, std::size_t j) { return ad::reshape(ad::narrow(x, 1, j, 1), {x.dim(0)}); }

}  // namespace

Var affine_matrix(const Var& normalized) {
  if (normalized.rank() != 2 || normalized.dim(1) != 6) {
    throw ShapeError("affine_matrix: expected [B, 6] parameters, got " + ad::to_string(normalized.shape()));
  }
  const std::size_t batch = normalized.dim(0);
  const Var s = ad::exp(ad::scale(column(normalized, 0), std::numbers::ln2));
  const Var theta = ad::scale(column(normalized, 1), std::numbers::pi);
  // Translation as a fraction of the extent is 0.5·t; in normalized device
  // coordinates (span 2) that is exactly t.
  const Var a13 = column(normalized, 2);
  const Var a23 = column(normalized, 3);
  const Var hx = ad::scale(column(normalized, 4), 0.5);
  const Var hy = ad::scale(column(normalized, 5), 0.5);
  const Var c = ad::cos(theta), sn = ad::sin(theta);

  // R · Sh = [[c - sn·hy, c·hx - sn], [sn + c·hy, sn·hx + c]], then · s.
  const Var a11 = ad::mul(s, ad::sub(c, ad::mul(sn, hy)));
  const Var a12 = ad::mul(s, ad::sub(ad::mul(c, hx), sn));
  const Var a21 = ad::mul(s, ad::add(sn, ad::mul(c, hy)));
  const Var a22 = ad::mul(s, ad::add(ad::mul(sn, hx), c));

  std::vector<Var> cols;
  for (const Var* e : {&a11, &a12, &a13, &a21, &a22, &a23}) cols.push_back(ad::reshape(*e, {batch, 1}));
  return ad::reshape(ad::concat(cols, 1), {batch, 2, 3});
}

Var affine_matrix_from_params(const TransformParams& p) {
  if (p.kind != TransformKind::affine) throw InvalidInput("affine_matrix_from_params: parameters are not affine");
  p.validate();
  const Var leaf = Var::parameter({1, 6}, p.normalized);
  return ad::reshape(affine_matrix(leaf), {2, 3});
}

Var make_sampling_grid(const Var& matrices, std::size_t src_h, std::size_t src_w, std::size_t out_h,
                       std::size_t out_w) {
  if (out_h < 1 || out_w < 1 || src_h < 1 || src_w < 1) {
    throw InvalidInput("make_sampling_grid: dimensions must be >= 1");
  }
  Var m = matrices;
  if (m.rank() == 2) m = ad::reshape(m, {1, 2, 3});
  if (m.rank() != 3 || m.dim(1) != 2 || m.dim(2) != 3) {
    throw ShapeError("make_sampling_grid: expected [B, 2, 3] matrices, got " + ad::to_string(matrices.shape()));
  }
  GridGeometry geo{m.dim(0), src_h, src_w, out_h, out_w};
  const double su = 0.5 * static_cast<double>(src_w - 1);
  const double sv = 0.5 * static_cast<double>(src_h - 1);
  std::vector<double> out(geo.batch * out_h * out_w * 2);
  const auto mv = m.values();
  for (std::size_t b = 0; b < geo.batch; ++b) {
    const double* a = mv.data() + b * 6;
    for (std::size_t i = 0; i < out_h; ++i) {
      const double y = ndc(i, out_h);
      for (std::size_t j = 0; j < out_w; ++j) {
        const double x = ndc(j, out_w);
        double* o = out.data() + ((b * out_h + i) * out_w + j) * 2;
        o[0] = (a[0] * x + a[1] * y + a[2] + 1.0) * su;
        o[1] = (a[3] * x + a[4] * y + a[5] + 1.0) * sv;
      }
    }
  }
  return ad::detail::make_result({geo.batch, out_h, out_w, 2}, std::move(out), m.requires_grad(),
                                 [&] { return std::make_shared<AffineGridFn>(m, geo); });
}

Var bilinear_sample(const Var& images, const Var& grid) {
  Var img = images;
  const bool single = images.rank() == 3;
  if (single) img = ad::reshape(images, {1, images.dim(0), images.dim(1), images.dim(2)});
  if (img.rank() != 4) throw ShapeError("bilinear_sample: expected [B, C, H, W] images, got " + ad::to_string(images.shape()));
  if (grid.rank() != 4 || grid.dim(3) != 2 || grid.dim(0) != img.dim(0)) {
    throw ShapeError("bilinear_sample: incompatible shapes " + ad::to_string(images.shape()) + " and " +
                     ad::to_string(grid.shape()));
  }
  SampleGeometry geo{img.dim(0), img.dim(1), img.dim(2), img.dim(3), grid.dim(1), grid.dim(2)};
  const std::size_t plane = geo.h * geo.w, out_plane = geo.out_h * geo.out_w;
  std::vector<double> out(geo.batch * geo.channels * out_plane, 0.0);
  const auto iv = img.values();
  const auto gridv = grid.values();
  for (std::size_t b = 0; b < geo.batch; ++b) {
    for (std::size_t p = 0; p < out_plane; ++p) {
      const std::size_t gi = (b * out_plane + p) * 2;
      const Taps t = taps_for(gridv[gi], gridv[gi + 1], geo.h, geo.w);
      if (!t.any) continue;
      const double w00 = (1 - t.fx) * (1 - t.fy), w01 = t.fx * (1 - t.fy);
      const double w10 = (1 - t.fx) * t.fy, w11 = t.fx * t.fy;
      for (std::size_t c = 0; c < geo.channels; ++c) {
        const double* src = iv.data() + (b * geo.channels + c) * plane;
        out[(b * geo.channels + c) * out_plane + p] =
            pixel(src, t.y0, t.x0, geo.h, geo.w) * w00 + pixel(src, t.y0, t.x0 + 1, geo.h, geo.w) * w01 +
            pixel(src, t.y0 + 1, t.x0, geo.h, geo.w) * w10 + pixel(src, t.y0 + 1, t.x0 + 1, geo.h, geo.w) * w11;
      }
    }
  }
  Var result = ad::detail::make_result({geo.batch, geo.channels, geo.out_h, geo.out_w}, std::move(out),
                                       ad::detail::any_requires_grad({&img, &grid}),
                                       [&] { return std::make_shared<BilinearFn>(img, grid, geo); });
  if (single) return ad::reshape(result, {geo.channels, geo.out_h, geo.out_w});
  return result;
}

CropWindow center_crop_offsets(std::size_t h, std::size_t w, std::size_t crop_h, std::size_t crop_w) {
  if (crop_h > h || crop_w > w || crop_h == 0 || crop_w == 0) {
    throw InvalidInput("center_crop: crop " + std::to_string(crop_h) + "x" + std::to_string(crop_w) +
                       " does not fit image " + std::to_string(h) + "x" + std::to_string(w));
  }
  return {(h - crop_h) / 2, (w - crop_w) / 2};
}

Var center_crop(const Var& images, std::size_t crop_h, std::size_t crop_w) {
  if (images.rank() < 2) throw ShapeError("center_crop: expected at least 2 axes, got " + ad::to_string(images.shape()));
  const std::size_t ah = images.rank() - 2, aw = images.rank() - 1;
  const CropWindow win = center_crop_offsets(images.dim(ah), images.dim(aw), crop_h, crop_w);
  if (crop_h == images.dim(ah) && crop_w == images.dim(aw)) return images;
  return ad::narrow(ad::narrow(images, ah, win.top, crop_h), aw, win.left, crop_w);
}

Var warp_affine(const Var& images, const Var& normalized) {
  if (images.rank() != 4) throw ShapeError("warp_affine: expected [B, C, H, W] images, got " + ad::to_string(images.shape()));
  const std::size_t h = images.dim(2), w = images.dim(3);
  return bilinear_sample(images, make_sampling_grid(affine_matrix(normalized), h, w, h, w));
}

Var rotate_quarter_turns(const Var& images, int quarter_turns) {
  if (images.rank() < 2) throw ShapeError("rotate_quarter_turns: expected at least 2 axes");
  const std::size_t n = images.dim(images.rank() - 1);
  if (images.dim(images.rank() - 2) != n) {
    throw ShapeError("rotate_quarter_turns: square images required, got " + ad::to_string(images.shape()));
  }
  const int turns = ((quarter_turns % 4) + 4) % 4;
  std::vector<double> cur(images.values().begin(), images.values().end());
  std::vector<double> next(cur.size());
  const std::size_t plane = n * n, planes = cur.size() / plane;
  // One turn of the warp convention with rotation +pi/2: out[i][j] = in[j][n-1-i].
  for (int t = 0; t < turns; ++t) {
    for (std::size_t p = 0; p < planes; ++p) {
      const double* src = cur.data() + p * plane;
      double* dst = next.data() + p * plane;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) dst[i * n + j] = src[j * n + (n - 1 - i)];
    }
    cur.swap(next);
  }
  return Var::constant(images.shape(), std::move(cur));
}

}  // namespace xform::tf
