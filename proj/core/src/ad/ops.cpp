#include "xform/ad/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "xform/error.hpp"

namespace xform::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

[[noreturn]] void shape_fail(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " + to_string(b));
}

[[noreturn]] void shape_fail(std::string_view op, const Shape& a, const std::string& why) {
  throw ShapeError(std::string(op) + ": invalid shape " + to_string(a) + " (" + why + ")");
}

void require_defined(std::string_view op, const Var& v) {
  if (!v.defined()) throw Error(std::string(op) + ": undefined input");
}

void require_same(std::string_view op, const Var& a, const Var& b) {
  require_defined(op, a);
  require_defined(op, b);
  if (a.shape() != b.shape()) shape_fail(op, a.shape(), b.shape());
}

void require_rank(std::string_view op, const Var& x, std::size_t rank) {
  require_defined(op, x);
  if (x.rank() != rank) shape_fail(op, x.shape(), "expected rank " + std::to_string(rank));
}

// [outer, n, inner] view of a shape around one axis.
struct AxisView {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

// ---------------------------------------------------------------------------

class MatmulFn final : public Function {
 public:
  MatmulFn(Var a, Var b, bool ta, bool tb) : Function({std::move(a), std::move(b)}), ta_(ta), tb_(tb) {}
  std::string_view name() const override { return "matmul"; }
  std::vector<Var> backward(const Var& g) const override {
    const Var& a = inputs()[0];
    const Var& b = inputs()[1];
    Var ga, gb;
    const bool need_a = a.requires_grad(), need_b = b.requires_grad();
    if (!ta_ && !tb_) {
      if (need_a) ga = matmul(g, b, false, true);
      if (need_b) gb = matmul(a, g, true, false);
    } else if (ta_ && !tb_) {
      if (need_a) ga = matmul(b, g, false, true);
      if (need_b) gb = matmul(a, g, false, false);
    } else if (!ta_ && tb_) {
      if (need_a) ga = matmul(g, b, false, false);
      if (need_b) gb = matmul(g, a, true, false);
    } else {
      if (need_a) ga = matmul(b, g, true, true);
      if (need_b) gb = matmul(g, a, true, true);
    }
    return {ga, gb};
  }

 private:
  bool ta_, tb_;
};

class TransposeFn final : public Function {
 public:
  explicit TransposeFn(Var a) : Function({std::move(a)}) {}
  std::string_view name() const override { return "transpose"; }
  std::vector<Var> backward(const Var& g) const override { return {transpose(g)}; }
};

class BiasAddFn final : public Function {
 public:
  BiasAddFn(Var x, Var b) : Function({std::move(x), std::move(b)}) {}
  std::string_view name() const override { return "bias_add"; }
  std::vector<Var> backward(const Var& g) const override {
    Var gb;
    if (inputs()[1].requires_grad()) gb = sum_axis(g, 0);
    return {g, gb};
  }
};

class AddFn final : public Function {
 public:
  AddFn(Var a, Var b) : Function({std::move(a), std::move(b)}) {}
  std::string_view name() const override { return "add"; }
  std::vector<Var> backward(const Var& g) const override { return {g, g}; }
};

class SubFn final : public Function {
 public:
  SubFn(Var a, Var b) : Function({std::move(a), std::move(b)}) {}
  std::string_view name() const override { return "sub"; }
  std::vector<Var> backward(const Var& g) const override {
    Var gb;
    if (inputs()[1].requires_grad()) gb = scale(g, -1.0);
    return {g, gb};
  }
};

class MulFn final : public Function {
 public:
  MulFn(Var a, Var b) : Function({std::move(a), std::move(b)}) {}
  std::string_view name() const override { return "mul"; }
  std::vector<Var> backward(const Var& g) const override {
    const Var& a = inputs()[0];
    const Var& b = inputs()[1];
    Var ga, gb;
    if (a.requires_grad()) ga = mul(g, b);
    if (b.requires_grad()) gb = mul(g, a);
    return {ga, gb};
  }
};

class ScaleFn final : public Function {
 public:
  ScaleFn(Var x, double c) : Function({std::move(x)}), c_(c) {}
  std::string_view name() const override { return "scale"; }
  std::vector<Var> backward(const Var& g) const override { return {scale(g, c_)}; }

 private:
  double c_;
};

class AddScalarFn final : public Function {
 public:
  explicit AddScalarFn(Var x) : Function({std::move(x)}) {}
  std::string_view name() const override { return "add_scalar"; }
  std::vector<Var> backward(const Var& g) const override { return {g}; }
};

class SquareFn final : public Function {
 public:
  explicit SquareFn(Var x) : Function({std::move(x)}) {}
  std::string_view name() const override { return "square"; }
  std::vector<Var> backward(const Var& g) const override { return {mul(g, scale(inputs()[0], 2.0))}; }
};

// Multiplies the incoming gradient by a constant local derivative.
class MaskedFn final : public Function {
 public:
  MaskedFn(std::string_view name, Var x, std::vector<double> local)
      : Function({std::move(x)}), name_(name), local_(std::move(local)) {}
  std::string_view name() const override { return name_; }
  std::vector<Var> backward(const Var& g) const override {
    return {mul(g, Var::constant(g.shape(), local_))};
  }

 private:
  std::string_view name_;
  std::vector<double> local_;
};

class SqrtFn final : public Function {
 public:
  SqrtFn(Var x, std::vector<double> out) : Function({std::move(x)}), out_(std::move(out)) {}
  std::string_view name() const override { return "sqrt"; }
  bool twice_differentiable() const override { return false; }
  std::vector<Var> backward(const Var& g) const override {
    std::vector<double> local(out_.size());
    for (std::size_t i = 0; i < out_.size(); ++i) local[i] = 0.5 / out_[i];
    return {mul(g, Var::constant(g.shape(), std::move(local)))};
  }

 private:
  std::vector<double> out_;
};

enum class Smooth { exp, sin, cos, tanh };

// Smooth unary maps whose derivative is re-expressed through differentiable
// ops when a graph is being built, and read from cached values otherwise.
class SmoothFn final : public Function {
 public:
  SmoothFn(Smooth kind, Var x, std::vector<double> out)
      : Function({std::move(x)}), kind_(kind), out_(std::move(out)) {}
  std::string_view name() const override {
    switch (kind_) {
      case Smooth::exp: return "exp";
      case Smooth::sin: return "sin";
      case Smooth::cos: return "cos";
      case Smooth::tanh: return "tanh";
    }
    return "smooth";
  }
  std::vector<Var> backward(const Var& g) const override {
    const Var& x = inputs()[0];
    if (grad_enabled() && (g.requires_grad() || x.requires_grad())) {
      switch (kind_) {
        case Smooth::exp: return {mul(g, exp(x))};
        case Smooth::sin: return {mul(g, cos(x))};
        case Smooth::cos: return {mul(g, scale(sin(x), -1.0))};
        case Smooth::tanh: return {mul(g, add_scalar(scale(square(tanh(x)), -1.0), 1.0))};
      }
    }
    std::vector<double> local(out_.size());
    const auto xv = x.values();
    for (std::size_t i = 0; i < local.size(); ++i) {
      switch (kind_) {
        case Smooth::exp: local[i] = out_[i]; break;
        case Smooth::sin: local[i] = std::cos(xv[i]); break;
        case Smooth::cos: local[i] = -std::sin(xv[i]); break;
        case Smooth::tanh: local[i] = 1.0 - out_[i] * out_[i]; break;
      }
    }
    return {mul(g, Var::constant(g.shape(), std::move(local)))};
  }

 private:
  Smooth kind_;
  std::vector<double> out_;
};

class ScalePerSampleFn final : public Function {
 public:
  ScalePerSampleFn(Var x, Var s) : Function({std::move(x), std::move(s)}) {}
  std::string_view name() const override { return "scale_per_sample"; }
  std::vector<Var> backward(const Var& g) const override {
    const Var& x = inputs()[0];
    const Var& s = inputs()[1];
    Var gx, gs;
    if (x.requires_grad()) gx = scale_per_sample(g, s);
    if (s.requires_grad()) gs = reshape(sum_axis(flatten(mul(g, x)), 1), s.shape());
    return {gx, gs};
  }
};

class AddPerSampleFn final : public Function {
 public:
  AddPerSampleFn(Var x, Var s) : Function({std::move(x), std::move(s)}) {}
  std::string_view name() const override { return "add_per_sample"; }
  std::vector<Var> backward(const Var& g) const override {
    const Var& s = inputs()[1];
    Var gs;
    if (s.requires_grad()) gs = reshape(sum_axis(flatten(g), 1), s.shape());
    return {g, gs};
  }
};

class ChannelMixFn final : public Function {
 public:
  ChannelMixFn(Var x, std::vector<double> mix, std::size_t out_c, std::size_t in_c)
      : Function({std::move(x)}), mix_(std::move(mix)), out_c_(out_c), in_c_(in_c) {}
  std::string_view name() const override { return "channel_mix"; }
  std::vector<Var> backward(const Var& g) const override {
    std::vector<double> t(mix_.size());
    for (std::size_t o = 0; o < out_c_; ++o)
      for (std::size_t c = 0; c < in_c_; ++c) t[c * out_c_ + o] = mix_[o * in_c_ + c];
    return {channel_mix(g, t, in_c_)};
  }

 private:
  std::vector<double> mix_;
  std::size_t out_c_, in_c_;
};

class SumFn final : public Function {
 public:
  explicit SumFn(Var x) : Function({std::move(x)}) {}
  std::string_view name() const override { return "sum"; }
  std::vector<Var> backward(const Var& g) const override { return {expand_scalar(g, inputs()[0].shape())}; }
};

class MeanFn final : public Function {
 public:
  explicit MeanFn(Var x) : Function({std::move(x)}) {}
  std::string_view name() const override { return "mean"; }
  std::vector<Var> backward(const Var& g) const override {
    const Var& x = inputs()[0];
    return {expand_scalar(scale(g, 1.0 / static_cast<double>(x.numel())), x.shape())};
  }
};

class SumAxisFn final : public Function {
 public:
  SumAxisFn(Var x, std::size_t axis) : Function({std::move(x)}), axis_(axis) {}
  std::string_view name() const override { return "sum_axis"; }
  std::vector<Var> backward(const Var& g) const override {
    return {broadcast_axis(g, axis_, inputs()[0].dim(axis_))};
  }

 private:
  std::size_t axis_;
};

class BroadcastAxisFn final : public Function {
 public:
  BroadcastAxisFn(Var x, std::size_t axis) : Function({std::move(x)}), axis_(axis) {}
  std::string_view name() const override { return "broadcast_axis"; }
  std::vector<Var> backward(const Var& g) const override { return {sum_axis(g, axis_)}; }

 private:
  std::size_t axis_;
};

class ExpandScalarFn final : public Function {
 public:
  explicit ExpandScalarFn(Var x) : Function({std::move(x)}) {}
  std::string_view name() const override { return "expand_scalar"; }
  std::vector<Var> backward(const Var& g) const override { return {reshape(sum(g), inputs()[0].shape())}; }
};

class ReshapeFn final : public Function {
 public:
  explicit ReshapeFn(Var x) : Function({std::move(x)}) {}
  std::string_view name() const override { return "reshape"; }
  std::vector<Var> backward(const Var& g) const override { return {reshape(g, inputs()[0].shape())}; }
};

class NarrowFn final : public Function {
 public:
  NarrowFn(Var x, std::size_t axis, std::size_t start) : Function({std::move(x)}), axis_(axis), start_(start) {}
  std::string_view name() const override { return "narrow"; }
  std::vector<Var> backward(const Var& g) const override {
    return {pad_axis(g, axis_, start_, inputs()[0].dim(axis_))};
  }

 private:
  std::size_t axis_, start_;
};

class PadAxisFn final : public Function {
 public:
  PadAxisFn(Var x, std::size_t axis, std::size_t start) : Function({std::move(x)}), axis_(axis), start_(start) {}
  std::string_view name() const override { return "pad_axis"; }
  std::vector<Var> backward(const Var& g) const override {
    return {narrow(g, axis_, start_, inputs()[0].dim(axis_))};
  }

 private:
  std::size_t axis_, start_;
};

class ConcatFn final : public Function {
 public:
  ConcatFn(std::vector<Var> parts, std::size_t axis) : Function(std::move(parts)), axis_(axis) {}
  std::string_view name() const override { return "concat"; }
  std::vector<Var> backward(const Var& g) const override {
    std::vector<Var> out;
    std::size_t offset = 0;
    for (const Var& part : inputs()) {
      const std::size_t len = part.dim(axis_);
      out.push_back(part.requires_grad() ? narrow(g, axis_, offset, len) : Var());
      offset += len;
    }
    return out;
  }

 private:
  std::size_t axis_;
};

struct ConvGeometry {
  std::size_t batch, in_c, h, w, out_c, k, stride, pad, out_h, out_w;
};

// Columns [C·k·k, out_h·out_w] for one sample.
void im2col(const double* x, const ConvGeometry& geo, double* cols) {
  const std::size_t out_hw = geo.out_h * geo.out_w;
  for (std::size_t c = 0; c < geo.in_c; ++c) {
    for (std::size_t ki = 0; ki < geo.k; ++ki) {
      for (std::size_t kj = 0; kj < geo.k; ++kj) {
        double* row = cols + ((c * geo.k + ki) * geo.k + kj) * out_hw;
        for (std::size_t oi = 0; oi < geo.out_h; ++oi) {
          const long ii = static_cast<long>(oi * geo.stride + ki) - static_cast<long>(geo.pad);
          for (std::size_t oj = 0; oj < geo.out_w; ++oj) {
            const long jj = static_cast<long>(oj * geo.stride + kj) - static_cast<long>(geo.pad);
            const bool inside = ii >= 0 && jj >= 0 && ii < static_cast<long>(geo.h) && jj < static_cast<long>(geo.w);
            row[oi * geo.out_w + oj] = inside ? x[(c * geo.h + ii) * geo.w + jj] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, const ConvGeometry& geo, double* dx) {
  const std::size_t out_hw = geo.out_h * geo.out_w;
  for (std::size_t c = 0; c < geo.in_c; ++c) {
    for (std::size_t ki = 0; ki < geo.k; ++ki) {
      for (std::size_t kj = 0; kj < geo.k; ++kj) {
        const double* row = cols + ((c * geo.k + ki) * geo.k + kj) * out_hw;
        for (std::size_t oi = 0; oi < geo.out_h; ++oi) {
          const long ii = static_cast<long>(oi * geo.stride + ki) - static_cast<long>(geo.pad);
          if (ii < 0 || ii >= static_cast<long>(geo.h)) continue;
          for (std::size_t oj = 0; oj < geo.out_w; ++oj) {
            const long jj = static_cast<long>(oj * geo.stride + kj) - static_cast<long>(geo.pad);
            if (jj < 0 || jj >= static_cast<long>(geo.w)) continue;
            dx[(c * geo.h + ii) * geo.w + jj] += row[oi * geo.out_w + oj];
          }
        }
      }
    }
  }
}

class Conv2dFn final : public Function {
 public:
  Conv2dFn(Var x, Var w, Var b, ConvGeometry geo) : Function({std::move(x), std::move(w), std::move(b)}), geo_(geo) {}
  std::string_view name() const override { return "conv2d"; }
  bool twice_differentiable() const override { return false; }
  std::vector<Var> backward(const Var& g) const override {
    const Var& x = inputs()[0];
    const Var& w = inputs()[1];
    const Var& b = inputs()[2];
    const std::size_t ckk = geo_.in_c * geo_.k * geo_.k;
    const std::size_t out_hw = geo_.out_h * geo_.out_w;
    const std::size_t in_sz = geo_.in_c * geo_.h * geo_.w;
    std::vector<double> dx(x.requires_grad() ? x.numel() : 0, 0.0);
    std::vector<double> dw(w.numel(), 0.0);
    std::vector<double> db(geo_.out_c, 0.0);
    std::vector<double> cols(ckk * out_hw), dcols(ckk * out_hw);
    ConstMap W(w.values().data(), geo_.out_c, ckk);
    MutMap DW(dw.data(), geo_.out_c, ckk);
    for (std::size_t n = 0; n < geo_.batch; ++n) {
      ConstMap G(g.values().data() + n * geo_.out_c * out_hw, geo_.out_c, out_hw);
      im2col(x.values().data() + n * in_sz, geo_, cols.data());
      ConstMap C(cols.data(), ckk, out_hw);
      DW.noalias() += G * C.transpose();
      for (std::size_t o = 0; o < geo_.out_c; ++o) db[o] += G.row(o).sum();
      if (x.requires_grad()) {
        MutMap DC(dcols.data(), ckk, out_hw);
        DC.noalias() = W.transpose() * G;
        col2im(dcols.data(), geo_, dx.data() + n * in_sz);
      }
    }
    Var gx, gw, gb;
    if (x.requires_grad()) gx = Var::constant(x.shape(), std::move(dx));
    if (w.requires_grad()) gw = Var::constant(w.shape(), std::move(dw));
    if (b.defined() && b.requires_grad()) gb = Var::constant(b.shape(), std::move(db));
    return {gx, gw, gb};
  }

 private:
  ConvGeometry geo_;
};

class SoftmaxCrossEntropyFn final : public Function {
 public:
  SoftmaxCrossEntropyFn(Var logits, std::vector<double> grad_unit)
      : Function({std::move(logits)}), grad_unit_(std::move(grad_unit)) {}
  std::string_view name() const override { return "softmax_cross_entropy"; }
  bool twice_differentiable() const override { return false; }
  std::vector<Var> backward(const Var& g) const override {
    std::vector<double> out(grad_unit_);
    const double scale_by = g.item();
    for (double& v : out) v *= scale_by;
    return {Var::constant(inputs()[0].shape(), std::move(out))};
  }

 private:
  std::vector<double> grad_unit_;
};

template <typename F>
std::vector<double> map_values(const Var& x, F&& f) {
  std::vector<double> out(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return out;
}

template <typename F>
std::vector<double> zip_values(const Var& a, const Var& b, F&& f) {
  std::vector<double> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  return out;
}

Var smooth(Smooth kind, const Var& x, double (*f)(double)) {
  require_defined("smooth", x);
  auto out = map_values(x, f);
  const bool track = detail::any_requires_grad({&x}) && grad_enabled();
  std::vector<double> cached = track ? out : std::vector<double>{};
  return detail::make_result(x.shape(), std::move(out), track,
                             [&] { return std::make_shared<SmoothFn>(kind, x, std::move(cached)); });
}

Var masked(std::string_view name, const Var& x, std::vector<double> out, std::vector<double> local) {
  return detail::make_result(x.shape(), std::move(out), detail::any_requires_grad({&x}),
                             [&] { return std::make_shared<MaskedFn>(name, x, std::move(local)); });
}

}  // namespace

// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b, bool transpose_a, bool transpose_b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = transpose_a ? a.dim(1) : a.dim(0);
  const std::size_t k = transpose_a ? a.dim(0) : a.dim(1);
  const std::size_t kb = transpose_b ? b.dim(1) : b.dim(0);
  const std::size_t n = transpose_b ? b.dim(0) : b.dim(1);
  if (k != kb) shape_fail("matmul", a.shape(), b.shape());
  std::vector<double> out(m * n);
  ConstMap A(a.values().data(), a.dim(0), a.dim(1));
  ConstMap B(b.values().data(), b.dim(0), b.dim(1));
  MutMap C(out.data(), m, n);
  if (!transpose_a && !transpose_b) {
    C.noalias() = A * B;
  } else if (transpose_a && !transpose_b) {
    C.noalias() = A.transpose() * B;
  } else if (!transpose_a && transpose_b) {
    C.noalias() = A * B.transpose();
  } else {
    C.noalias() = A.transpose() * B.transpose();
  }
  return detail::make_result({m, n}, std::move(out), detail::any_requires_grad({&a, &b}),
                             [&] { return std::make_shared<MatmulFn>(a, b, transpose_a, transpose_b); });
}

Var transpose(const Var& a) {
  require_rank("transpose", a, 2);
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(a.numel());
  const auto av = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return detail::make_result({c, r}, std::move(out), detail::any_requires_grad({&a}),
                             [&] { return std::make_shared<TransposeFn>(a); });
}

Var bias_add(const Var& x, const Var& bias) {
  require_rank("bias_add", x, 2);
  require_rank("bias_add", bias, 1);
  if (x.dim(1) != bias.dim(0)) shape_fail("bias_add", x.shape(), bias.shape());
  std::vector<double> out(x.values().begin(), x.values().end());
  const std::size_t n = bias.dim(0);
  const auto bv = bias.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
  return detail::make_result(x.shape(), std::move(out), detail::any_requires_grad({&x, &bias}),
                             [&] { return std::make_shared<BiasAddFn>(x, bias); });
}

Var add(const Var& a, const Var& b) {
  require_same("add", a, b);
  return detail::make_result(a.shape(), zip_values(a, b, [](double p, double q) { return p + q; }),
                             detail::any_requires_grad({&a, &b}), [&] { return std::make_shared<AddFn>(a, b); });
}

Var sub(const Var& a, const Var& b) {
  require_same("sub", a, b);
  return detail::make_result(a.shape(), zip_values(a, b, [](double p, double q) { return p - q; }),
                             detail::any_requires_grad({&a, &b}), [&] { return std::make_shared<SubFn>(a, b); });
}

Var mul(const Var& a, const Var& b) {
  require_same("mul", a, b);
  return detail::make_result(a.shape(), zip_values(a, b, [](double p, double q) { return p * q; }),
                             detail::any_requires_grad({&a, &b}), [&] { return std::make_shared<MulFn>(a, b); });
}

Var scale(const Var& x, double factor) {
  require_defined("scale", x);
  return detail::make_result(x.shape(), map_values(x, [factor](double v) { return v * factor; }),
                             detail::any_requires_grad({&x}), [&] { return std::make_shared<ScaleFn>(x, factor); });
}

Var add_scalar(const Var& x, double offset) {
  require_defined("add_scalar", x);
  return detail::make_result(x.shape(), map_values(x, [offset](double v) { return v + offset; }),
                             detail::any_requires_grad({&x}), [&] { return std::make_shared<AddScalarFn>(x); });
}

Var square(const Var& x) {
  require_defined("square", x);
  return detail::make_result(x.shape(), map_values(x, [](double v) { return v * v; }),
                             detail::any_requires_grad({&x}), [&] { return std::make_shared<SquareFn>(x); });
}

Var sqrt(const Var& x) {
  require_defined("sqrt", x);
  auto out = map_values(x, [](double v) { return std::sqrt(v); });
  const bool track = detail::any_requires_grad({&x}) && grad_enabled();
  std::vector<double> cached = track ? out : std::vector<double>{};
  return detail::make_result(x.shape(), std::move(out), track,
                             [&] { return std::make_shared<SqrtFn>(x, std::move(cached)); });
}

Var abs(const Var& x) {
  require_defined("abs", x);
  return masked("abs", x, map_values(x, [](double v) { return std::abs(v); }),
                map_values(x, [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }));
}

Var exp(const Var& x) { return smooth(Smooth::exp, x, [](double v) { return std::exp(v); }); }
Var sin(const Var& x) { return smooth(Smooth::sin, x, [](double v) { return std::sin(v); }); }
Var cos(const Var& x) { return smooth(Smooth::cos, x, [](double v) { return std::cos(v); }); }
Var tanh(const Var& x) { return smooth(Smooth::tanh, x, [](double v) { return std::tanh(v); }); }

Var leaky_relu(const Var& x, double slope) {
  require_defined("leaky_relu", x);
  if (!(slope > 0.0)) throw InvalidInput("leaky_relu: slope must be > 0, got " + std::to_string(slope));
  return masked("leaky_relu", x, map_values(x, [slope](double v) { return v >= 0.0 ? v : slope * v; }),
                map_values(x, [slope](double v) { return v >= 0.0 ? 1.0 : slope; }));
}

Var relu(const Var& x) {
  require_defined("relu", x);
  return masked("relu", x, map_values(x, [](double v) { return v > 0.0 ? v : 0.0; }),
                map_values(x, [](double v) { return v > 0.0 ? 1.0 : 0.0; }));
}

Var clamp(const Var& x, double lo, double hi) {
  require_defined("clamp", x);
  if (!(lo <= hi)) throw InvalidInput("clamp: lo must not exceed hi");
  return masked("clamp", x, map_values(x, [lo, hi](double v) { return std::clamp(v, lo, hi); }),
                map_values(x, [lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; }));
}

Var scale_per_sample(const Var& x, const Var& s) {
  require_defined("scale_per_sample", x);
  require_defined("scale_per_sample", s);
  if (x.rank() < 1 || s.numel() != x.dim(0)) shape_fail("scale_per_sample", x.shape(), s.shape());
  const std::size_t per = x.numel() / x.dim(0);
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto sv = s.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= sv[i / per];
  return detail::make_result(x.shape(), std::move(out), detail::any_requires_grad({&x, &s}),
                             [&] { return std::make_shared<ScalePerSampleFn>(x, s); });
}

Var add_per_sample(const Var& x, const Var& s) {
  require_defined("add_per_sample", x);
  require_defined("add_per_sample", s);
  if (x.rank() < 1 || s.numel() != x.dim(0)) shape_fail("add_per_sample", x.shape(), s.shape());
  const std::size_t per = x.numel() / x.dim(0);
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto sv = s.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sv[i / per];
  return detail::make_result(x.shape(), std::move(out), detail::any_requires_grad({&x, &s}),
                             [&] { return std::make_shared<AddPerSampleFn>(x, s); });
}

Var channel_mix(const Var& x, std::span<const double> mix, std::size_t out_channels) {
  require_defined("channel_mix", x);
  if (x.rank() < 2) shape_fail("channel_mix", x.shape(), "expected [B, C, ...]");
  const std::size_t batch = x.dim(0), in_c = x.dim(1);
  if (mix.size() != out_channels * in_c) {
    throw ShapeError("channel_mix: mixing matrix of " + std::to_string(mix.size()) + " entries does not map " +
                     std::to_string(in_c) + " to " + std::to_string(out_channels) + " channels");
  }
  const std::size_t spatial = x.numel() / (batch * in_c);
  Shape shape = x.shape();
  shape[1] = out_channels;
  std::vector<double> out(batch * out_channels * spatial, 0.0);
  const auto xv = x.values();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      double* dst = out.data() + (b * out_channels + o) * spatial;
      for (std::size_t c = 0; c < in_c; ++c) {
        const double w = mix[o * in_c + c];
        if (w == 0.0) continue;
        const double* src = xv.data() + (b * in_c + c) * spatial;
        for (std::size_t p = 0; p < spatial; ++p) dst[p] += w * src[p];
      }
    }
  }
  std::vector<double> mix_copy(mix.begin(), mix.end());
  return detail::make_result(std::move(shape), std::move(out), detail::any_requires_grad({&x}), [&] {
    return std::make_shared<ChannelMixFn>(x, std::move(mix_copy), out_channels, in_c);
  });
}

Var sum(const Var& x) {
  require_defined("sum", x);
  double total = 0.0;
  for (double v : x.values()) total += v;
  return detail::make_result({}, {total}, detail::any_requires_grad({&x}), [&] { return std::make_shared<SumFn>(x); });
}

Var mean(const Var& x) {
  require_defined("mean", x);
  if (x.numel() == 0) shape_fail("mean", x.shape(), "empty tensor");
  double total = 0.0;
  for (double v : x.values()) total += v;
  return detail::make_result({}, {total / static_cast<double>(x.numel())}, detail::any_requires_grad({&x}),
                             [&] { return std::make_shared<MeanFn>(x); });
}

Var sum_axis(const Var& x, std::size_t axis) {
  require_defined("sum_axis", x);
  if (axis >= x.rank()) shape_fail("sum_axis", x.shape(), "axis " + std::to_string(axis) + " out of range");
  const AxisView v = axis_view(x.shape(), axis);
  std::vector<double> out(v.outer * v.inner, 0.0);
  const auto xv = x.values();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t k = 0; k < v.n; ++k)
      for (std::size_t i = 0; i < v.inner; ++i) out[o * v.inner + i] += xv[(o * v.n + k) * v.inner + i];
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<long>(axis));
  return detail::make_result(std::move(shape), std::move(out), detail::any_requires_grad({&x}),
                             [&] { return std::make_shared<SumAxisFn>(x, axis); });
}

Var broadcast_axis(const Var& x, std::size_t axis, std::size_t count) {
  require_defined("broadcast_axis", x);
  if (axis > x.rank()) shape_fail("broadcast_axis", x.shape(), "axis " + std::to_string(axis) + " out of range");
  Shape shape = x.shape();
  shape.insert(shape.begin() + static_cast<long>(axis), count);
  const AxisView v = axis_view(shape, axis);
  std::vector<double> out(numel(shape));
  const auto xv = x.values();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t k = 0; k < v.n; ++k)
      for (std::size_t i = 0; i < v.inner; ++i) out[(o * v.n + k) * v.inner + i] = xv[o * v.inner + i];
  return detail::make_result(std::move(shape), std::move(out), detail::any_requires_grad({&x}),
                             [&] { return std::make_shared<BroadcastAxisFn>(x, axis); });
}

Var expand_scalar(const Var& x, Shape shape) {
  require_defined("expand_scalar", x);
  if (x.numel() != 1) shape_fail("expand_scalar", x.shape(), "expected a single element");
  std::vector<double> out(numel(shape), x.values()[0]);
  return detail::make_result(std::move(shape), std::move(out), detail::any_requires_grad({&x}),
                             [&] { return std::make_shared<ExpandScalarFn>(x); });
}

Var reshape(const Var& x, Shape shape) {
  require_defined("reshape", x);
  if (numel(shape) != x.numel()) shape_fail("reshape", x.shape(), shape);
  std::vector<double> out(x.values().begin(), x.values().end());
  return detail::make_result(std::move(shape), std::move(out), detail::any_requires_grad({&x}),
                             [&] { return std::make_shared<ReshapeFn>(x); });
}

Var flatten(const Var& x) {
  require_defined("flatten", x);
  if (x.rank() < 1) shape_fail("flatten", x.shape(), "expected a leading batch axis");
  const std::size_t batch = x.dim(0);
  return reshape(x, {batch, batch == 0 ? 0 : x.numel() / batch});
}

Var narrow(const Var& x, std::size_t axis, std::size_t start, std::size_t length) {
  require_defined("narrow", x);
  if (axis >= x.rank() || start + length > x.dim(axis)) {
    shape_fail("narrow", x.shape(), "slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                                        ") on axis " + std::to_string(axis));
  }
  const AxisView v = axis_view(x.shape(), axis);
  Shape shape = x.shape();
  shape[axis] = length;
  std::vector<double> out(v.outer * length * v.inner);
  const auto xv = x.values();
  for (std::size_t o = 0; o < v.outer; ++o) {
    const double* src = xv.data() + (o * v.n + start) * v.inner;
    std::copy(src, src + length * v.inner, out.data() + o * length * v.inner);
  }
  return detail::make_result(std::move(shape), std::move(out), detail::any_requires_grad({&x}),
                             [&] { return std::make_shared<NarrowFn>(x, axis, start); });
}

Var pad_axis(const Var& x, std::size_t axis, std::size_t start, std::size_t full) {
  require_defined("pad_axis", x);
  if (axis >= x.rank() || start + x.dim(axis) > full) {
    shape_fail("pad_axis", x.shape(), "cannot embed at offset " + std::to_string(start) + " in length " +
                                          std::to_string(full));
  }
  Shape shape = x.shape();
  shape[axis] = full;
  const AxisView v = axis_view(x.shape(), axis);
  std::vector<double> out(numel(shape), 0.0);
  const auto xv = x.values();
  for (std::size_t o = 0; o < v.outer; ++o) {
    const double* src = xv.data() + o * v.n * v.inner;
    std::copy(src, src + v.n * v.inner, out.data() + (o * full + start) * v.inner);
  }
  return detail::make_result(std::move(shape), std::move(out), detail::any_requires_grad({&x}),
                             [&] { return std::make_shared<PadAxisFn>(x, axis, start); });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  require_defined("concat", parts[0]);
  const Shape& ref = parts[0].shape();
  if (axis >= ref.size()) shape_fail("concat", ref, "axis " + std::to_string(axis) + " out of range");
  std::size_t total = 0;
  bool needs = false;
  for (const Var& p : parts) {
    require_defined("concat", p);
    Shape a = p.shape(), b = ref;
    if (a.size() != b.size()) shape_fail("concat", ref, p.shape());
    a[axis] = b[axis] = 0;
    if (a != b) shape_fail("concat", ref, p.shape());
    total += p.dim(axis);
    needs = needs || p.requires_grad();
  }
  Shape shape = ref;
  shape[axis] = total;
  const AxisView v = axis_view(shape, axis);
  std::vector<double> out(numel(shape));
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t len = p.dim(axis);
    const auto pv = p.values();
    for (std::size_t o = 0; o < v.outer; ++o) {
      const double* src = pv.data() + o * len * v.inner;
      std::copy(src, src + len * v.inner, out.data() + (o * total + offset) * v.inner);
    }
    offset += len;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return detail::make_result(std::move(shape), std::move(out), needs,
                             [&] { return std::make_shared<ConcatFn>(std::move(inputs), axis); });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, std::size_t stride, std::size_t padding) {
  require_rank("conv2d", x, 4);
  require_rank("conv2d", weight, 4);
  if (stride == 0) throw InvalidInput("conv2d: stride must be >= 1");
  if (weight.dim(1) != x.dim(1) || weight.dim(2) != weight.dim(3)) shape_fail("conv2d", x.shape(), weight.shape());
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != weight.dim(0))) {
    shape_fail("conv2d", weight.shape(), bias.shape());
  }
  ConvGeometry geo{};
  geo.batch = x.dim(0);
  geo.in_c = x.dim(1);
  geo.h = x.dim(2);
  geo.w = x.dim(3);
  geo.out_c = weight.dim(0);
  geo.k = weight.dim(2);
  geo.stride = stride;
  geo.pad = padding;
  if (geo.h + 2 * padding < geo.k || geo.w + 2 * padding < geo.k) shape_fail("conv2d", x.shape(), weight.shape());
  geo.out_h = (geo.h + 2 * padding - geo.k) / stride + 1;
  geo.out_w = (geo.w + 2 * padding - geo.k) / stride + 1;

  const std::size_t ckk = geo.in_c * geo.k * geo.k;
  const std::size_t out_hw = geo.out_h * geo.out_w;
  std::vector<double> out(geo.batch * geo.out_c * out_hw);
  std::vector<double> cols(ckk * out_hw);
  ConstMap W(weight.values().data(), geo.out_c, ckk);
  for (std::size_t n = 0; n < geo.batch; ++n) {
    im2col(x.values().data() + n * geo.in_c * geo.h * geo.w, geo, cols.data());
    MutMap O(out.data() + n * geo.out_c * out_hw, geo.out_c, out_hw);
    O.noalias() = W * ConstMap(cols.data(), ckk, out_hw);
    if (bias.defined()) {
      for (std::size_t o = 0; o < geo.out_c; ++o) O.row(o).array() += bias.values()[o];
    }
  }
  return detail::make_result({geo.batch, geo.out_c, geo.out_h, geo.out_w}, std::move(out),
                             detail::any_requires_grad({&x, &weight, &bias}),
                             [&] { return std::make_shared<Conv2dFn>(x, weight, bias, geo); });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
  require_rank("softmax_cross_entropy", logits, 2);
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                     to_string(logits.shape()));
  }
  if (batch == 0) shape_fail("softmax_cross_entropy", logits.shape(), "empty batch");
  const auto lv = logits.values();
  std::vector<double> grad_unit(logits.numel());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InvalidInput("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                         std::to_string(classes) + ")");
    }
    const double* row = lv.data() + b * classes;
    const double peak = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t k = 0; k < classes; ++k) z += std::exp(row[k] - peak);
    const double log_z = peak + std::log(z);
    loss += log_z - row[label];
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = std::exp(row[k] - log_z);
      grad_unit[b * classes + k] = (p - (static_cast<int>(k) == label ? 1.0 : 0.0)) / static_cast<double>(batch);
    }
  }
  return detail::make_result({}, {loss / static_cast<double>(batch)}, detail::any_requires_grad({&logits}), [&] {
    return std::make_shared<SoftmaxCrossEntropyFn>(logits, std::move(grad_unit));
  });
}

// Dispatch ------------------------------------------------------------------

namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, 23> kOpNames{{
    {OpKind::matmul, "matmul"},
    {OpKind::bias_add, "bias_add"},
    {OpKind::add, "add"},
    {OpKind::sub, "sub"},
    {OpKind::mul, "mul"},
    {OpKind::leaky_relu, "leaky_relu"},
    {OpKind::tanh, "tanh"},
    {OpKind::mean, "mean"},
    {OpKind::sum, "sum"},
    {OpKind::square, "square"},
    {OpKind::sqrt, "sqrt"},
    {OpKind::conv2d, "conv2d"},
    {OpKind::flatten, "flatten"},
    {OpKind::narrow, "narrow"},
    {OpKind::relu, "relu"},
    {OpKind::abs, "abs"},
    {OpKind::exp, "exp"},
    {OpKind::sin, "sin"},
    {OpKind::cos, "cos"},
    {OpKind::clamp, "clamp"},
    {OpKind::transpose, "transpose"},
    {OpKind::sum_axis, "sum_axis"},
    {OpKind::scale, "scale"},
}};

constexpr std::array<OpKind, kOpNames.size()> make_kinds() {
  std::array<OpKind, kOpNames.size()> kinds{};
  for (std::size_t i = 0; i < kOpNames.size(); ++i) kinds[i] = kOpNames[i].first;
  return kinds;
}

constexpr auto kAllKinds = make_kinds();

void require_arity(OpKind kind, std::span<const Var> inputs, std::size_t lo, std::size_t hi) {
  if (inputs.size() < lo || inputs.size() > hi) {
    throw InvalidInput(std::string(op_name(kind)) + ": expected " + std::to_string(lo) +
                       (lo == hi ? "" : "-" + std::to_string(hi)) + " inputs, got " + std::to_string(inputs.size()));
  }
}

}  // namespace

std::string_view op_name(OpKind kind) {
  for (const auto& [k, name] : kOpNames)
    if (k == kind) return name;
  throw InvalidInput("unknown op kind");
}

OpKind parse_op_kind(std::string_view name) {
  for (const auto& [k, n] : kOpNames)
    if (n == name) return k;
  throw InvalidInput("unknown op kind '" + std::string(name) + "'");
}

std::span<const OpKind> all_op_kinds() { return kAllKinds; }

Var forward_primitive(OpKind kind, std::span<const Var> in, const OpAttrs& attrs) {
  switch (kind) {
    case OpKind::matmul: require_arity(kind, in, 2, 2); return matmul(in[0], in[1]);
    case OpKind::bias_add: require_arity(kind, in, 2, 2); return bias_add(in[0], in[1]);
    case OpKind::add: require_arity(kind, in, 2, 2); return add(in[0], in[1]);
    case OpKind::sub: require_arity(kind, in, 2, 2); return sub(in[0], in[1]);
    case OpKind::mul: require_arity(kind, in, 2, 2); return mul(in[0], in[1]);
    case OpKind::leaky_relu: require_arity(kind, in, 1, 1); return leaky_relu(in[0], attrs.slope);
    case OpKind::tanh: require_arity(kind, in, 1, 1); return tanh(in[0]);
    case OpKind::mean: require_arity(kind, in, 1, 1); return mean(in[0]);
    case OpKind::sum: require_arity(kind, in, 1, 1); return sum(in[0]);
    case OpKind::square: require_arity(kind, in, 1, 1); return square(in[0]);
    case OpKind::sqrt: require_arity(kind, in, 1, 1); return sqrt(in[0]);
    case OpKind::conv2d:
      require_arity(kind, in, 2, 3);
      return conv2d(in[0], in[1], in.size() == 3 ? in[2] : Var(), attrs.stride, attrs.padding);
    case OpKind::flatten: require_arity(kind, in, 1, 1); return flatten(in[0]);
    case OpKind::narrow: require_arity(kind, in, 1, 1); return narrow(in[0], attrs.axis, attrs.start, attrs.length);
    case OpKind::relu: require_arity(kind, in, 1, 1); return relu(in[0]);
    case OpKind::abs: require_arity(kind, in, 1, 1); return abs(in[0]);
    case OpKind::exp: require_arity(kind, in, 1, 1); return exp(in[0]);
    case OpKind::sin: require_arity(kind, in, 1, 1); return sin(in[0]);
    case OpKind::cos: require_arity(kind, in, 1, 1); return cos(in[0]);
    case OpKind::clamp: require_arity(kind, in, 1, 1); return clamp(in[0], attrs.lo, attrs.hi);
    case OpKind::transpose: require_arity(kind, in, 1, 1); return transpose(in[0]);
    case OpKind::sum_axis: require_arity(kind, in, 1, 1); return sum_axis(in[0], attrs.axis);
    case OpKind::scale: require_arity(kind, in, 1, 1); return scale(in[0], attrs.factor);
  }
  throw InvalidInput("forward_primitive: unknown op kind");
}

}  // namespace xform::ad
