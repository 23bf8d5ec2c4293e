#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "xform/ad/tensor.hpp"

namespace xform::ad {

// Linear algebra ------------------------------------------------------------

/// op(a) · op(b) for 2-D operands, where op transposes when requested.
Var matmul(const Var& a, const Var& b, bool transpose_a = false, bool transpose_b = false);
Var transpose(const Var& a);
/// x[B, n] + bias[n], bias broadcast over rows.
Var bias_add(const Var& x, const Var& bias);

// Elementwise ---------------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double offset);
Var square(const Var& x);
Var sqrt(const Var& x);
Var abs(const Var& x);
Var exp(const Var& x);
Var sin(const Var& x);
Var cos(const Var& x);
Var tanh(const Var& x);
/// max(x, slope·x); the derivative at exactly 0 is taken from the positive
/// branch (1.0).
Var leaky_relu(const Var& x, double slope);
/// max(0, x).
Var relu(const Var& x);
Var clamp(const Var& x, double lo, double hi);

// Per-sample broadcasting over the leading axis -----------------------------

/// y[b, ...] = x[b, ...] · s[b]
Var scale_per_sample(const Var& x, const Var& s);
/// y[b, ...] = x[b, ...] + s[b]
Var add_per_sample(const Var& x, const Var& s);
/// y[b, o, ...] = Σ_c mix[o, c] · x[b, c, ...] with a constant mixing matrix.
Var channel_mix(const Var& x, std::span<const double> mix, std::size_t out_channels);

// Reductions ----------------------------------------------------------------

Var sum(const Var& x);
Var mean(const Var& x);
Var sum_axis(const Var& x, std::size_t axis);
/// Inserts a new axis of length `count` at `axis`, repeating x along it.
Var broadcast_axis(const Var& x, std::size_t axis, std::size_t count);
/// Repeats a scalar into the given shape.
Var expand_scalar(const Var& x, Shape shape);

// Shape ---------------------------------------------------------------------

Var reshape(const Var& x, Shape shape);
/// [B, ...] -> [B, prod(...)]
Var flatten(const Var& x);
/// Slice [start, start + length) along `axis`.
Var narrow(const Var& x, std::size_t axis, std::size_t start, std::size_t length);
/// Inverse of narrow: embeds x into zeros of length `full` along `axis`.
Var pad_axis(const Var& x, std::size_t axis, std::size_t start, std::size_t full);
Var concat(std::span<const Var> parts, std::size_t axis);

// Networks ------------------------------------------------------------------

/// x[B, C, H, W] * weight[O, C, k, k] + bias[O] (bias may be undefined).
/// First-order gradients only.
Var conv2d(const Var& x, const Var& weight, const Var& bias, std::size_t stride,
           std::size_t padding);
/// Mean negative log-likelihood of integer labels under softmax(logits).
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

// Generic dispatch ----------------------------------------------------------

enum class OpKind {
  matmul,
  bias_add,
  add,
  sub,
  mul,
  leaky_relu,
  tanh,
  mean,
  sum,
  square,
  sqrt,
  conv2d,
  flatten,
  narrow,
  relu,
  abs,
  exp,
  sin,
  cos,
  clamp,
  transpose,
  sum_axis,
  scale,
};

struct OpAttrs {
  double slope = 0.2;
  double lo = 0.0;
  double hi = 1.0;
  double factor = 1.0;
  std::size_t axis = 0;
  std::size_t start = 0;
  std::size_t length = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
};

std::string_view op_name(OpKind kind);
/// Throws InvalidInput for unknown names.
OpKind parse_op_kind(std::string_view name);
std::span<const OpKind> all_op_kinds();

/// Evaluates one primitive by kind. Input arity and attributes are checked.
Var forward_primitive(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs = {});

}  // namespace xform::ad
