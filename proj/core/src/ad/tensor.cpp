#include "xform/ad/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "xform/error.hpp"

namespace xform::ad {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

Var make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("tensor: shape " + to_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

thread_local bool g_grad_enabled = true;

}  // namespace

Var Var::constant(Shape shape, std::vector<double> values) {
  return make_leaf(std::move(shape), std::move(values), false);
}

Var Var::parameter(Shape shape, std::vector<double> values) {
  return make_leaf(std::move(shape), std::move(values), true);
}

Var Var::zeros(Shape shape, bool requires_grad) {
  std::vector<double> values(ad::numel(shape), 0.0);
  return make_leaf(std::move(shape), std::move(values), requires_grad);
}

Var Var::full(Shape shape, double value) {
  std::vector<double> values(ad::numel(shape), value);
  return make_leaf(std::move(shape), std::move(values), false);
}

Var Var::scalar(double value) { return make_leaf({}, {value}, false); }

std::span<double> Var::mutable_values() {
  if (!is_leaf()) throw Error("mutable_values: only leaves may be written in place");
  return node_->values;
}

double Var::item() const {
  if (numel() != 1) throw ShapeError("item: tensor of shape " + to_string(shape()) + " is not a scalar");
  return node_->values[0];
}

void Var::set_requires_grad(bool on) {
  if (!is_leaf()) throw Error("set_requires_grad: only leaves may be toggled");
  node_->requires_grad = on;
}

void Var::accumulate_grad(std::span<const double> g) {
  if (g.size() != numel()) {
    throw ShapeError("accumulate_grad: gradient size " + std::to_string(g.size()) +
                     " does not match " + to_string(shape()));
  }
  if (!node_->requires_grad) return;
  auto& grad = node_->grad;
  if (grad.empty()) {
    grad.assign(g.begin(), g.end());
  } else {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
  }
}

void Var::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Var Var::detach() const { return make_leaf(shape(), node_->values, false); }

bool grad_enabled() { return g_grad_enabled; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(g_grad_enabled) { g_grad_enabled = enabled; }

GradModeGuard::~GradModeGuard() { g_grad_enabled = previous_; }

namespace detail {

bool any_requires_grad(std::initializer_list<const Var*> inputs) {
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Var* v) { return v->defined() && v->requires_grad(); });
}

}  // namespace detail

}  // namespace xform::ad
