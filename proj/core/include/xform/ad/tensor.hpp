#pragma once

// Dense float64 tensors that record the operations producing them, so that
// reverse-mode differentiation can walk the resulting graph.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xform::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Var;
class Function;

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<Function> fn;  // null for leaves
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Shape shape, std::vector<double> values);
  static Var parameter(Shape shape, std::vector<double> values);
  static Var zeros(Shape shape, bool requires_grad = false);
  static Var full(Shape shape, double value);
  static Var scalar(double value);

  bool defined() const { return node_ != nullptr; }
  explicit operator bool() const { return defined(); }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->values.size(); }

  std::span<const double> values() const { return node_->values; }
  /// Writable values; only permitted on leaves (parameters, inputs).
  std::span<double> mutable_values();
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  /// Toggle gradient tracking on a leaf.
  void set_requires_grad(bool on);
  bool is_leaf() const { return node_->fn == nullptr; }
  Function* grad_fn() const { return node_->fn.get(); }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void accumulate_grad(std::span<const double> g);
  void zero_grad();

  /// A new leaf holding a copy of the values, cut from the graph.
  Var detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared_node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// An operation recorded in the graph. Subclasses keep their inputs alive and
/// whatever forward-pass state their backward rule needs.
class Function {
 public:
  explicit Function(std::vector<Var> inputs) : inputs_(std::move(inputs)) {}
  virtual ~Function() = default;

  virtual std::string_view name() const = 0;

  /// True when backward() is itself built from differentiable ops, so the
  /// gradient it returns can be differentiated again.
  virtual bool twice_differentiable() const { return true; }

  /// Gradients with respect to each input (same order as inputs()). An
  /// undefined Var means "no contribution".
  virtual std::vector<Var> backward(const Var& grad_output) const = 0;

  const std::vector<Var>& inputs() const { return inputs_; }

 private:
  std::vector<Var> inputs_;
};

/// Whether newly created op results record their producing Function.
bool grad_enabled();

/// RAII scope that sets gradient recording on or off.
class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

struct NoGradGuard : GradModeGuard {
  NoGradGuard() : GradModeGuard(false) {}
};

namespace detail {

bool any_requires_grad(std::initializer_list<const Var*> inputs);

/// Wraps freshly computed values as an op result, attaching the Function
/// produced by make_fn only when gradients must flow through it.
template <typename MakeFn>
Var make_result(Shape shape, std::vector<double> values, bool needs_grad, MakeFn&& make_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  if (needs_grad && grad_enabled()) {
    node->requires_grad = true;
    node->fn = make_fn();
  }
  return Var(std::move(node));
}

}  // namespace detail

}  // namespace xform::ad
