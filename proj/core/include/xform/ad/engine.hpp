#pragma once

#include <unordered_map>

#include "xform/ad/tensor.hpp"

namespace xform::ad {

/// Gradients produced by one backward pass, keyed by node.
class GradMap {
 public:
  bool contains(const Var& v) const { return grads_.count(v.node()) != 0; }
  /// Gradient of the root with respect to v. Throws if v was not reached.
  const Var& at(const Var& v) const;
  std::size_t size() const { return grads_.size(); }

 private:
  friend GradMap backward(const Var& root);
  std::unordered_map<const Node*, Var> grads_;
};

/// Reverse-mode pass from a scalar root. Leaf nodes that require gradients
/// have their .grad accumulated; every requires-grad node reached gets an
/// entry in the returned map.
GradMap backward(const Var& root);

/// ∂root/∂wrt as a node that is itself differentiable with respect to the
/// graph's other leaves (double backpropagation). Every op on a path from wrt
/// to root must be twice differentiable.
Var input_gradient_node(const Var& root, const Var& wrt);

}  // namespace xform::ad
