#include "xform/ad/engine.hpp"

#include <string>
#include <unordered_set>
#include <vector>

#include "xform/ad/ops.hpp"
#include "xform/error.hpp"

namespace xform::ad {

namespace {

// Post-order over the requires-grad subgraph: inputs come before consumers.
std::vector<Node*> topological_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  struct Frame {
    Node* node;
    std::size_t next_input;
  };
  std::vector<Frame> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    Frame& top = stack.back();
    const auto* fn = top.node->fn.get();
    if (fn != nullptr && top.next_input < fn->inputs().size()) {
      Node* child = fn->inputs()[top.next_input++].node();
      if (child != nullptr && child->requires_grad && seen.insert(child).second) {
        stack.push_back({child, 0});
      }
      continue;
    }
    order.push_back(top.node);
    stack.pop_back();
  }
  return order;
}

void check_scalar_root(const Var& root, const char* who) {
  if (!root.defined()) throw Error(std::string(who) + ": undefined root");
  if (!root.shape().empty()) {
    throw ShapeError(std::string(who) + ": root must be a scalar, got shape " + to_string(root.shape()));
  }
}

void accumulate(std::unordered_map<const Node*, Var>& grads, const Node* key, const Var& g) {
  auto it = grads.find(key);
  if (it == grads.end()) {
    grads.emplace(key, g);
  } else {
    it->second = add(it->second, g);
  }
}

// Shared reverse sweep. `relevant` restricts propagation to nodes on a path to
// a target (empty = all nodes).
std::unordered_map<const Node*, Var> sweep(const Var& root, const std::vector<Node*>& order,
                                           const std::unordered_set<const Node*>* relevant,
                                           bool create_graph) {
  GradModeGuard mode(create_graph);
  std::unordered_map<const Node*, Var> grads;
  grads.emplace(root.node(), Var::full({}, 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    auto git = grads.find(node);
    if (git == grads.end() || node->fn == nullptr) continue;
    const Function& fn = *node->fn;
    if (create_graph && !fn.twice_differentiable()) {
      throw Error("input_gradient_node: op '" + std::string(fn.name()) +
                  "' does not support second-order differentiation");
    }
    const Var g = git->second;
    std::vector<Var> input_grads = fn.backward(g);
    const auto& inputs = fn.inputs();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Node* in = inputs[i].node();
      if (in == nullptr || !in->requires_grad || !input_grads[i].defined()) continue;
      if (relevant != nullptr && relevant->count(in) == 0) continue;
      accumulate(grads, in, input_grads[i]);
    }
  }
  return grads;
}

}  // namespace

const Var& GradMap::at(const Var& v) const {
  auto it = grads_.find(v.node());
  if (it == grads_.end()) throw Error("GradMap: node was not reached by the backward pass");
  return it->second;
}

GradMap backward(const Var& root) {
  check_scalar_root(root, "backward");
  GradMap result;
  if (!root.requires_grad()) return result;
  const auto order = topological_order(root.node());
  result.grads_ = sweep(root, order, nullptr, false);
  for (Node* node : order) {
    if (node->fn != nullptr) continue;
    auto it = result.grads_.find(node);
    if (it == result.grads_.end()) continue;
    const auto g = it->second.values();
    if (node->grad.empty()) {
      node->grad.assign(g.begin(), g.end());
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) node->grad[i] += g[i];
    }
  }
  return result;
}

Var input_gradient_node(const Var& root, const Var& wrt) {
  check_scalar_root(root, "input_gradient_node");
  if (!wrt.defined()) throw Error("input_gradient_node: undefined wrt");
  if (!root.requires_grad() || !wrt.requires_grad()) return Var::zeros(wrt.shape());
  const auto order = topological_order(root.node());

  // Nodes that depend on wrt; only these carry gradient toward it.
  std::unordered_set<const Node*> relevant{wrt.node()};
  for (Node* node : order) {
    if (node->fn == nullptr) continue;
    for (const Var& in : node->fn->inputs()) {
      if (relevant.count(in.node())) {
        relevant.insert(node);
        break;
      }
    }
  }
  if (!relevant.count(root.node())) return Var::zeros(wrt.shape());

  auto grads = sweep(root, order, &relevant, true);
  auto it = grads.find(wrt.node());
  if (it == grads.end()) return Var::zeros(wrt.shape());
  return it->second;
}

}  // namespace xform::ad
