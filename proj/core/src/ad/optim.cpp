#include "xform/ad/optim.hpp"

#include <cmath>
#include <string>

#include "xform/error.hpp"

namespace xform::ad {

AdamState AdamState::for_param(const Var& param, AdamHyper hyper) {
  AdamState s;
  s.m.assign(param.numel(), 0.0);
  s.v.assign(param.numel(), 0.0);
  s.hyper = hyper;
  return s;
}

void adam_step(std::span<Var> params, std::span<AdamState> states) {
  if (params.size() != states.size()) {
    throw InvalidInput("adam_step: " + std::to_string(params.size()) + " parameters but " +
                       std::to_string(states.size()) + " states");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p].has_grad()) throw Error("adam_step: parameter " + std::to_string(p) + " has no gradient");
    if (states[p].m.size() != params[p].numel() || states[p].v.size() != params[p].numel()) {
      throw ShapeError("adam_step: state " + std::to_string(p) + " does not match parameter shape " +
                       to_string(params[p].shape()));
    }
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    AdamState& s = states[p];
    const AdamHyper& h = s.hyper;
    ++s.t;
    const double t = static_cast<double>(s.t);
    const double bc1 = 1.0 - std::pow(h.beta1, t);
    const double bc2 = 1.0 - std::pow(h.beta2, t);
    auto values = params[p].mutable_values();
    auto grad = params[p].mutable_grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      s.m[i] = h.beta1 * s.m[i] + (1.0 - h.beta1) * g;
      s.v[i] = h.beta2 * s.v[i] + (1.0 - h.beta2) * g * g;
      const double m_hat = s.m[i] / bc1;
      const double v_hat = s.v[i] / bc2;
      values[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
      grad[i] = 0.0;
    }
  }
}

Adam::Adam(std::vector<Var> params, AdamHyper hyper) : params_(std::move(params)) {
  states_.reserve(params_.size());
  for (const Var& p : params_) states_.push_back(AdamState::for_param(p, hyper));
}

void Adam::zero_grad() {
  for (Var& p : params_) p.zero_grad();
}

SgdMomentum::SgdMomentum(std::vector<Var> params, double lr, double momentum, double weight_decay)
    : params_(std::move(params)), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
  velocity_.reserve(params_.size());
  for (const Var& p : params_) velocity_.emplace_back(p.numel(), 0.0);
}

void SgdMomentum::step() {
  for (std::size_t p = 0; p < params_.size(); ++p) {
    if (!params_[p].has_grad()) throw Error("sgd: parameter " + std::to_string(p) + " has no gradient");
    auto values = params_[p].mutable_values();
    auto grad = params_[p].mutable_grad();
    auto& vel = velocity_[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i] + weight_decay_ * values[i];
      vel[i] = momentum_ * vel[i] + g;
      values[i] -= lr_ * vel[i];
      grad[i] = 0.0;
    }
  }
}

void SgdMomentum::zero_grad() {
  for (Var& p : params_) p.zero_grad();
}

}  // namespace xform::ad
