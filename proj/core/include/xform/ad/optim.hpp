#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xform/ad/tensor.hpp"

namespace xform::ad {

struct AdamHyper {
  double lr = 5e-5;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  AdamHyper hyper;

  static AdamState for_param(const Var& param, AdamHyper hyper);
};

/// One bias-corrected Adam update of each parameter from its accumulated
/// gradient; gradients are zeroed afterwards. Throws if any parameter has no
/// gradient.
void adam_step(std::span<Var> params, std::span<AdamState> states);

/// Adam over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamHyper hyper);
  void step() { adam_step(params_, states_); }
  void zero_grad();
  const std::vector<AdamState>& states() const { return states_; }

 private:
  std::vector<Var> params_;
  std::vector<AdamState> states_;
};

/// SGD with classical momentum and L2 weight decay.
class SgdMomentum {
 public:
  SgdMomentum(std::vector<Var> params, double lr, double momentum, double weight_decay);
  void step();
  void zero_grad();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<Var> params_;
  std::vector<std::vector<double>> velocity_;
  double lr_;
  double momentum_;
  double weight_decay_;
};

}  // namespace xform::ad
