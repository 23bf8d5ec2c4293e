#include <benchmark/benchmark.h>

#include "xform/ad/engine.hpp"
#include "xform/ad/ops.hpp"
#include "xform/random.hpp"
#include "xform/transforms/geometric.hpp"

namespace {

using xform::ad::Var;

Var random_var(xform::ad::Shape shape, std::uint64_t seed, bool grad) {
  xform::Rng rng(seed);
  std::vector<double> v(xform::ad::numel(shape));
  for (double& x : v) x = xform::uniform01(rng);
  return grad ? Var::parameter(std::move(shape), std::move(v)) : Var::constant(std::move(shape), std::move(v));
}

void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_var({10, n}, 1, false);
  const auto w = random_var({n, 256}, 2, true);
  for (auto _ : state) {
    auto loss = xform::ad::sum(xform::ad::matmul(a, w));
    xform::ad::backward(loss);
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(576)->Arg(1024);

void BM_WarpAffine(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const auto images = random_var({10, 1, size, size}, 3, false);
  const auto theta = random_var({10, 6}, 4, true);
  for (auto _ : state) {
    auto out = xform::tf::warp_affine(images, xform::ad::scale(theta, 0.2));
    xform::ad::backward(xform::ad::sum(out));
    benchmark::DoNotOptimize(theta.grad().data());
  }
}
BENCHMARK(BM_WarpAffine)->Arg(32)->Arg(64);

}  // namespace
