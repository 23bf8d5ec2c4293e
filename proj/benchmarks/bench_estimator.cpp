#include <benchmark/benchmark.h>

#include "xform/gan/estimator.hpp"

namespace {

xform::data::LabeledImageSet random_images(std::size_t n, std::size_t size) {
  xform::data::LabeledImageSet s;
  s.height = s.width = size;
  s.num_classes = 1;
  xform::Rng rng(1);
  s.pixels.resize(n * size * size);
  for (double& p : s.pixels) p = xform::uniform01(rng);
  s.labels.assign(n, 0);
  return s;
}

void BM_CriticStep(benchmark::State& state) {
  xform::gan::EstimatorConfig cfg;
  xform::gan::EstimatorState est(cfg, 1);
  const auto data = random_images(10, 32);
  const std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto batch = data.batch(idx);
  xform::Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(xform::gan::critic_step(est, batch, batch, cfg, rng).loss);
}
BENCHMARK(BM_CriticStep)->Unit(benchmark::kMillisecond);

void BM_GeneratorStep(benchmark::State& state) {
  xform::gan::EstimatorConfig cfg;
  xform::gan::EstimatorState est(cfg, 1);
  const auto data = random_images(10, 32);
  const std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const auto batch = data.batch(idx);
  xform::Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(xform::gan::generator_step(est, batch, cfg, rng));
}
BENCHMARK(BM_GeneratorStep)->Unit(benchmark::kMillisecond);

}  // namespace
