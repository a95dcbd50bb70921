#include <benchmark/benchmark.h>

#include <random>

#include "nvis/attacks.hpp"
#include "nvis/engine.hpp"
#include "nvis/gradients.hpp"
#include "nvis/ops.hpp"

namespace {

using namespace nvis;

Tensor uniform(std::mt19937& rng, Shape shape, float lo, float hi) {
  std::uniform_real_distribution<float> d(lo, hi);
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

Model lenet() {
  std::mt19937 rng(7);
  Model m;
  m.name = "lenet";
  m.input_shape = {1, 28, 28};
  m.layers = {Conv2DSpec{6, 5, 5, 1, Padding::kSame, Activation::kRelu},
              MaxPool2DSpec{2, 2, 2},
              Conv2DSpec{16, 5, 5, 1, Padding::kValid, Activation::kRelu},
              MaxPool2DSpec{2, 2, 2},
              FlattenSpec{},
              DenseSpec{120, Activation::kRelu},
              DenseSpec{84, Activation::kRelu},
              DenseSpec{10, Activation::kSoftmax}};
  const auto shapes = infer_shapes(m);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    if (!has_params(m.layers[i])) continue;
    const auto [w, b] = param_shapes(m.layers[i], i == 0 ? m.input_shape : shapes[i - 1]);
    m.weights[i] = {uniform(rng, w, -0.2f, 0.2f), uniform(rng, b, -0.1f, 0.1f)};
  }
  return m;
}

void BM_ForwardLeNet(benchmark::State& state) {
  const Model m = lenet();
  std::mt19937 rng(1);
  const Tensor x = uniform(rng, m.input_shape, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(m, x));
}
BENCHMARK(BM_ForwardLeNet)->Unit(benchmark::kMillisecond);

void BM_MutateOutputLeNet(benchmark::State& state) {
  const Model m = lenet();
  std::mt19937 rng(2);
  const Tensor x = uniform(rng, m.input_shape, 0, 1);
  FreezeConfig freeze;
  freeze.entries[0] = {0, 3};
  freeze.entries[2] = {1, 5, 9};
  for (auto _ : state) benchmark::DoNotOptimize(mutate_output(m, x, freeze));
}
BENCHMARK(BM_MutateOutputLeNet)->Unit(benchmark::kMillisecond);

void BM_Conv2D(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  std::mt19937 rng(3);
  const Tensor x = uniform(rng, {c, 28, 28}, 0, 1);
  const Tensor w = uniform(rng, {c, c, 3, 3}, -0.3f, 0.3f);
  const Tensor b = uniform(rng, {c}, -0.1f, 0.1f);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, ConvParams{1, Padding::kSame}));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * c * c * 9 * 28 * 28));
}
BENCHMARK(BM_Conv2D)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_InputGradientLeNet(benchmark::State& state) {
  const Model m = lenet();
  std::mt19937 rng(4);
  const Tensor x = uniform(rng, m.input_shape, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(input_gradient(m, x, 3));
}
BENCHMARK(BM_InputGradientLeNet)->Unit(benchmark::kMillisecond);

void BM_BimLeNet(benchmark::State& state) {
  const Model m = lenet();
  std::mt19937 rng(5);
  const Tensor x = uniform(rng, m.input_shape, 0, 1);
  AttackSpec spec;
  spec.algorithm = AttackAlgorithm::kBim;
  spec.epsilon = 0.1f;
  spec.steps = 10;
  spec.step_size = 0.01f;
  for (auto _ : state) benchmark::DoNotOptimize(bim(m, x, spec));
}
BENCHMARK(BM_BimLeNet)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
