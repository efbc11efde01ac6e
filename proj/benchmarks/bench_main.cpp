#include <benchmark/benchmark.h>

#include <memory>

#include "freeseed/fbp_op.hpp"
#include "freeseed/layers.hpp"
#include "freeseed/models.hpp"
#include "freeseed/ops.hpp"
#include "freeseed/phantom.hpp"
#include "freeseed/train.hpp"

using namespace freeseed;

namespace {

void BM_ForwardProject(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto g = FanBeamGeometry::standard(n, 720, n * 21 / 8);
  const Image phantom = generate_phantom(1, n);
  for (auto _ : state) benchmark::DoNotOptimize(forward_project(phantom, g));
}
BENCHMARK(BM_ForwardProject)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_FbpReconstruct(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto g = FanBeamGeometry::standard(n, 720, n * 21 / 8);
  const Sinogram s = forward_project(generate_phantom(2, n), g);
  for (auto _ : state) benchmark::DoNotOptimize(fbp_reconstruct(s, g));
}
BENCHMARK(BM_FbpReconstruct)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

// Differentiable FBP of a batch, forward and backward.
void BM_FbpApplyGradient(benchmark::State& state) {
  const auto g = FanBeamGeometry::standard(128, 180, 336);
  const auto op = std::make_shared<FbpOperator>(g, g.angles);
  const Tensor<float> s = forward_project(generate_phantom(3, 128), g).data.cast<float>().reshaped({1, 1, 180, 336});
  for (auto _ : state) {
    ag::Var<float> x(s, true);
    ag::backward(ops::sum(fbp_apply(x, op)));
    benchmark::DoNotOptimize(x.grad());
  }
}
BENCHMARK(BM_FbpApplyGradient)->Unit(benchmark::kMillisecond);

void BM_FfcBlock(benchmark::State& state) {
  const auto channels = state.range(0);
  Rng rng(4);
  nn::FfcBlock<float> block(channels, {}, rng);
  Tensor<float> x({2, channels, 64, 64}, 0.1f);
  for (auto _ : state) {
    ag::Var<float> in(x, true);
    ag::backward(ops::sum(block.forward(in)));
    benchmark::DoNotOptimize(in.grad());
  }
}
BENCHMARK(BM_FfcBlock)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

// One alternating Phi/Theta step at desk scale with the default widths.
void BM_TrainStep(benchmark::State& state) {
  const auto g = FanBeamGeometry::standard(128, 180, 336);
  std::vector<SampleTensors> samples;
  for (int i = 0; i < 2; ++i) samples.push_back(to_sample_tensors(make_pair(generate_phantom(10 + i, 128), g, 18)));
  train::TrainConfig config;
  config.variant = static_cast<train::Variant>(state.range(0));
  auto s = train::TrainState<float>::create(config);
  const auto batch = train::make_batch(samples, {0, 1});
  for (auto _ : state) benchmark::DoNotOptimize(train::image_step(s, batch, 1e-4));
  state.SetLabel(train::variant_name(config.variant));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(train::Variant::freenet))
    ->Arg(static_cast<int>(train::Variant::freeseed))
    ->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
