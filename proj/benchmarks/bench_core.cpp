// Microbenchmarks for the hot paths: convolution, FFT, augmentation, and a
// full training step.

#include <benchmark/benchmark.h>

#include "ugseg/harness.hpp"

using namespace ugseg;

namespace {

Tensor<float> random_tensor(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<float> t = Tensor<float>::zeros(shape);
  for (auto& v : t.data) v = static_cast<float>(rng.gaussian(0.0, 1.0));
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  NoGradGuard ng;
  const auto x = constant(random_tensor({8, 16, 64, 64}, 1));
  const auto w = constant(random_tensor({16, 16, 3, 3}, 2));
  const auto b = constant(Tensor<float>::zeros({16}));
  for (auto _ : state) {
    auto y = conv2d(x, w, b, 1);
    benchmark::DoNotOptimize(y->value.data.data());
  }
}
BENCHMARK(BM_Conv2dForward)->Unit(benchmark::kMillisecond);

void BM_Conv2dTrainStep(benchmark::State& state) {
  const auto x = constant(random_tensor({8, 16, 64, 64}, 1));
  auto w = parameter(random_tensor({16, 16, 3, 3}, 2), "w");
  auto b = parameter(Tensor<float>::zeros({16}), "b");
  for (auto _ : state) {
    auto y = mean_all(conv2d(x, w, b, 1));
    backward(y);
    benchmark::DoNotOptimize(w->grad.data());
    w->grad.assign(w->grad.size(), 0.0f);
    b->grad.assign(b->grad.size(), 0.0f);
  }
}
BENCHMARK(BM_Conv2dTrainStep)->Unit(benchmark::kMillisecond);

void BM_Fft2d64(benchmark::State& state) {
  Rng rng(3);
  Tensor<double> img = Tensor<double>::zeros({1, 64, 64});
  for (auto& v : img.data) v = rng.gaussian(0.0, 1.0);
  for (auto _ : state) {
    ComplexSpectrum s = fft2d(img);
    benchmark::DoNotOptimize(s.re.data.data());
  }
}
BENCHMARK(BM_Fft2d64)->Unit(benchmark::kMicrosecond);

void BM_Augment64(benchmark::State& state) {
  const auto bench = generate_benchmark(default_domains(2), 2, 7, 64);
  Rng rng(11);
  for (auto _ : state) {
    Tensor<double> mixed = augment(bench[0].samples[0].image, bench[1].samples[1].image,
                                   rng, 0.1);
    benchmark::DoNotOptimize(mixed.data.data());
  }
}
BENCHMARK(BM_Augment64)->Unit(benchmark::kMicrosecond);

void BM_FullTrainStep(benchmark::State& state) {
  // One optimizer step of the full variant on a 60-sample pool (single batch
  // per iteration via batch_size=8, epochs tuned by hand inside the loop).
  const auto bench = generate_benchmark(default_domains(4), 4, 7, 64);
  auto [pool, test] = split_leave_one_out(bench, 1);
  TrainConfig cfg;
  cfg.epochs = 10;  // >= 10 required by the ramp; one epoch == 2 steps here
  cfg.batch_size = 8;
  cfg.variant = MethodVariant::kFull;
  for (auto _ : state) {
    TrainedModel<float> model = train<float>(cfg, pool);
    benchmark::DoNotOptimize(model.log.data());
  }
  state.SetItemsProcessed(state.iterations() * 20);  // optimizer steps
}
BENCHMARK(BM_FullTrainStep)->Unit(benchmark::kMillisecond)->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
