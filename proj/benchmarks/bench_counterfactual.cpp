#include <benchmark/benchmark.h>

#include "cfseq/metrics.hpp"

using namespace cfseq;

namespace {

NoisePosterior flat_noise(std::size_t T) {
  return {std::vector<StateVector>(T, StateVector::zeros(3)),
          std::vector<StateVector>(T, StateVector{0.01, 0.01, 0.01})};
}

}  // namespace

static void BM_GenerateCf(benchmark::State& state) {
  const std::size_t T = 2000;
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto noise = flat_noise(T);
  const ThetaRegime regime{ThetaMode::PosteriorSample, ParameterVector{10, 28, 8.0 / 3.0},
                           ParameterVector{10.1, 27.9, 2.7}, std::vector<double>{0.1, 0.2, 0.01}};
  for (auto _ : state) {
    auto set = generate_cf(system_spec(SystemId::Lorenz), regime, noise, {1.0001, 1, 1}, T,
                           StepSize(0.05), n, RngSeed{2, 2});
    benchmark::DoNotOptimize(set);
  }
}
BENCHMARK(BM_GenerateCf)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

static void BM_RmseWithMovingAverage(benchmark::State& state) {
  const std::size_t T = 2000;
  const auto noise = flat_noise(T);
  const ThetaRegime regime{ThetaMode::TrueTheta, ParameterVector{10, 28, 8.0 / 3.0}, std::nullopt,
                           std::nullopt};
  const auto set = generate_cf(system_spec(SystemId::Lorenz), regime, noise, {1.0001, 1, 1}, T,
                               StepSize(0.05), 30, RngSeed{3, 3});
  const auto ref = deterministic_cf(system_spec(SystemId::Lorenz), {10, 28, 8.0 / 3.0}, {1.0001, 1, 1}, T,
                                    StepSize(0.05));
  for (auto _ : state) {
    auto r = moving_average(rmse_t(set, ref), 200);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_RmseWithMovingAverage)->Unit(benchmark::kMicrosecond);
