#include <benchmark/benchmark.h>

#include "cfseq/dynamics.hpp"
#include "cfseq/ssm.hpp"

using namespace cfseq;

static void BM_Rk4StepLorenz(benchmark::State& state) {
  const auto& sys = system_spec(SystemId::Lorenz);
  const ParameterVector theta{10, 28, 8.0 / 3.0};
  StateVector x{1, 1, 1};
  for (auto _ : state) {
    x = rk4_step(sys, x, theta, StepSize(0.01));
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_Rk4StepLorenz);

// The unchecked kernel used inside the filter loops.
static void BM_Rk4StepIntoLorenz(benchmark::State& state) {
  const double theta[3] = {10, 28, 8.0 / 3.0};
  double x[3] = {1, 1, 1}, out[3];
  for (auto _ : state) {
    rk4_step_into(SystemId::Lorenz, x, theta, 0.01, out);
    x[0] = out[0];
    x[1] = out[1];
    x[2] = out[2];
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_Rk4StepIntoLorenz);

static void BM_SimulateHidden(benchmark::State& state) {
  const auto& sys = system_spec(SystemId::Lorenz);
  const auto T = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto sim = simulate_hidden(sys, {10, 28, 8.0 / 3.0}, {1, 1, 1}, T, StepSize(0.05), 1.0, RngSeed{1, 1});
    benchmark::DoNotOptimize(sim);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateHidden)->Arg(500)->Arg(2000);
