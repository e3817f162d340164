#include <benchmark/benchmark.h>

#include "cfseq/nested_filter.hpp"

using namespace cfseq;

namespace {

struct LorenzData {
  ObservationSequence obs;
  ParameterPrior prior{{{5, 15}, {20, 35}, {2, 4}}};
};

LorenzData make_data(std::size_t T) {
  const auto& sys = system_spec(SystemId::Lorenz);
  const auto sim = simulate_hidden(sys, {10, 28, 8.0 / 3.0}, {1, 1, 1}, T, StepSize(0.05), 1.0, RngSeed{1, 1});
  return {observe(sim.trajectory, ObservationModel::identity(3), 1.0, RngSeed{1, 2})};
}

FilterConfig config(std::size_t particles, const ParameterPrior& prior) {
  FilterConfig c;
  c.outer_count = particles;
  c.inner_count = particles;
  c.kernel = JitterKernel::shrinking(prior, particles);
  return c;
}

}  // namespace

// One filter run of 50 steps; range(0) = M = N, range(1) = threads.
static void BM_NestedFilter(benchmark::State& state) {
  const auto M = static_cast<std::size_t>(state.range(0));
  const Executor exec(static_cast<std::size_t>(state.range(1)));
  const auto data = make_data(50);
  const auto c = config(M, data.prior);
  for (auto _ : state) {
    auto h = run_filter(data.obs, system_spec(SystemId::Lorenz), data.prior, {StateVector{1, 1, 1}, 0.0},
                        c, ObservationModel::identity(3), RngSeed{1, 3}, exec);
    benchmark::DoNotOptimize(h);
  }
  state.SetItemsProcessed(state.iterations() * 50 * state.range(0) * state.range(0));
}
BENCHMARK(BM_NestedFilter)->Args({25, 1})->Args({50, 1})->Args({100, 1})->Args({100, 4})
    ->Unit(benchmark::kMillisecond);

static void BM_BackwardSmooth(benchmark::State& state) {
  const auto M = static_cast<std::size_t>(state.range(0));
  SmootherOptions opts;
  opts.stride = static_cast<std::size_t>(state.range(1));
  const auto data = make_data(50);
  const auto h = run_filter(data.obs, system_spec(SystemId::Lorenz), data.prior,
                            {StateVector{1, 1, 1}, 0.0}, config(M, data.prior),
                            ObservationModel::identity(3), RngSeed{1, 3});
  for (auto _ : state) {
    auto sm = backward_smooth(h, system_spec(SystemId::Lorenz), StepSize(0.05), 1.0, opts);
    benchmark::DoNotOptimize(sm);
  }
}
BENCHMARK(BM_BackwardSmooth)->Args({25, 1})->Args({50, 1})->Args({50, 5})
    ->Unit(benchmark::kMillisecond);

static void BM_SystematicResample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomStream rs(RngSeed{4, 4});
  std::vector<double> w(n);
  for (auto& v : w) v = rs.uniform();
  for (auto _ : state) {
    auto idx = systematic_resample(w, n, rs.uniform());
    benchmark::DoNotOptimize(idx);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SystematicResample)->Range(64, 1 << 14);
