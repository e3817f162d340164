#include "cfseq/abduction.hpp"

#include <array>
#include <cmath>

#include "cfseq/error.hpp"

namespace cfseq {

void NoisePosterior::validate() const {
  if (mu.size() != sigma.size()) throw DimensionError("noise posterior mu/sigma length mismatch");
  const std::size_t d = dimension();
  for (std::size_t t = 0; t < mu.size(); ++t) {
    if (mu[t].size() != d || sigma[t].size() != d) {
      throw DimensionError("noise posterior has mixed dimensions");
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (sigma[t][i] < 0.0) throw DimensionError("noise posterior variance is negative");
    }
  }
}

StateVector particle_residual(const StateVector& x_t, const StateVector& x_prev,
                              const ParameterVector& theta, const SystemSpec& system,
                              StepSize delta) {
  if (x_t.size() != x_prev.size()) throw DimensionError("residual state dimension mismatch");
  const StateVector predicted = rk4_step(system, x_prev, theta, delta);
  std::array<double, kMaxStateDim> r{};
  for (std::size_t i = 0; i < x_t.size(); ++i) r[i] = x_t[i] - predicted[i];
  return StateVector(std::span<const double>(r.data(), x_t.size()));
}

NoisePosterior abduct_noise(const FilterHistory& history, const SmoothedWeights& smoothed,
                            const SystemSpec& system, StepSize delta, const Executor& exec) {
  history.validate();
  check_compatible(system, history.dim, history.params);
  if (smoothed.steps != history.steps || smoothed.outer != history.outer ||
      smoothed.inner != history.inner) {
    throw DimensionError("smoothed weights do not match the filter history");
  }
  const std::size_t T = history.horizon();
  const std::size_t M = history.outer;
  const std::size_t N = history.inner;
  const std::size_t d = history.dim;

  std::vector<std::array<double, kMaxStateDim>> mu(T + 1), sigma(T + 1);
  exec.for_each(T, [&](std::size_t idx) {
    const std::size_t t = idx + 1;
    std::vector<double> residuals(M * N * d, 0.0);
    std::array<double, kMaxStateDim> predicted{};
    std::array<double, kMaxStateDim> mean{};
    double total = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t a = smoothed.ancestor(t, m);
      const std::size_t parent_outer = history.parent_outer_of(t, a);
      const auto theta = history.theta_at(t, a);
      for (std::size_t n = 0; n < N; ++n) {
        const double w = smoothed.w(t, m, n);
        if (w == 0.0) continue;
        const auto x = history.state_at(t, a, n);
        const auto parent = history.state_at(t - 1, parent_outer, history.parent_inner_of(t, a, n));
        rk4_step_into(system.id, parent, theta, delta.value(), {predicted.data(), d});
        double* r = residuals.data() + (m * N + n) * d;
        for (std::size_t i = 0; i < d; ++i) {
          r[i] = x[i] - predicted[i];
          mean[i] += w * r[i];
        }
        total += w;
      }
    }
    if (!(total > 0.0)) throw NumericalError("no particle carries smoothed weight", t);
    for (std::size_t i = 0; i < d; ++i) mean[i] /= total;
    std::array<double, kMaxStateDim> var{};
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t n = 0; n < N; ++n) {
        const double w = smoothed.w(t, m, n);
        if (w == 0.0) continue;
        const double* r = residuals.data() + (m * N + n) * d;
        for (std::size_t i = 0; i < d; ++i) {
          const double c = r[i] - mean[i];
          var[i] += w * c * c;
        }
      }
    }
    for (std::size_t i = 0; i < d; ++i) var[i] /= total;
    mu[t] = mean;
    sigma[t] = var;
  });

  NoisePosterior out;
  out.mu.reserve(T);
  out.sigma.reserve(T);
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(mu[t][i]) || !std::isfinite(sigma[t][i])) {
        throw NumericalError("abducted noise is non-finite at step " + std::to_string(t), t);
      }
    }
    out.mu.emplace_back(std::span<const double>(mu[t].data(), d));
    out.sigma.emplace_back(std::span<const double>(sigma[t].data(), d));
  }
  return out;
}

}  // namespace cfseq
