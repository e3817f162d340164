/**
 * @file abduction.hpp
 * @brief Posterior over the exogenous process noise from smoothed particles.
 *
 * For every particle the residual x_t - F(x_{t-1}, theta) is formed against
 * its own recorded parent. mu_t is the smoothed-weight mean of the residuals
 * and sigma_t their weighted population variance, per dimension.
 */
#pragma once

#include <cstddef>
#include <vector>

#include "cfseq/nested_filter.hpp"

namespace cfseq {

/// mu[t-1], sigma[t-1] describe U_t for t = 1..T. sigma holds variances.
struct NoisePosterior {
  std::vector<StateVector> mu;
  std::vector<StateVector> sigma;

  [[nodiscard]] std::size_t horizon() const noexcept { return mu.size(); }
  [[nodiscard]] std::size_t dimension() const noexcept { return mu.empty() ? 0 : mu.front().size(); }
  /// Throws DimensionError on length/dimension mismatch or negative variance.
  void validate() const;
};

[[nodiscard]] StateVector particle_residual(const StateVector& x_t, const StateVector& x_prev,
                                            const ParameterVector& theta, const SystemSpec& system,
                                            StepSize delta);

[[nodiscard]] NoisePosterior abduct_noise(const FilterHistory& history,
                                          const SmoothedWeights& smoothed, const SystemSpec& system,
                                          StepSize delta, const Executor& exec = Executor{});

}  // namespace cfseq
