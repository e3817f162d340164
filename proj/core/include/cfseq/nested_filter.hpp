/**
 * @file nested_filter.hpp
 * @brief Nested particle filter over (theta, X_t) with backward smoothing.
 *
 * History layout: snapshot t holds the cloud after weighting at step t and
 * before any resampling. Each pre-resampling particle (n, m) at t >= 1 records
 * its parent at t - 1 through `parent_outer[t][m]` and `parent_inner[t][m][n]`,
 * so residuals and transition densities always pair states of the same lineage.
 *
 * Smoothed quantities are indexed by final-time lineage: lineage m is the
 * ancestry chain of outer particle m at T, and `lineage_outer(t, m)` gives the
 * snapshot index that chain passes through at time t.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cfseq/particle_cloud.hpp"

namespace cfseq {

struct FilterConfig {
  std::size_t outer_count = 50;
  std::size_t inner_count = 50;
  double delta = 0.05;
  double process_std = 1.0;
  double observation_std = 1.0;
  JitterKernel kernel;
  bool inner_resampling = true;
};

struct FilterDiagnostics {
  std::size_t nonfinite_particles = 0;
  std::size_t inner_degeneracies = 0;
  std::size_t outer_degeneracies = 0;
  std::size_t smoother_fallbacks = 0;

  friend bool operator==(const FilterDiagnostics&, const FilterDiagnostics&) = default;
};

struct FilterHistory {
  std::size_t steps = 0;  // T + 1
  std::size_t outer = 0;
  std::size_t inner = 0;
  std::size_t dim = 0;
  std::size_t params = 0;

  std::vector<double> theta;                 // steps x outer x params
  std::vector<double> states;                // steps x outer x inner x dim
  std::vector<double> inner_weights;         // steps x outer x inner
  std::vector<double> outer_weights;         // steps x outer
  std::vector<std::uint32_t> parent_outer;   // steps x outer (row 0 is the identity)
  std::vector<std::uint32_t> parent_inner;   // steps x outer x inner (row 0 is the identity)
  FilterDiagnostics diagnostics;

  FilterHistory() = default;
  FilterHistory(std::size_t steps, std::size_t outer, std::size_t inner, std::size_t dim,
                std::size_t params);

  [[nodiscard]] std::size_t horizon() const noexcept { return steps - 1; }

  [[nodiscard]] std::span<const double> theta_at(std::size_t t, std::size_t m) const noexcept {
    return {theta.data() + (t * outer + m) * params, params};
  }
  [[nodiscard]] std::span<const double> state_at(std::size_t t, std::size_t m,
                                                 std::size_t n) const noexcept {
    return {states.data() + ((t * outer + m) * inner + n) * dim, dim};
  }
  [[nodiscard]] double inner_weight(std::size_t t, std::size_t m, std::size_t n) const noexcept {
    return inner_weights[(t * outer + m) * inner + n];
  }
  [[nodiscard]] double outer_weight(std::size_t t, std::size_t m) const noexcept {
    return outer_weights[t * outer + m];
  }
  [[nodiscard]] std::uint32_t parent_outer_of(std::size_t t, std::size_t m) const noexcept {
    return parent_outer[t * outer + m];
  }
  [[nodiscard]] std::uint32_t parent_inner_of(std::size_t t, std::size_t m,
                                              std::size_t n) const noexcept {
    return parent_inner[(t * outer + m) * inner + n];
  }

  void record(std::size_t t, const ParticleCloud& cloud);

  /// lineage[t * outer + m]: snapshot index of final-time lineage m at time t.
  [[nodiscard]] std::vector<std::uint32_t> lineages() const;

  /// Throws DimensionError if array sizes disagree with the header fields.
  void validate() const;
};

/// Runs jitter -> propagate -> inner_weights -> outer_weights -> resample for t = 1..T
/// starting from `initial` (snapshot 0).
[[nodiscard]] FilterHistory run_filter(const ObservationSequence& observations,
                                       const SystemSpec& system, ParticleCloud initial,
                                       const FilterConfig& config, const ObservationModel& model,
                                       RngSeed rng, const Executor& exec = Executor{});

/// Convenience overload drawing the initial cloud from `prior` and `x0`.
[[nodiscard]] FilterHistory run_filter(const ObservationSequence& observations,
                                       const SystemSpec& system, const ParameterPrior& prior,
                                       const InitialStateSampler& x0, const FilterConfig& config,
                                       const ObservationModel& model, RngSeed rng,
                                       const Executor& exec = Executor{});

/// Weighted filtering mean sum_m v_t^(m) sum_n w_t^(n,m) x_t^(n,m) for each t.
[[nodiscard]] std::vector<StateVector> filtered_means(const FilterHistory& history);

enum class SmootherForm {
  /// w~_t(n) = w_t(n) sum_k w~_{t+1}(k) f(x_{t+1}^k | x_t^n) / sum_l w_t(l) f(x_{t+1}^k | x_t^l)
  Marginal,
  /// w~_t(n) = w_t(n) sum_k w~_{t+1}(k) f(x_{t+1}^k | x_t^n), normalized per lineage
  TransitionOnly,
};

struct SmootherOptions {
  SmootherForm form = SmootherForm::Marginal;
  /// Use every stride-th successor particle in the backward sums.
  std::size_t stride = 1;
};

struct SmoothedWeights {
  std::size_t steps = 0;
  std::size_t outer = 0;
  std::size_t inner = 0;
  std::vector<double> w_tilde;  // steps x outer x inner, jointly normalized per t
  std::vector<double> v_tilde;  // steps x outer, normalized per t
  std::vector<std::uint32_t> lineage;  // steps x outer, see FilterHistory::lineages
  std::size_t fallbacks = 0;

  [[nodiscard]] double w(std::size_t t, std::size_t m, std::size_t n) const noexcept {
    return w_tilde[(t * outer + m) * inner + n];
  }
  [[nodiscard]] double v(std::size_t t, std::size_t m) const noexcept { return v_tilde[t * outer + m]; }
  [[nodiscard]] std::uint32_t ancestor(std::size_t t, std::size_t m) const noexcept {
    return lineage[t * outer + m];
  }
};

/// Backward pass over the recorded history with transition density
/// N(x'; F(x, theta), process_std^2 I). Time steps where a lineage's weights
/// underflow (or process_std == 0) fall back to the filtered weights.
[[nodiscard]] SmoothedWeights backward_smooth(const FilterHistory& history,
                                              const SystemSpec& system, StepSize delta,
                                              double process_std,
                                              const SmootherOptions& options = {},
                                              const Executor& exec = Executor{});

struct PosteriorSummary {
  Trajectory state_mean;
  ParameterVector theta_mean;
  std::vector<double> theta_std;
};

enum class ThetaAveraging {
  /// Final-time particles weighted by v~.
  FinalTime,
  /// Average over t = 1..T of the v~_t-weighted lineage parameters.
  PathAverage,
};

/// x^_t = sum_{n,m} w~_t(n,m) x_t^(n,m); theta^ with its per-parameter weighted std.
[[nodiscard]] PosteriorSummary posterior_summary(const FilterHistory& history,
                                                 const SmoothedWeights& smoothed, StepSize delta,
                                                 ThetaAveraging averaging = ThetaAveraging::FinalTime);

}  // namespace cfseq
