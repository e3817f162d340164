/**
 * @file ssm.hpp
 * @brief State-space model simulation: X_t = F(X_{t-1}, theta) + U_t,  Y_t = H X_t + W_t.
 *
 * U_t ~ N(0, process_std^2 I) and W_t ~ N(0, observation_std^2 I). Configured
 * noise levels are standard deviations.
 */
#pragma once

#include <cstddef>
#include <vector>

#include "cfseq/dynamics.hpp"
#include "cfseq/random.hpp"

namespace cfseq {

/// States at t = 0..T with a fixed step.
struct Trajectory {
  std::vector<StateVector> states;
  StepSize delta{1.0};

  [[nodiscard]] std::size_t horizon() const noexcept { return states.empty() ? 0 : states.size() - 1; }
  [[nodiscard]] std::size_t dimension() const noexcept {
    return states.empty() ? 0 : states.front().size();
  }
  /// Throws DimensionError if empty or of mixed dimension.
  void validate() const;
};

struct ObservationSequence {
  std::vector<StateVector> observations;

  [[nodiscard]] std::size_t horizon() const noexcept {
    return observations.empty() ? 0 : observations.size() - 1;
  }
  [[nodiscard]] std::size_t dimension() const noexcept {
    return observations.empty() ? 0 : observations.front().size();
  }
};

struct NoiseConfig {
  double process_std = 0.0;
  double observation_std = 0.0;

  void validate() const;
};

/// Square d x d observation matrix, row-major. Defaults to identity.
class ObservationModel {
 public:
  [[nodiscard]] static ObservationModel identity(std::size_t dim);
  [[nodiscard]] static ObservationModel zero(std::size_t dim);
  ObservationModel(std::size_t dim, std::vector<double> row_major);

  [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
  [[nodiscard]] bool is_identity() const noexcept { return identity_; }
  [[nodiscard]] double at(std::size_t row, std::size_t col) const noexcept {
    return matrix_[row * dim_ + col];
  }
  /// out = H x.
  void apply(std::span<const double> x, std::span<double> out) const noexcept;

 private:
  std::size_t dim_;
  std::vector<double> matrix_;
  bool identity_;
};

struct SimulatedTrajectory {
  Trajectory trajectory;
  /// Realized process noise; noise[0] is the zero vector, noise[t] = u_t for t >= 1.
  std::vector<StateVector> noise;
};

/// Rolls the noisy forward model for `horizon` steps from x0.
/// Throws NumericalError carrying the first non-finite step index.
[[nodiscard]] SimulatedTrajectory simulate_hidden(const SystemSpec& system,
                                                  const ParameterVector& params,
                                                  const StateVector& x0, std::size_t horizon,
                                                  StepSize delta, double process_std, RngSeed rng);

[[nodiscard]] ObservationSequence observe(const Trajectory& trajectory, const ObservationModel& model,
                                          double observation_std, RngSeed rng);

/// Noise-free rollout X_t = F(X_{t-1}) for `horizon` steps.
[[nodiscard]] Trajectory rollout(const SystemSpec& system, const ParameterVector& params,
                                 const StateVector& x0, std::size_t horizon, StepSize delta);

}  // namespace cfseq
