/**
 * @file counterfactual.hpp
 * @brief Counterfactual rollouts under initial-condition interventions.
 *
 * X^cf_0 = X_0 + delta e_j (or an absolute replacement), then
 * X^cf_t = F(X^cf_{t-1}, theta~) + U^cf_t with U^cf_t ~ N(mu_t, diag(sigma_t)).
 * theta~ is drawn once per trajectory from the selected regime.
 */
#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "cfseq/abduction.hpp"
#include "cfseq/parallel.hpp"
#include "cfseq/random.hpp"
#include "cfseq/ssm.hpp"

namespace cfseq {

/// Additive perturbation of one component (0-based), or an absolute initial state.
class Intervention {
 public:
  [[nodiscard]] static Intervention additive(std::size_t component, double delta);
  [[nodiscard]] static Intervention absolute(StateVector x0);

  [[nodiscard]] bool is_absolute() const noexcept { return absolute_.has_value(); }
  [[nodiscard]] std::size_t component() const noexcept { return component_; }
  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] const std::optional<StateVector>& replacement() const noexcept { return absolute_; }

 private:
  std::size_t component_ = 0;
  double delta_ = 0.0;
  std::optional<StateVector> absolute_;
};

[[nodiscard]] StateVector intervene(const StateVector& x0, const Intervention& intervention);

enum class ThetaMode { TrueTheta, PointEstimate, PosteriorSample };

[[nodiscard]] std::string_view to_string(ThetaMode mode) noexcept;
/// "true_theta", "point_estimate", "posterior_sample".
[[nodiscard]] ThetaMode parse_theta_mode(std::string_view name);

struct ThetaRegime {
  ThetaMode mode = ThetaMode::TrueTheta;
  std::optional<ParameterVector> truth;
  std::optional<ParameterVector> estimate;
  std::optional<std::vector<double>> estimate_std;

  /// Throws ConfigError when the references required by `mode` are missing.
  void validate() const;
};

/// TrueTheta -> truth, PointEstimate -> estimate, PosteriorSample -> estimate + N(0, diag(std^2)).
[[nodiscard]] ParameterVector sample_theta(const ThetaRegime& regime, RandomStream& stream);

struct CfTrajectorySet {
  std::vector<Trajectory> trajectories;
  std::vector<ParameterVector> thetas;
  /// Step at which a trajectory became non-finite; it is truncated before that step.
  std::vector<std::optional<std::size_t>> failed_at;
  std::optional<Trajectory> reference;

  [[nodiscard]] std::size_t size() const noexcept { return trajectories.size(); }
  [[nodiscard]] std::size_t failures() const noexcept;
};

/// Trajectory i uses substreams (kCfTheta, i) and (kCfNoise, i) of `rng`.
[[nodiscard]] CfTrajectorySet generate_cf(const SystemSpec& system, const ThetaRegime& regime,
                                          const NoisePosterior& noise, const StateVector& x0_cf,
                                          std::size_t horizon, StepSize delta,
                                          std::size_t n_trajectories, RngSeed rng,
                                          const Executor& exec = Executor{});

/// Noise-free rollout from x0_cf under the true parameters.
[[nodiscard]] Trajectory deterministic_cf(const SystemSpec& system, const ParameterVector& theta_true,
                                          const StateVector& x0_cf, std::size_t horizon,
                                          StepSize delta);

}  // namespace cfseq
