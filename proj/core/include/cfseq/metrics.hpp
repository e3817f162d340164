#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cfseq/counterfactual.hpp"

namespace cfseq {

/// Non-negative series indexed by t = 0..T.
struct RmseSeries {
  std::vector<double> values;
  /// Window length if this series is a moving average.
  std::optional<std::size_t> window;
};

/// Euclidean distance in phase space.
[[nodiscard]] double phase_distance(const StateVector& a, const StateVector& b);

/// RMSE_t = sqrt(mean_i d(t, i)^2) over the ensemble members that reach t.
/// Throws if the ensemble is empty or some t is reached by no member.
[[nodiscard]] RmseSeries rmse_t(const CfTrajectorySet& ensemble, const Trajectory& reference);
[[nodiscard]] RmseSeries rmse_t(const std::vector<Trajectory>& ensemble, const Trajectory& reference);

/// Centered moving average over [t - window/2, t + (window - 1) / 2];
/// near the ends the window is clipped to the available samples.
[[nodiscard]] RmseSeries moving_average(const RmseSeries& series, std::size_t window = 200);

/// Smallest t with series[t] > threshold.
[[nodiscard]] std::optional<std::size_t> divergence_onset(const RmseSeries& series, double threshold);

/// Per-t phase distance between an estimate and the truth.
[[nodiscard]] RmseSeries factual_rmse(const Trajectory& estimate, const Trajectory& truth);

}  // namespace cfseq
