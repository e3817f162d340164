#include "cfseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfseq/error.hpp"

namespace cfseq {

double phase_distance(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw DimensionError("phase_distance: dimension mismatch");
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double r = a[k] - b[k];
    sq += r * r;
  }
  return std::sqrt(sq);
}

RmseSeries rmse_t(const std::vector<Trajectory>& ensemble, const Trajectory& reference) {
  if (ensemble.empty()) throw std::invalid_argument("rmse_t: empty ensemble");
  reference.validate();
  const std::size_t length = reference.states.size();
  for (const auto& traj : ensemble) {
    if (traj.states.size() > length) throw DimensionError("rmse_t: trajectory longer than reference");
    if (!traj.states.empty() && traj.dimension() != reference.dimension()) {
      throw DimensionError("rmse_t: dimension mismatch");
    }
  }
  RmseSeries out;
  out.values.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& traj : ensemble) {
      if (t >= traj.states.size()) continue;
      const double dist = phase_distance(traj.states[t], reference.states[t]);
      sum += dist * dist;
      ++count;
    }
    if (count == 0) {
      throw NumericalError("rmse_t: no counterfactual trajectory reaches step " + std::to_string(t), t);
    }
    out.values[t] = std::sqrt(sum / static_cast<double>(count));
  }
  return out;
}

RmseSeries rmse_t(const CfTrajectorySet& ensemble, const Trajectory& reference) {
  return rmse_t(ensemble.trajectories, reference);
}

RmseSeries moving_average(const RmseSeries& series, std::size_t window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  const std::size_t n = series.values.size();
  const std::size_t before = window / 2;
  const std::size_t after = (window - 1) / 2;
  RmseSeries out;
  out.window = window;
  out.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= before ? t - before : 0;
    const std::size_t hi = std::min(n - 1, t + after);
    double sum = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) sum += series.values[i];
    const double mean = sum / static_cast<double>(hi - lo + 1);
    out.values[t] = std::max(mean, 0.0);
  }
  return out;
}

std::optional<std::size_t> divergence_onset(const RmseSeries& series, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("divergence_onset: threshold must be > 0");
  for (std::size_t t = 0; t < series.values.size(); ++t) {
    if (series.values[t] > threshold) return t;
  }
  return std::nullopt;
}

RmseSeries factual_rmse(const Trajectory& estimate, const Trajectory& truth) {
  if (estimate.states.size() != truth.states.size()) {
    throw DimensionError("factual_rmse: trajectory lengths differ");
  }
  RmseSeries out;
  out.values.reserve(truth.states.size());
  for (std::size_t t = 0; t < truth.states.size(); ++t) {
    out.values.push_back(phase_distance(estimate.states[t], truth.states[t]));
  }
  return out;
}

}  // namespace cfseq
