#include "cfseq/ssm.hpp"

#include <array>
#include <cmath>
#include <string>

#include "cfseq/error.hpp"

namespace cfseq {

void Trajectory::validate() const {
  if (states.empty()) throw DimensionError("trajectory is empty");
  const std::size_t d = states.front().size();
  for (const auto& s : states) {
    if (s.size() != d) throw DimensionError("trajectory has mixed state dimensions");
  }
}

void NoiseConfig::validate() const {
  if (!(process_std >= 0.0) || !std::isfinite(process_std)) {
    throw ConfigError("process_std must be a finite non-negative number");
  }
  if (!(observation_std >= 0.0) || !std::isfinite(observation_std)) {
    throw ConfigError("observation_std must be a finite non-negative number");
  }
}

ObservationModel ObservationModel::identity(std::size_t dim) {
  std::vector<double> m(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) m[i * dim + i] = 1.0;
  return ObservationModel(dim, std::move(m));
}

ObservationModel ObservationModel::zero(std::size_t dim) {
  return ObservationModel(dim, std::vector<double>(dim * dim, 0.0));
}

ObservationModel::ObservationModel(std::size_t dim, std::vector<double> row_major)
    : dim_(dim), matrix_(std::move(row_major)), identity_(true) {
  if (dim == 0 || matrix_.size() != dim * dim) {
    throw DimensionError("observation matrix must be square with dimension >= 1");
  }
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      if (!std::isfinite(at(r, c))) throw DimensionError("observation matrix must be finite");
      if (at(r, c) != (r == c ? 1.0 : 0.0)) identity_ = false;
    }
  }
}

void ObservationModel::apply(std::span<const double> x, std::span<double> out) const noexcept {
  if (identity_) {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = x[i];
    return;
  }
  for (std::size_t r = 0; r < dim_; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) acc += matrix_[r * dim_ + c] * x[c];
    out[r] = acc;
  }
}

SimulatedTrajectory simulate_hidden(const SystemSpec& system, const ParameterVector& params,
                                    const StateVector& x0, std::size_t horizon, StepSize delta,
                                    double process_std, RngSeed rng) {
  check_compatible(system, x0.size(), params.size());
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(process_std >= 0.0)) throw std::invalid_argument("process_std must be >= 0");

  const std::size_t d = x0.size();
  RandomStream stream(rng);
  SimulatedTrajectory out{Trajectory{{}, delta}, {}};
  out.trajectory.states.reserve(horizon + 1);
  out.noise.reserve(horizon + 1);
  out.trajectory.states.push_back(x0);
  out.noise.push_back(StateVector::zeros(d));

  std::array<double, kMaxStateDim> next{};
  std::array<double, kMaxStateDim> u{};
  for (std::size_t t = 1; t <= horizon; ++t) {
    rk4_step_into(system.id, out.trajectory.states.back().span(), params.span(), delta.value(),
                  {next.data(), d});
    for (std::size_t i = 0; i < d; ++i) {
      u[i] = process_std > 0.0 ? process_std * stream.normal() : 0.0;
      next[i] += u[i];
      if (!std::isfinite(next[i])) {
        throw NumericalError("simulation became non-finite at step " + std::to_string(t), t);
      }
    }
    out.trajectory.states.emplace_back(std::span<const double>(next.data(), d));
    out.noise.emplace_back(std::span<const double>(u.data(), d));
  }
  return out;
}

ObservationSequence observe(const Trajectory& trajectory, const ObservationModel& model,
                            double observation_std, RngSeed rng) {
  trajectory.validate();
  if (model.dimension() != trajectory.dimension()) {
    throw DimensionError("observation model dimension does not match trajectory");
  }
  if (!(observation_std >= 0.0)) throw std::invalid_argument("observation_std must be >= 0");
  const std::size_t d = trajectory.dimension();
  RandomStream stream(rng);
  ObservationSequence out;
  out.observations.reserve(trajectory.states.size());
  std::array<double, kMaxStateDim> y{};
  for (const auto& x : trajectory.states) {
    model.apply(x.span(), {y.data(), d});
    for (std::size_t i = 0; i < d; ++i) {
      if (observation_std > 0.0) y[i] += observation_std * stream.normal();
    }
    out.observations.emplace_back(std::span<const double>(y.data(), d));
  }
  return out;
}

Trajectory rollout(const SystemSpec& system, const ParameterVector& params, const StateVector& x0,
                   std::size_t horizon, StepSize delta) {
  check_compatible(system, x0.size(), params.size());
  Trajectory traj{{}, delta};
  traj.states.reserve(horizon + 1);
  traj.states.push_back(x0);
  for (std::size_t t = 1; t <= horizon; ++t) {
    try {
      traj.states.push_back(rk4_step(system, traj.states.back(), params, delta));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at step " + std::to_string(t), t);
    }
  }
  return traj;
}

}  // namespace cfseq
