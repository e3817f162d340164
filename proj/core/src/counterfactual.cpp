#include "cfseq/counterfactual.hpp"

#include <array>
#include <cmath>
#include <string>

#include "cfseq/error.hpp"

namespace cfseq {

Intervention Intervention::additive(std::size_t component, double delta) {
  if (!std::isfinite(delta)) throw ConfigError("intervention delta must be finite");
  Intervention i;
  i.component_ = component;
  i.delta_ = delta;
  return i;
}

Intervention Intervention::absolute(StateVector x0) {
  Intervention i;
  i.absolute_ = std::move(x0);
  return i;
}

StateVector intervene(const StateVector& x0, const Intervention& intervention) {
  if (intervention.is_absolute()) {
    if (intervention.replacement()->size() != x0.size()) {
      throw DimensionError("absolute intervention has the wrong dimension");
    }
    return *intervention.replacement();
  }
  if (intervention.component() >= x0.size()) {
    throw DimensionError("intervention component " + std::to_string(intervention.component() + 1) +
                         " is outside the state dimension " + std::to_string(x0.size()));
  }
  return x0.with(intervention.component(), x0[intervention.component()] + intervention.delta());
}

std::string_view to_string(ThetaMode mode) noexcept {
  switch (mode) {
    case ThetaMode::TrueTheta: return "true_theta";
    case ThetaMode::PointEstimate: return "point_estimate";
    case ThetaMode::PosteriorSample: return "posterior_sample";
  }
  return "unknown";
}

ThetaMode parse_theta_mode(std::string_view name) {
  if (name == "true_theta") return ThetaMode::TrueTheta;
  if (name == "point_estimate") return ThetaMode::PointEstimate;
  if (name == "posterior_sample") return ThetaMode::PosteriorSample;
  throw ConfigError("unknown regime '" + std::string(name) +
                    "' (expected true_theta, point_estimate or posterior_sample)");
}

void ThetaRegime::validate() const {
  switch (mode) {
    case ThetaMode::TrueTheta:
      if (!truth) throw ConfigError("true_theta regime needs the true parameters");
      return;
    case ThetaMode::PointEstimate:
      if (!estimate) throw ConfigError("point_estimate regime needs a parameter estimate");
      return;
    case ThetaMode::PosteriorSample:
      if (!estimate || !estimate_std) {
        throw ConfigError("posterior_sample regime needs an estimate and its std");
      }
      if (estimate_std->size() != estimate->size()) {
        throw DimensionError("posterior std has the wrong dimension");
      }
      for (double s : *estimate_std) {
        if (!(s >= 0.0)) throw ConfigError("posterior std must be >= 0");
      }
      return;
  }
}

ParameterVector sample_theta(const ThetaRegime& regime, RandomStream& stream) {
  regime.validate();
  switch (regime.mode) {
    case ThetaMode::TrueTheta: return *regime.truth;
    case ThetaMode::PointEstimate: return *regime.estimate;
    case ThetaMode::PosteriorSample: {
      std::vector<double> values = regime.estimate->values();
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double s = (*regime.estimate_std)[i];
        // Always consume the draw so substreams stay aligned across regimes.
        const double z = stream.normal();
        if (s > 0.0) values[i] += s * z;
      }
      return ParameterVector(std::move(values));
    }
  }
  throw std::logic_error("unreachable");
}

std::size_t CfTrajectorySet::failures() const noexcept {
  std::size_t count = 0;
  for (const auto& f : failed_at) count += f.has_value() ? 1 : 0;
  return count;
}

CfTrajectorySet generate_cf(const SystemSpec& system, const ThetaRegime& regime,
                            const NoisePosterior& noise, const StateVector& x0_cf,
                            std::size_t horizon, StepSize delta, std::size_t n_trajectories,
                            RngSeed rng, const Executor& exec) {
  regime.validate();
  noise.validate();
  if (n_trajectories < 1) throw ConfigError("need at least one counterfactual trajectory");
  if (noise.horizon() < horizon) {
    throw DimensionError("noise posterior covers " + std::to_string(noise.horizon()) +
                         " steps, need " + std::to_string(horizon));
  }
  if (horizon > 0 && noise.dimension() != x0_cf.size()) {
    throw DimensionError("noise posterior dimension does not match the state");
  }
  const std::size_t d = x0_cf.size();

  CfTrajectorySet out;
  out.trajectories.resize(n_trajectories, Trajectory{{}, delta});
  out.thetas.resize(n_trajectories);
  out.failed_at.resize(n_trajectories);

  exec.for_each(n_trajectories, [&](std::size_t i) {
    RandomStream theta_stream(substream(rng, stream_tag::kCfTheta, i));
    RandomStream noise_stream(substream(rng, stream_tag::kCfNoise, i));
    const ParameterVector theta = sample_theta(regime, theta_stream);
    check_compatible(system, d, theta.size());
    auto& states = out.trajectories[i].states;
    states.reserve(horizon + 1);
    states.push_back(x0_cf);
    std::array<double, kMaxStateDim> next{};
    for (std::size_t t = 1; t <= horizon; ++t) {
      rk4_step_into(system.id, states.back().span(), theta.span(), delta.value(), {next.data(), d});
      const auto& mu = noise.mu[t - 1];
      const auto& var = noise.sigma[t - 1];
      bool finite = true;
      for (std::size_t k = 0; k < d; ++k) {
        const double u = var[k] > 0.0 ? mu[k] + std::sqrt(var[k]) * noise_stream.normal() : mu[k];
        next[k] += u;
        finite = finite && std::isfinite(next[k]);
      }
      if (!finite) {
        out.failed_at[i] = t;
        break;
      }
      states.emplace_back(std::span<const double>(next.data(), d));
    }
    out.thetas[i] = theta;
  });
  return out;
}

Trajectory deterministic_cf(const SystemSpec& system, const ParameterVector& theta_true,
                            const StateVector& x0_cf, std::size_t horizon, StepSize delta) {
  return rollout(system, theta_true, x0_cf, horizon, delta);
}

}  // namespace cfseq
