#include "cfseq/nested_filter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "cfseq/error.hpp"

namespace cfseq {

FilterHistory::FilterHistory(std::size_t steps_, std::size_t outer_, std::size_t inner_,
                             std::size_t dim_, std::size_t params_)
    : steps(steps_),
      outer(outer_),
      inner(inner_),
      dim(dim_),
      params(params_),
      theta(steps_ * outer_ * params_),
      states(steps_ * outer_ * inner_ * dim_),
      inner_weights(steps_ * outer_ * inner_),
      outer_weights(steps_ * outer_),
      parent_outer(steps_ * outer_),
      parent_inner(steps_ * outer_ * inner_) {
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t m = 0; m < outer; ++m) {
      parent_outer[t * outer + m] = static_cast<std::uint32_t>(m);
      for (std::size_t n = 0; n < inner; ++n) {
        parent_inner[(t * outer + m) * inner + n] = static_cast<std::uint32_t>(n);
      }
    }
  }
}

void FilterHistory::record(std::size_t t, const ParticleCloud& cloud) {
  if (cloud.outer != outer || cloud.inner != inner || cloud.dim != dim || cloud.params != params) {
    throw DimensionError("cloud shape does not match history");
  }
  const auto at = [](auto& vec, std::size_t offset) {
    return vec.begin() + static_cast<std::ptrdiff_t>(offset);
  };
  std::copy(cloud.theta.begin(), cloud.theta.end(), at(theta, t * outer * params));
  std::copy(cloud.states.begin(), cloud.states.end(), at(states, t * outer * inner * dim));
  std::copy(cloud.inner_weights.begin(), cloud.inner_weights.end(),
            at(inner_weights, t * outer * inner));
  std::copy(cloud.outer_weights.begin(), cloud.outer_weights.end(), at(outer_weights, t * outer));
}

std::vector<std::uint32_t> FilterHistory::lineages() const {
  std::vector<std::uint32_t> lineage(steps * outer);
  const std::size_t last = steps - 1;
  for (std::size_t m = 0; m < outer; ++m) lineage[last * outer + m] = static_cast<std::uint32_t>(m);
  for (std::size_t t = last; t > 0; --t) {
    for (std::size_t m = 0; m < outer; ++m) {
      lineage[(t - 1) * outer + m] = parent_outer_of(t, lineage[t * outer + m]);
    }
  }
  return lineage;
}

void FilterHistory::validate() const {
  if (steps < 1 || outer < 1 || inner < 1 || dim < 1 || dim > kMaxStateDim) {
    throw DimensionError("filter history has an invalid shape");
  }
  const bool sizes_ok = theta.size() == steps * outer * params &&
                        states.size() == steps * outer * inner * dim &&
                        inner_weights.size() == steps * outer * inner &&
                        outer_weights.size() == steps * outer &&
                        parent_outer.size() == steps * outer &&
                        parent_inner.size() == steps * outer * inner;
  if (!sizes_ok) throw DimensionError("filter history arrays do not match its shape");
  for (auto p : parent_outer) {
    if (p >= outer) throw DimensionError("outer ancestor index out of range");
  }
  for (auto p : parent_inner) {
    if (p >= inner) throw DimensionError("inner ancestor index out of range");
  }
}

FilterHistory run_filter(const ObservationSequence& observations, const SystemSpec& system,
                         ParticleCloud cloud, const FilterConfig& config,
                         const ObservationModel& model, RngSeed rng, const Executor& exec) {
  const std::size_t horizon = observations.horizon();
  if (horizon < 1) throw std::invalid_argument("run_filter needs T >= 1");
  check_compatible(system, cloud.dim, cloud.params);
  if (observations.dimension() != cloud.dim) throw DimensionError("observation dimension mismatch");
  const StepSize delta(config.delta);

  FilterHistory history(horizon + 1, cloud.outer, cloud.inner, cloud.dim, cloud.params);
  history.record(0, cloud);

  std::vector<std::uint32_t> inner_ancestry;
  std::vector<std::uint32_t> outer_ancestry;
  for (std::size_t t = 1; t <= horizon; ++t) {
    if (t > 1) {
      // Parents of the particles about to be propagated, in snapshot t-1 coordinates.
      for (std::size_t m = 0; m < cloud.outer; ++m) {
        const std::uint32_t a = outer_ancestry[m];
        history.parent_outer[t * cloud.outer + m] = a;
        for (std::size_t n = 0; n < cloud.inner; ++n) {
          history.parent_inner[(t * cloud.outer + m) * cloud.inner + n] =
              config.inner_resampling ? inner_ancestry[a * cloud.inner + n]
                                      : static_cast<std::uint32_t>(n);
        }
      }
    }

    jitter(cloud, config.kernel, substream(rng, stream_tag::kJitter, t), exec);
    history.diagnostics.nonfinite_particles +=
        propagate(cloud, system, delta, config.process_std,
                  substream(rng, stream_tag::kPropagate, t), exec);
    history.diagnostics.inner_degeneracies += inner_weights(
        cloud, observations.observations[t].span(), model, config.observation_std, exec);
    if (!outer_weights(cloud)) ++history.diagnostics.outer_degeneracies;
    history.record(t, cloud);

    if (t == horizon) break;
    if (config.inner_resampling) {
      inner_ancestry = resample_inner(cloud, substream(rng, stream_tag::kInnerResample, t), exec);
    }
    outer_ancestry = resample(cloud, substream(rng, stream_tag::kOuterResample, t));
  }
  return history;
}

FilterHistory run_filter(const ObservationSequence& observations, const SystemSpec& system,
                         const ParameterPrior& prior, const InitialStateSampler& x0,
                         const FilterConfig& config, const ObservationModel& model, RngSeed rng,
                         const Executor& exec) {
  auto cloud = init_particles(prior, config.outer_count, config.inner_count, x0,
                              substream(rng, stream_tag::kFilterInit));
  return run_filter(observations, system, std::move(cloud), config, model, rng, exec);
}

std::vector<StateVector> filtered_means(const FilterHistory& history) {
  std::vector<StateVector> means;
  means.reserve(history.steps);
  std::array<double, kMaxStateDim> acc{};
  for (std::size_t t = 0; t < history.steps; ++t) {
    acc.fill(0.0);
    for (std::size_t m = 0; m < history.outer; ++m) {
      const double v = history.outer_weight(t, m);
      if (v == 0.0) continue;
      for (std::size_t n = 0; n < history.inner; ++n) {
        const double w = v * history.inner_weight(t, m, n);
        if (w == 0.0) continue;
        const auto x = history.state_at(t, m, n);
        for (std::size_t i = 0; i < history.dim; ++i) acc[i] += w * x[i];
      }
    }
    means.emplace_back(std::span<const double>(acc.data(), history.dim));
  }
  return means;
}

}  // namespace cfseq
