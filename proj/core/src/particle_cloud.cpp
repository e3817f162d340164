#include "cfseq/particle_cloud.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <limits>
#include <numbers>

#include "cfseq/error.hpp"

namespace cfseq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Lane m of a step seed.
RngSeed lane(RngSeed step, std::size_t m) noexcept { return substream(step, m); }

}  // namespace

ParameterPrior::ParameterPrior(std::vector<ParameterBounds> bounds) : bounds_(std::move(bounds)) {
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const auto& b = bounds_[i];
    if (!std::isfinite(b.low) || !std::isfinite(b.high) || !(b.low < b.high)) {
      throw ConfigError("prior bounds for parameter " + std::to_string(i) +
                        " must be finite with low < high");
    }
  }
}

bool ParameterPrior::contains(std::span<const double> theta) const noexcept {
  if (theta.size() != bounds_.size()) return false;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!(theta[i] >= bounds_[i].low && theta[i] <= bounds_[i].high)) return false;
  }
  return true;
}

void ParameterPrior::sample_into(RandomStream& stream, std::span<double> out) const noexcept {
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    out[i] = bounds_[i].low + (bounds_[i].high - bounds_[i].low) * stream.uniform();
  }
}

JitterKernel JitterKernel::shrinking(const ParameterPrior& prior, std::size_t outer_count,
                                     double scale) {
  if (!(scale >= 0.0)) throw ConfigError("jitter scale must be >= 0");
  JitterKernel k;
  const double shrink = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(outer_count, 1)));
  for (const auto& b : prior.bounds()) k.std.push_back(scale * (b.high - b.low) * shrink);
  k.clamp = prior;
  return k;
}

JitterKernel JitterKernel::none(std::size_t param_count) {
  return JitterKernel{std::vector<double>(param_count, 0.0), std::nullopt};
}

ParticleCloud::ParticleCloud(std::size_t outer_count, std::size_t inner_count,
                             std::size_t state_dim, std::size_t param_count)
    : outer(outer_count),
      inner(inner_count),
      dim(state_dim),
      params(param_count),
      theta(outer_count * param_count, 0.0),
      states(outer_count * inner_count * state_dim, 0.0),
      inner_weights(outer_count * inner_count, 1.0 / static_cast<double>(inner_count)),
      outer_weights(outer_count, 1.0 / static_cast<double>(outer_count)),
      log_likelihoods(outer_count * inner_count, 0.0),
      log_evidence(outer_count, 0.0) {
  if (outer_count < 1 || inner_count < 1) throw ConfigError("particle counts must be >= 1");
}

namespace {

ParticleCloud init_common(std::size_t outer_count, std::size_t inner_count, std::size_t params,
                          const InitialStateSampler& x0, RngSeed rng,
                          const std::function<void(RandomStream&, std::span<double>)>& draw_theta) {
  if (!(x0.std >= 0.0)) throw ConfigError("initial state std must be >= 0");
  ParticleCloud cloud(outer_count, inner_count, x0.mean.size(), params);
  for (std::size_t m = 0; m < outer_count; ++m) {
    RandomStream stream(lane(rng, m));
    draw_theta(stream, cloud.theta_of(m));
    for (std::size_t n = 0; n < inner_count; ++n) {
      auto x = cloud.state(m, n);
      for (std::size_t i = 0; i < cloud.dim; ++i) {
        x[i] = x0.std > 0.0 ? x0.mean[i] + x0.std * stream.normal() : x0.mean[i];
      }
    }
  }
  return cloud;
}

}  // namespace

ParticleCloud init_particles(const ParameterPrior& prior, std::size_t outer_count,
                             std::size_t inner_count, const InitialStateSampler& x0, RngSeed rng) {
  return init_common(outer_count, inner_count, prior.size(), x0, rng,
                     [&](RandomStream& s, std::span<double> out) { prior.sample_into(s, out); });
}

ParticleCloud init_particles_known(const ParameterVector& theta, std::size_t outer_count,
                                   std::size_t inner_count, const InitialStateSampler& x0,
                                   RngSeed rng) {
  return init_common(outer_count, inner_count, theta.size(), x0, rng,
                     [&](RandomStream&, std::span<double> out) {
                       std::copy(theta.span().begin(), theta.span().end(), out.begin());
                     });
}

double reflect_into(double value, const ParameterBounds& b) noexcept {
  const double width = b.high - b.low;
  if (!std::isfinite(value)) return b.low + 0.5 * width;
  if (value >= b.low && value <= b.high) return value;
  // Fold onto a period of 2 * width.
  double offset = std::fmod(value - b.low, 2.0 * width);
  if (offset < 0.0) offset += 2.0 * width;
  return offset <= width ? b.low + offset : b.high - (offset - width);
}

void jitter(ParticleCloud& cloud, const JitterKernel& kernel, RngSeed rng, const Executor& exec) {
  if (kernel.std.size() != cloud.params) throw DimensionError("jitter kernel dimension mismatch");
  if (kernel.clamp && kernel.clamp->size() != cloud.params) {
    throw DimensionError("jitter clamp bounds dimension mismatch");
  }
  if (std::all_of(kernel.std.begin(), kernel.std.end(), [](double s) { return s == 0.0; })) return;
  exec.for_each(cloud.outer, [&](std::size_t m) {
    RandomStream stream(lane(rng, m));
    auto theta = cloud.theta_of(m);
    for (std::size_t i = 0; i < cloud.params; ++i) {
      double v = theta[i] + kernel.std[i] * stream.normal();
      if (kernel.clamp) v = reflect_into(v, (*kernel.clamp)[i]);
      theta[i] = v;
    }
  });
}

std::size_t propagate(ParticleCloud& cloud, const SystemSpec& system, StepSize delta,
                      double process_std, RngSeed rng, const Executor& exec) {
  check_compatible(system, cloud.dim, cloud.params);
  std::vector<std::size_t> failures(cloud.outer, 0);
  exec.for_each(cloud.outer, [&](std::size_t m) {
    RandomStream stream(lane(rng, m));
    const auto theta = cloud.theta_of(m);
    std::array<double, kMaxStateDim> next{};
    for (std::size_t n = 0; n < cloud.inner; ++n) {
      auto x = cloud.state(m, n);
      const std::span<double> out(next.data(), cloud.dim);
      rk4_step_into(system.id, x, theta, delta.value(), out);
      bool finite = true;
      for (std::size_t i = 0; i < cloud.dim; ++i) {
        const double u = process_std > 0.0 ? process_std * stream.normal() : 0.0;
        x[i] = out[i] + u;
        finite = finite && std::isfinite(x[i]);
      }
      if (!finite) {
        std::fill(x.begin(), x.end(), std::numeric_limits<double>::quiet_NaN());
        ++failures[m];
      }
    }
  });
  std::size_t total = 0;
  for (auto f : failures) total += f;
  return total;
}

double gaussian_log_likelihood(std::span<const double> obs, std::span<const double> state,
                               const ObservationModel& model, double observation_std) {
  if (!(observation_std > 0.0)) {
    throw std::invalid_argument("observation_std must be > 0 for a Gaussian likelihood");
  }
  if (obs.size() != state.size() || model.dimension() != state.size()) {
    throw DimensionError("likelihood dimension mismatch");
  }
  std::array<double, kMaxStateDim> predicted{};
  model.apply(state, {predicted.data(), state.size()});
  double quad = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double r = (obs[i] - predicted[i]) / observation_std;
    quad += r * r;
  }
  const double d = static_cast<double>(state.size());
  return -0.5 * quad - d * std::log(observation_std) - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

double log_sum_exp(std::span<const double> values) noexcept {
  double peak = kNegInf;
  for (double v : values) {
    if (v > peak) peak = v;
  }
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

bool normalize_log_weights(std::span<const double> log_weights, std::span<double> out) noexcept {
  double peak = kNegInf;
  for (double v : log_weights) {
    if (v > peak) peak = v;  // NaN never compares greater
  }
  const auto n = static_cast<double>(out.size());
  if (!std::isfinite(peak)) {
    std::fill(out.begin(), out.end(), 1.0 / n);
    return false;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = log_weights[i];
    out[i] = (v == v) ? std::exp(v - peak) : 0.0;
    total += out[i];
  }
  for (auto& w : out) w /= total;
  return true;
}

std::size_t inner_weights(ParticleCloud& cloud, std::span<const double> obs,
                          const ObservationModel& model, double observation_std,
                          const Executor& exec) {
  if (obs.size() != model.dimension() || model.dimension() != cloud.dim) {
    throw DimensionError("observation dimension mismatch");
  }
  for (double y : obs) {
    if (!std::isfinite(y)) throw NumericalError("observation is non-finite");
  }
  // Validate once outside the parallel region.
  (void)gaussian_log_likelihood(obs, obs, model, observation_std);

  std::vector<char> degenerate(cloud.outer, 0);
  exec.for_each(cloud.outer, [&](std::size_t m) {
    auto logs = cloud.log_likelihoods_of(m);
    auto weights = cloud.inner_weights_of(m);
    std::vector<double> posterior(cloud.inner);
    for (std::size_t n = 0; n < cloud.inner; ++n) {
      const auto x = cloud.state(m, n);
      logs[n] = std::isfinite(x[0]) ? gaussian_log_likelihood(obs, x, model, observation_std)
                                    : kNegInf;
      posterior[n] = weights[n] > 0.0 ? std::log(weights[n]) + logs[n] : kNegInf;
    }
    cloud.log_evidence[m] = log_sum_exp(posterior);
    if (!normalize_log_weights(posterior, weights)) degenerate[m] = 1;
  });
  return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
}

bool outer_weights(ParticleCloud& cloud) {
  return normalize_log_weights(cloud.log_evidence, cloud.outer_weights);
}

std::vector<std::uint32_t> systematic_resample(std::span<const double> weights, std::size_t count,
                                               double u) {
  if (weights.empty()) throw std::invalid_argument("cannot resample an empty weight set");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::invalid_argument("resampling weights must have a positive finite sum");
  }
  std::vector<std::uint32_t> out(count);
  // Targets are scaled by the running-sum total so the final cumulative value
  // matches it bit for bit and zero-weight tails are never selected.
  const double step = total / static_cast<double>(count);
  double cumulative = weights[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double target = (static_cast<double>(i) + u) * step;
    while (target > cumulative && j + 1 < weights.size()) {
      ++j;
      cumulative += weights[j];
    }
    out[i] = static_cast<std::uint32_t>(j);
  }
  return out;
}

std::vector<std::uint32_t> resample(ParticleCloud& cloud, RngSeed rng) {
  RandomStream stream(rng);
  auto ancestors = systematic_resample(cloud.outer_weights, cloud.outer, stream.uniform());
  ParticleCloud next(cloud.outer, cloud.inner, cloud.dim, cloud.params);
  const std::size_t block = cloud.inner * cloud.dim;
  for (std::size_t m = 0; m < cloud.outer; ++m) {
    const std::size_t a = ancestors[m];
    std::copy_n(cloud.theta.begin() + static_cast<std::ptrdiff_t>(a * cloud.params), cloud.params,
                next.theta.begin() + static_cast<std::ptrdiff_t>(m * cloud.params));
    std::copy_n(cloud.states.begin() + static_cast<std::ptrdiff_t>(a * block), block,
                next.states.begin() + static_cast<std::ptrdiff_t>(m * block));
    std::copy_n(cloud.inner_weights.begin() + static_cast<std::ptrdiff_t>(a * cloud.inner),
                cloud.inner, next.inner_weights.begin() + static_cast<std::ptrdiff_t>(m * cloud.inner));
    std::copy_n(cloud.log_likelihoods.begin() + static_cast<std::ptrdiff_t>(a * cloud.inner),
                cloud.inner,
                next.log_likelihoods.begin() + static_cast<std::ptrdiff_t>(m * cloud.inner));
    next.log_evidence[m] = cloud.log_evidence[a];
  }
  cloud = std::move(next);
  return ancestors;
}

std::vector<std::uint32_t> resample_inner(ParticleCloud& cloud, RngSeed rng, const Executor& exec) {
  std::vector<std::uint32_t> ancestry(cloud.outer * cloud.inner);
  exec.for_each(cloud.outer, [&](std::size_t m) {
    RandomStream stream(lane(rng, m));
    const auto idx = systematic_resample(cloud.inner_weights_of(m), cloud.inner, stream.uniform());
    std::vector<double> moved(cloud.inner * cloud.dim);
    for (std::size_t n = 0; n < cloud.inner; ++n) {
      const auto src = cloud.state(m, idx[n]);
      std::copy(src.begin(), src.end(), moved.begin() + static_cast<std::ptrdiff_t>(n * cloud.dim));
      ancestry[m * cloud.inner + n] = idx[n];
    }
    std::copy(moved.begin(), moved.end(),
              cloud.states.begin() + static_cast<std::ptrdiff_t>(m * cloud.inner * cloud.dim));
    auto w = cloud.inner_weights_of(m);
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(cloud.inner));
  });
  return ancestry;
}

}  // namespace cfseq
