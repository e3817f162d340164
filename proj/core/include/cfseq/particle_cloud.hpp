/**
 * @file particle_cloud.hpp
 * @brief Two-layer particle cloud and the per-step operations of the nested filter.
 *
 * The cloud holds M outer parameter particles, each owning N inner state
 * particles. One filter step is
 *
 *   jitter -> propagate -> inner_weights -> outer_weights -> (inner resample) -> resample
 *
 * Operations that act independently per outer particle take an Executor and
 * draw from a per-(t, m) substream of the supplied seed.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cfseq/dynamics.hpp"
#include "cfseq/parallel.hpp"
#include "cfseq/random.hpp"
#include "cfseq/ssm.hpp"

namespace cfseq {

struct ParameterBounds {
  double low;
  double high;
};

/// Independent uniform prior per parameter.
class ParameterPrior {
 public:
  explicit ParameterPrior(std::vector<ParameterBounds> bounds);

  [[nodiscard]] std::size_t size() const noexcept { return bounds_.size(); }
  [[nodiscard]] const ParameterBounds& operator[](std::size_t i) const noexcept { return bounds_[i]; }
  [[nodiscard]] const std::vector<ParameterBounds>& bounds() const noexcept { return bounds_; }
  [[nodiscard]] bool contains(std::span<const double> theta) const noexcept;

  void sample_into(RandomStream& stream, std::span<double> out) const noexcept;

 private:
  std::vector<ParameterBounds> bounds_;
};

/// Gaussian N(mean, std^2 I) for the initial state particles; std = 0 is a point mass.
struct InitialStateSampler {
  StateVector mean;
  double std = 0.0;
};

/// Zero-mean Gaussian perturbation of each parameter particle.
struct JitterKernel {
  std::vector<double> std;
  /// When set, jittered values are reflected back into these bounds.
  std::optional<ParameterPrior> clamp;

  /// s_i = scale * (high_i - low_i) / sqrt(M), reflecting into the prior.
  [[nodiscard]] static JitterKernel shrinking(const ParameterPrior& prior, std::size_t outer_count,
                                              double scale = 0.05);
  [[nodiscard]] static JitterKernel none(std::size_t param_count);
};

struct ParticleCloud {
  std::size_t outer = 0;
  std::size_t inner = 0;
  std::size_t dim = 0;
  std::size_t params = 0;

  std::vector<double> theta;            // outer x params
  std::vector<double> states;           // outer x inner x dim
  std::vector<double> inner_weights;    // outer x inner, normalized per outer particle
  std::vector<double> outer_weights;    // outer, normalized
  std::vector<double> log_likelihoods;  // outer x inner, from the latest weighting
  std::vector<double> log_evidence;     // outer, log sum_n w_prev(n) p(y | x^(n,m))

  ParticleCloud() = default;
  ParticleCloud(std::size_t outer_count, std::size_t inner_count, std::size_t state_dim,
                std::size_t param_count);

  [[nodiscard]] std::span<double> theta_of(std::size_t m) noexcept {
    return {theta.data() + m * params, params};
  }
  [[nodiscard]] std::span<const double> theta_of(std::size_t m) const noexcept {
    return {theta.data() + m * params, params};
  }
  [[nodiscard]] std::span<double> state(std::size_t m, std::size_t n) noexcept {
    return {states.data() + (m * inner + n) * dim, dim};
  }
  [[nodiscard]] std::span<const double> state(std::size_t m, std::size_t n) const noexcept {
    return {states.data() + (m * inner + n) * dim, dim};
  }
  [[nodiscard]] std::span<double> inner_weights_of(std::size_t m) noexcept {
    return {inner_weights.data() + m * inner, inner};
  }
  [[nodiscard]] std::span<const double> inner_weights_of(std::size_t m) const noexcept {
    return {inner_weights.data() + m * inner, inner};
  }
  [[nodiscard]] std::span<double> log_likelihoods_of(std::size_t m) noexcept {
    return {log_likelihoods.data() + m * inner, inner};
  }
};

/// theta^(m) ~ prior, x^(n,m) ~ x0 sampler, uniform weights.
[[nodiscard]] ParticleCloud init_particles(const ParameterPrior& prior, std::size_t outer_count,
                                           std::size_t inner_count, const InitialStateSampler& x0,
                                           RngSeed rng);

/// Same layout with every outer particle set to a known theta.
[[nodiscard]] ParticleCloud init_particles_known(const ParameterVector& theta,
                                                 std::size_t outer_count, std::size_t inner_count,
                                                 const InitialStateSampler& x0, RngSeed rng);

/// Reflects `value` into [low, high].
[[nodiscard]] double reflect_into(double value, const ParameterBounds& bounds) noexcept;

void jitter(ParticleCloud& cloud, const JitterKernel& kernel, RngSeed rng,
            const Executor& exec = Executor{});

/// x^(n,m) <- F(x^(n,m), theta^(m)) + u. Returns the number of particles that
/// became non-finite; those are left as NaN and receive zero weight later.
std::size_t propagate(ParticleCloud& cloud, const SystemSpec& system, StepSize delta,
                      double process_std, RngSeed rng, const Executor& exec = Executor{});

/// log N(obs; H state, observation_std^2 I). Throws on observation_std <= 0.
[[nodiscard]] double gaussian_log_likelihood(std::span<const double> obs,
                                             std::span<const double> state,
                                             const ObservationModel& model, double observation_std);

/// Normalizes exp(log_weights) in place via max subtraction. Returns false
/// (and writes uniform weights) when no entry is finite.
bool normalize_log_weights(std::span<const double> log_weights, std::span<double> out) noexcept;

/// log sum_i exp(v_i); -inf when every entry is -inf.
[[nodiscard]] double log_sum_exp(std::span<const double> values) noexcept;

/// Stores log-likelihoods and per-outer normalized inner weights
/// w^(n,m) proportional to w_prev^(n,m) p(y | x^(n,m)); after inner resampling
/// w_prev is uniform and this is the plain likelihood. Also stores the
/// per-outer log evidence used by outer_weights.
/// Returns the number of outer particles whose inner weights all underflowed.
std::size_t inner_weights(ParticleCloud& cloud, std::span<const double> obs,
                          const ObservationModel& model, double observation_std,
                          const Executor& exec = Executor{});

/// v^(m) proportional to sum_n w_prev^(n,m) p(y | x^(n,m)), i.e. the mean inner
/// likelihood when the inner weights were uniform, from the stored evidence.
/// Returns false on global underflow (uniform fallback).
bool outer_weights(ParticleCloud& cloud);

/// Systematic resampling with a single offset u in [0, 1). Returns `count` ancestor indices.
[[nodiscard]] std::vector<std::uint32_t> systematic_resample(std::span<const double> weights,
                                                             std::size_t count, double u);

/// Outer systematic resampling; each draw carries its theta and whole inner cloud.
/// Outer weights reset to 1/M. Returns the ancestor index of each new slot.
std::vector<std::uint32_t> resample(ParticleCloud& cloud, RngSeed rng);

/// Per-outer systematic resampling of the inner states; inner weights reset to 1/N.
/// Returns outer x inner ancestor indices (within the same outer particle).
std::vector<std::uint32_t> resample_inner(ParticleCloud& cloud, RngSeed rng,
                                          const Executor& exec = Executor{});

}  // namespace cfseq
