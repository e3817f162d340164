#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "cfseq/error.hpp"
#include "cfseq/nested_filter.hpp"

namespace cfseq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double w) noexcept { return w > 0.0 ? std::log(w) : kNegInf; }

// Per-lineage scratch space, reused across time steps.
struct BackwardScratch {
  std::vector<double> predicted;   // inner x dim
  std::vector<char> usable;        // inner
  std::vector<double> log_f;       // inner x successors
  std::vector<double> log_filter;  // inner
  std::vector<double> term;        // successors
  std::vector<double> log_out;     // inner
  std::vector<std::size_t> successors;
};

// Copies the filtered inner weights of snapshot (t, a) into `out`.
void filtered_inner(const FilterHistory& h, std::size_t t, std::size_t a, std::span<double> out) {
  for (std::size_t n = 0; n < h.inner; ++n) out[n] = h.inner_weight(t, a, n);
}

// One backward step for one lineage. Returns false when the recursion underflowed.
bool backward_step(const FilterHistory& h, const SystemSpec& system, double delta,
                   double process_std, SmootherForm form, std::size_t stride, std::size_t t,
                   std::size_t a_prev, std::size_t a_next, std::span<const double> next_smoothed,
                   std::span<double> out, BackwardScratch& s) {
  const std::size_t N = h.inner;
  const std::size_t d = h.dim;
  const auto theta = h.theta_at(t + 1, a_next);

  s.successors.clear();
  for (std::size_t k = 0; k < N; k += stride) {
    if (next_smoothed[k] > 0.0) s.successors.push_back(k);
  }
  const std::size_t K = s.successors.size();
  if (K == 0) return false;

  s.predicted.resize(N * d);
  s.usable.assign(N, 0);
  s.log_filter.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    const double w = h.inner_weight(t, a_prev, n);
    s.log_filter[n] = safe_log(w);
    const auto x = h.state_at(t, a_prev, n);
    if (w <= 0.0 || !std::isfinite(x[0])) continue;
    const std::span<double> fx(s.predicted.data() + n * d, d);
    rk4_step_into(system.id, x, theta, delta, fx);
    s.usable[n] = std::all_of(fx.begin(), fx.end(), [](double v) { return std::isfinite(v); });
  }

  const double inv_two_var = 1.0 / (2.0 * process_std * process_std);
  s.log_f.assign(N * K, kNegInf);
  for (std::size_t n = 0; n < N; ++n) {
    if (!s.usable[n]) continue;
    const double* fx = s.predicted.data() + n * d;
    for (std::size_t j = 0; j < K; ++j) {
      const auto x_next = h.state_at(t + 1, a_next, s.successors[j]);
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double r = x_next[i] - fx[i];
        sq += r * r;
      }
      s.log_f[n * K + j] = -sq * inv_two_var;
    }
  }

  s.term.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    double log_next = std::log(next_smoothed[s.successors[j]]);
    if (form == SmootherForm::Marginal) {
      // log sum_l w_t(l) f(x_{t+1}^k | x_t^l)
      double peak = kNegInf;
      for (std::size_t n = 0; n < N; ++n) peak = std::max(peak, s.log_filter[n] + s.log_f[n * K + j]);
      if (!std::isfinite(peak)) {
        s.term[j] = kNegInf;
        continue;
      }
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) acc += std::exp(s.log_filter[n] + s.log_f[n * K + j] - peak);
      log_next -= peak + std::log(acc);
    }
    s.term[j] = log_next;
  }

  s.log_out.resize(N);
  for (std::size_t n = 0; n < N; ++n) {
    if (!std::isfinite(s.log_filter[n])) {
      s.log_out[n] = kNegInf;
      continue;
    }
    double peak = kNegInf;
    for (std::size_t j = 0; j < K; ++j) peak = std::max(peak, s.term[j] + s.log_f[n * K + j]);
    if (!std::isfinite(peak)) {
      s.log_out[n] = kNegInf;
      continue;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < K; ++j) acc += std::exp(s.term[j] + s.log_f[n * K + j] - peak);
    s.log_out[n] = s.log_filter[n] + peak + std::log(acc);
  }
  return normalize_log_weights(s.log_out, out);
}

}  // namespace

SmoothedWeights backward_smooth(const FilterHistory& history, const SystemSpec& system,
                                StepSize delta, double process_std, const SmootherOptions& options,
                                const Executor& exec) {
  history.validate();
  check_compatible(system, history.dim, history.params);
  if (options.stride < 1) throw std::invalid_argument("smoother stride must be >= 1");
  if (!(process_std >= 0.0)) throw std::invalid_argument("process_std must be >= 0");

  const std::size_t T = history.horizon();
  const std::size_t M = history.outer;
  const std::size_t N = history.inner;

  SmoothedWeights out;
  out.steps = history.steps;
  out.outer = M;
  out.inner = N;
  out.lineage = history.lineages();
  out.w_tilde.assign(history.steps * M * N, 0.0);
  out.v_tilde.assign(history.steps * M, 0.0);

  // Per-lineage inner weights, normalized within the lineage.
  std::vector<double> inner_smoothed(history.steps * M * N, 0.0);
  std::vector<std::size_t> fallbacks(M, 0);
  const auto slot = [&](std::size_t t, std::size_t m) {
    return std::span<double>(inner_smoothed.data() + (t * M + m) * N, N);
  };

  exec.for_each(M, [&](std::size_t m) {
    BackwardScratch scratch;
    filtered_inner(history, T, m, slot(T, m));
    for (std::size_t t = T; t-- > 0;) {
      const std::size_t a_prev = out.ancestor(t, m);
      const std::size_t a_next = out.ancestor(t + 1, m);
      bool ok = process_std > 0.0 &&
                backward_step(history, system, delta.value(), process_std, options.form,
                              options.stride, t, a_prev, a_next, slot(t + 1, m), slot(t, m), scratch);
      if (!ok) {
        filtered_inner(history, t, a_prev, slot(t, m));
        ++fallbacks[m];
      }
    }
  });
  for (auto f : fallbacks) out.fallbacks += f;

  // Lineage masses are conserved by the marginal recursion, so the outer
  // smoothed weight of every lineage equals its final filtered weight.
  for (std::size_t t = 0; t < history.steps; ++t) {
    double total = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const double v = history.outer_weight(T, m);
      out.v_tilde[t * M + m] = v;
      const auto inner = slot(t, m);
      for (std::size_t n = 0; n < N; ++n) {
        const double w = v * inner[n];
        out.w_tilde[(t * M + m) * N + n] = w;
        total += w;
      }
    }
    if (total > 0.0) {
      for (std::size_t i = t * M * N; i < (t + 1) * M * N; ++i) out.w_tilde[i] /= total;
    }
    double vtotal = 0.0;
    for (std::size_t m = 0; m < M; ++m) vtotal += out.v_tilde[t * M + m];
    for (std::size_t m = 0; m < M; ++m) out.v_tilde[t * M + m] /= vtotal;
  }
  return out;
}

PosteriorSummary posterior_summary(const FilterHistory& history, const SmoothedWeights& smoothed,
                                   StepSize delta, ThetaAveraging averaging) {
  if (smoothed.steps != history.steps || smoothed.outer != history.outer ||
      smoothed.inner != history.inner) {
    throw DimensionError("smoothed weights do not match the filter history");
  }
  const std::size_t M = history.outer;
  const std::size_t p = history.params;
  const std::size_t T = history.horizon();

  PosteriorSummary summary{Trajectory{{}, delta}, {}, {}};
  summary.state_mean.states.reserve(history.steps);
  std::array<double, kMaxStateDim> acc{};
  for (std::size_t t = 0; t < history.steps; ++t) {
    acc.fill(0.0);
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t a = smoothed.ancestor(t, m);
      for (std::size_t n = 0; n < history.inner; ++n) {
        const double w = smoothed.w(t, m, n);
        if (w == 0.0) continue;
        const auto x = history.state_at(t, a, n);
        for (std::size_t i = 0; i < history.dim; ++i) acc[i] += w * x[i];
      }
    }
    summary.state_mean.states.emplace_back(std::span<const double>(acc.data(), history.dim));
  }

  std::vector<double> mean(p, 0.0);
  std::vector<double> var(p, 0.0);
  const auto accumulate = [&](std::size_t t, double scale, bool second_moment) {
    for (std::size_t m = 0; m < M; ++m) {
      const double v = smoothed.v(t, m) * scale;
      if (v == 0.0) continue;
      const auto theta = history.theta_at(t, smoothed.ancestor(t, m));
      for (std::size_t i = 0; i < p; ++i) {
        if (second_moment) {
          const double r = theta[i] - mean[i];
          var[i] += v * r * r;
        } else {
          mean[i] += v * theta[i];
        }
      }
    }
  };
  if (averaging == ThetaAveraging::FinalTime || T == 0) {
    accumulate(T, 1.0, false);
    accumulate(T, 1.0, true);
  } else {
    const double scale = 1.0 / static_cast<double>(T);
    for (std::size_t t = 1; t <= T; ++t) accumulate(t, scale, false);
    for (std::size_t t = 1; t <= T; ++t) accumulate(t, scale, true);
  }
  summary.theta_mean = ParameterVector(mean);
  summary.theta_std.resize(p);
  for (std::size_t i = 0; i < p; ++i) summary.theta_std[i] = std::sqrt(std::max(var[i], 0.0));
  return summary;
}

}  // namespace cfseq
