/**
 * @file acceptance.cpp
 * @brief Runs every acceptance criterion and prints one PASS/FAIL line each.
 */
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "cfseq/abduction.hpp"
#include "cfseq/experiment.hpp"
#include "oracles/bootstrap_pf.hpp"
#include "oracles/euler.hpp"
#include "oracles/kalman.hpp"

namespace fs = std::filesystem;
using namespace cfseq;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1. RK4 global error ratio on dX/dt = -X over [0, 1].
Outcome rk4_order() {
  const auto start = Clock::now();
  const auto& sys = system_spec(SystemId::LinearDecay);
  auto error_at = [&](double h) {
    const auto steps = static_cast<std::size_t>(std::lround(1.0 / h));
    const auto traj = rollout(sys, {1.0}, {1.0}, steps, StepSize(h));
    return std::abs(traj.states.back()[0] - std::exp(-1.0));
  };
  const double ratio = error_at(0.05) / error_at(0.025);
  const double elapsed = seconds_since(start);
  return {ratio >= 12.0 && ratio <= 20.0 && elapsed < 1.0,
          fmt("error ratio %.3f, %.3fs", ratio, elapsed)};
}

// 2. Nested filter with one known parameter particle against Kalman / RTS.
Outcome kalman_oracle() {
  const auto start = Clock::now();
  const auto& sys = system_spec(SystemId::LinearDecay);
  const double lambda = oracle::lambda_for_multiplier(0.9, 0.05);
  const double a = oracle::rk4_linear_multiplier(lambda, 0.05);
  const std::size_t T = 200, N = 500;
  double worst_f = 0.0, worst_s = 0.0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const std::uint64_t seed = 500 + r;
    RandomStream x0_draw(RngSeed{seed, 99});
    const auto sim = simulate_hidden(sys, {lambda}, {x0_draw.normal()}, T, StepSize(0.05), 1.0,
                                     RngSeed{seed, 1});
    const auto obs = observe(sim.trajectory, ObservationModel::identity(1), 1.0, RngSeed{seed, 2});
    std::vector<double> y;
    for (const auto& o : obs.observations) y.push_back(o[0]);
    const auto k = oracle::kalman_rts(y, a, 1.0, 1.0, 0.0, 1.0);

    FilterConfig cfg;
    cfg.outer_count = 1;
    cfg.inner_count = N;
    cfg.delta = 0.05;
    cfg.process_std = 1.0;
    cfg.observation_std = 1.0;
    cfg.kernel = JitterKernel::none(1);
    const RngSeed filter_seed{seed, 3};
    auto cloud = init_particles_known({lambda}, 1, N, {StateVector{0.0}, 1.0},
                                      substream(filter_seed, stream_tag::kFilterInit));
    const auto h = run_filter(obs, sys, std::move(cloud), cfg, ObservationModel::identity(1),
                              filter_seed);
    const auto filt = filtered_means(h);
    const auto sm = backward_smooth(h, sys, StepSize(0.05), 1.0);
    const auto post = posterior_summary(h, sm, StepSize(0.05));
    double mad_f = 0.0, mad_s = 0.0;
    for (std::size_t t = 0; t <= T; ++t) {
      mad_f += std::abs(filt[t][0] - k.filtered_mean[t]);
      mad_s += std::abs(post.state_mean.states[t][0] - k.smoothed_mean[t]);
    }
    worst_f = std::max(worst_f, mad_f / static_cast<double>(T + 1));
    worst_s = std::max(worst_s, mad_s / static_cast<double>(T + 1));
  }
  const double elapsed = seconds_since(start);
  return {worst_f < 0.15 && worst_s < 0.15 && elapsed < 30.0,
          fmt("worst MAD filter %.4f, smoother %.4f over 20 seeds, %.1fs", worst_f, worst_s, elapsed)};
}

// 3. Smoothed factual estimate on the Lorenz full preset at desk scale.
Outcome factual_quality() {
  const auto start = Clock::now();
  auto c = preset("lorenz-full");
  c.horizon = 500;
  c.outer_particles = 100;
  c.inner_particles = 100;
  c.process_std = 1.0;
  c.observation_std = 1.0;
  PipelineOptions opts;
  opts.write_files = false;
  int good = 0;
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    c.seed = 2000 + r;
    const auto sim = run_simulation(c);
    const auto filt = run_filter_stage(c, sim.observations, opts);
    const auto& x = sim.truth.trajectory.states;
    const auto& est = filt.posterior.state_mean.states;
    double seed_worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      double sq = 0.0;
      for (std::size_t t = 0; t < x.size(); ++t) sq += (est[t][i] - x[t][i]) * (est[t][i] - x[t][i]);
      seed_worst = std::max(seed_worst, std::sqrt(sq / static_cast<double>(x.size())));
    }
    worst = std::max(worst, seed_worst);
    good += seed_worst < 3.0 * c.observation_std;
  }
  const double elapsed = seconds_since(start);
  return {good >= 8 && elapsed < 600.0,
          fmt("%d/10 seeds below %.1f (worst per-dimension RMS %.3f), %.1fs", good,
              3.0 * c.observation_std, worst, elapsed)};
}

// 4. Median divergence onset ordering across the three parameter regimes.
Outcome regime_ordering() {
  const auto start = Clock::now();
  auto c = preset("lorenz-desk");
  PipelineOptions opts;
  opts.write_files = false;

  const auto oracle_run =
      rollout(c.spec(), c.true_parameters(), c.initial_state(), c.horizon, StepSize(c.delta));
  double diameter = 0.0;
  for (const auto& p : oracle_run.states) {
    for (const auto& q : oracle_run.states) diameter = std::max(diameter, phase_distance(p, q));
  }
  const double threshold = 0.1 * diameter;

  int good = 0;
  std::string medians;
  for (std::uint64_t r = 0; r < 10; ++r) {
    c.seed = 1000 + r;
    const auto sim = run_simulation(c);
    const auto filt = run_filter_stage(c, sim.observations, opts);
    const auto noise = run_abduction(c, filt.history, filt.smoothed, opts);
    std::array<double, 3> med{};
    for (ThetaMode mode : {ThetaMode::TrueTheta, ThetaMode::PointEstimate, ThetaMode::PosteriorSample}) {
      c.regime = mode;
      const auto set = run_counterfactual(c, filt.posterior, noise, opts);
      std::vector<double> onsets;
      for (const auto& traj : set.trajectories) {
        const auto series = rmse_t(std::vector<Trajectory>{traj}, *set.reference);
        const auto onset = divergence_onset(series, threshold);
        onsets.push_back(onset ? static_cast<double>(*onset) : static_cast<double>(c.horizon + 1));
      }
      med[static_cast<std::size_t>(mode)] = median(onsets);
    }
    c.regime = ThetaMode::TrueTheta;
    good += med[0] >= med[1] && med[1] >= med[2];
    medians += fmt(" %g/%g/%g", med[0], med[1], med[2]);
  }
  return {good >= 7, fmt("%d/10 ordered, threshold %.3f, medians%s, %.1fs", good, threshold,
                         medians.c_str(), seconds_since(start))};
}

// 5. Logistic counterfactuals settle: late RMSE below early RMSE, terminal mean near K.
Outcome logistic_baseline() {
  const auto start = Clock::now();
  auto c = preset("logistic-desk");
  PipelineOptions opts;
  opts.write_files = false;
  int good = 0;
  double worst_terminal = 0.0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    c.seed = 3000 + r;
    const auto run = run_pipeline(c, opts);
    const auto& smooth = run.metrics.rmse_smoothed.values;
    const std::size_t tenth = smooth.size() / 10;
    double early = 0.0, late = 0.0;
    for (std::size_t t = 0; t < tenth; ++t) {
      early += smooth[t];
      late += smooth[smooth.size() - 1 - t];
    }
    double terminal = 0.0;
    for (const auto& traj : run.ensemble.trajectories) terminal += traj.states.back()[0];
    terminal /= static_cast<double>(run.ensemble.size());
    const double miss = std::abs(terminal - c.theta_true[1]);
    worst_terminal = std::max(worst_terminal, miss);
    good += late < early && miss < 5.0;
  }
  return {good == 10, fmt("%d/10 seeds settle, worst |mean x_T - K| %.4f, %.1fs", good,
                          worst_terminal, seconds_since(start))};
}

// 6. Replaying the recorded noise with zero spread reproduces the truth.
Outcome identity_counterfactual() {
  auto c = preset("lorenz-desk");
  c.intervention_delta = 0.0;
  c.regime = ThetaMode::TrueTheta;
  const auto sim = run_simulation(c);
  NoisePosterior recorded;
  for (std::size_t t = 1; t <= c.horizon; ++t) {
    recorded.mu.push_back(sim.truth.noise[t]);
    recorded.sigma.push_back(StateVector::zeros(3));
  }
  PipelineOptions opts;
  opts.write_files = false;
  opts.noise_override = recorded;
  const auto run = run_pipeline(c, opts);
  double worst = 0.0;
  for (const auto& traj : run.ensemble.trajectories) {
    for (std::size_t t = 0; t <= c.horizon; ++t) {
      for (std::size_t i = 0; i < 3; ++i) {
        worst = std::max(worst, std::abs(traj.states[t][i] - sim.truth.trajectory.states[t][i]));
      }
    }
  }
  return {worst < 1e-9, fmt("max deviation %.3e over %zu trajectories", worst, run.ensemble.size())};
}

// 7. Randomized invariant suites, 10,000 cases each.
Outcome invariants() {
  constexpr int kCases = 10000;
  RandomStream rs(RngSeed{7, 7});
  auto count_in = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rs.uniform() * static_cast<double>(hi - lo + 1));
  };
  int fail_norm = 0, fail_var = 0, fail_resample = 0, fail_rmse = 0;

  for (int k = 0; k < kCases; ++k) {
    const std::size_t n = count_in(1, 200);
    std::vector<double> logw(n), w(n);
    const double scale = std::pow(10.0, rs.uniform() * 6.0 - 1.0);
    for (auto& v : logw) v = scale * rs.normal();
    if (rs.uniform() < 0.1) logw[0] = -INFINITY;
    normalize_log_weights(logw, w);
    double sum = 0.0;
    for (double v : w) sum += v;
    fail_norm += std::abs(sum - 1.0) > 1e-9;
  }

  // Weighted population variance from abduction vs a one-pass (West) update.
  const auto& decay = system_spec(SystemId::LinearDecay);
  for (int k = 0; k < kCases; ++k) {
    const std::size_t n = count_in(2, 30);
    const double lambda = 0.1 + rs.uniform();
    const double prev = 5.0 * rs.normal();
    const double pred = rk4_step(decay, {prev}, {lambda}, StepSize(0.05))[0];
    FilterHistory h(2, 1, n, 1, 1);
    h.theta = {lambda, lambda};
    std::vector<double> raw(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h.states[i] = prev;
      h.states[n + i] = pred + std::pow(10.0, rs.uniform() * 4.0 - 2.0) * rs.normal();
      raw[i] = rs.uniform() + 1e-3;
      total += raw[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      h.inner_weights[i] = 1.0 / static_cast<double>(n);
      h.inner_weights[n + i] = raw[i] / total;
    }
    h.outer_weights = {1.0, 1.0};
    const auto sm = backward_smooth(h, decay, StepSize(0.05), 1.0);
    const auto noise = abduct_noise(h, sm, decay, StepSize(0.05));

    double wsum = 0.0, mean = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = sm.w(1, 0, i);
      if (wi == 0.0) continue;
      const double r = h.states[n + i] - pred;
      wsum += wi;
      const double delta = r - mean;
      mean += (wi / wsum) * delta;
      s += wi * delta * (r - mean);
    }
    const double var = s / wsum;
    const double rel = std::abs(noise.sigma[0][0] - var) / std::max(var, 1e-300);
    fail_var += rel > 1e-10;
  }

  // Systematic resampling: expected offspring counts equal N w_i. The expectation
  // over the offset is integrated with a K-point midpoint rule, exact to 1/K.
  constexpr int kOffsets = 400;
  for (int k = 0; k < kCases; ++k) {
    const std::size_t n = count_in(2, 40);
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& v : w) total += (v = -std::log(rs.uniform()));
    for (auto& v : w) v /= total;
    std::vector<double> offspring(n, 0.0);
    for (int j = 0; j < kOffsets; ++j) {
      const double u = (j + 0.5) / kOffsets;
      for (auto idx : systematic_resample(w, n, u)) offspring[idx] += 1.0 / kOffsets;
    }
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = static_cast<double>(n) * w[i];
      ok = ok && std::abs(offspring[i] - expected) <= 0.05 * expected + 1.0 / kOffsets;
    }
    fail_resample += !ok;
  }

  // RMSE closed forms: members at constant offsets c_i from a constant reference.
  for (int k = 0; k < kCases; ++k) {
    const std::size_t members = count_in(1, 8);
    const std::size_t d = count_in(1, 3);
    const std::size_t T = count_in(0, 5);
    std::vector<double> base(d);
    for (auto& v : base) v = 10.0 * rs.normal();
    const StateVector ref_state(std::span<const double>(base.data(), d));
    const Trajectory ref{std::vector<StateVector>(T + 1, ref_state), StepSize(1.0)};
    std::vector<Trajectory> ens;
    double sq = 0.0;
    for (std::size_t m = 0; m < members; ++m) {
      std::vector<double> x(base);
      for (auto& v : x) {
        const double off = rs.normal();
        v += off;
        sq += off * off;
      }
      ens.push_back(Trajectory{
          std::vector<StateVector>(T + 1, StateVector(std::span<const double>(x.data(), d))),
          StepSize(1.0)});
    }
    const double expected = std::sqrt(sq / static_cast<double>(members));
    const auto series = rmse_t(ens, ref);
    bool ok = series.values.size() == T + 1;
    for (double v : series.values) ok = ok && std::abs(v - expected) <= 1e-9 * std::max(1.0, expected);
    fail_rmse += !ok;
  }

  const bool pass = fail_norm == 0 && fail_var == 0 && fail_resample == 0 && fail_rmse == 0;
  return {pass, fmt("failures: normalization %d, variance %d, resampling %d, rmse %d (of %d each)",
                    fail_norm, fail_var, fail_resample, fail_rmse, kCases)};
}

// 8. CLI determinism across repeated runs and thread counts.
Outcome cli_determinism(const fs::path& cli, const fs::path& work) {
  if (cli.empty()) return {false, "no --cli binary given"};
  fs::remove_all(work / "c8");
  const fs::path root = work / "c8";
  fs::create_directories(root);
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + cli.string() + "\" run --no-plots " + args + " > \"" +
                            (root / "log.txt").string() + "\" 2>&1";
    return std::system(cmd.c_str());
  };
  auto preset_cfg = preset("lorenz-desk");
  preset_cfg.horizon = 300;
  preset_cfg.output_dir = (root / "seed_run").string();
  save_config(root / "config.json", preset_cfg);
  if (run("--config \"" + (root / "config.json").string() + "\"") != 0) return {false, "seed run failed"};
  const fs::path manifest = root / "seed_run" / std::string(files::kManifest);

  const std::vector<std::pair<std::string, std::string>> variants{
      {"a", "--threads 1"}, {"b", "--threads 1"}, {"c", "--threads 8"}};
  for (const auto& [name, flags] : variants) {
    if (run("--config \"" + manifest.string() + "\" --out \"" + (root / name).string() + "\" " + flags) != 0) {
      return {false, "run " + name + " failed"};
    }
  }
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    if (entry.path().extension() != ".csv") continue;
    const auto name = entry.path().filename();
    const auto a = slurp(entry.path());
    for (const char* other : {"b", "c"}) {
      if (!fs::exists(root / other / name) || slurp(root / other / name) != a) {
        return {false, name.string() + " differs in run " + other};
      }
    }
    if (slurp(root / "seed_run" / name) != a) return {false, name.string() + " differs from the seed run"};
    ++compared;
  }
  return {compared >= 10, fmt("%zu csv files byte-identical across 4 runs", compared)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfseq acceptance checks"};
  std::string cli;
  std::string work = (fs::temp_directory_path() / "cfseq_acceptance").string();
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the cfseq executable");
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"rk4 order", rk4_order},
      {"kalman oracle", kalman_oracle},
      {"factual estimation quality", factual_quality},
      {"divergence regime ordering", regime_ordering},
      {"logistic baseline", logistic_baseline},
      {"identity counterfactual", identity_counterfactual},
      {"weight and moment invariants", invariants},
      {"determinism", [&] { return cli_determinism(cli, work); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failures += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << out.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
