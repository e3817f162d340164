#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "cfseq/artifacts.hpp"
#include "cfseq/error.hpp"
#include "temp_dir.hpp"

using namespace cfseq;
using cfseq::test::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("format_double round trips") {
  RandomStream s(RngSeed{1, 1});
  for (int k = 0; k < 2000; ++k) {
    const double v = s.normal() * std::pow(10.0, s.uniform() * 40.0 - 20.0);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(std::strtod(format_double(std::numeric_limits<double>::denorm_min()).c_str(), nullptr) ==
        std::numeric_limits<double>::denorm_min());
}

TEST_CASE("trajectory csv round trip is bit exact") {
  TempDir dir("traj");
  const auto sim = simulate_hidden(system_spec(SystemId::Lorenz), {10, 28, 8.0 / 3.0}, {1, 1, 1}, 100,
                                   StepSize(0.05), 1.0, RngSeed{2, 2});
  write_trajectory_csv(dir / "truth.csv", sim.trajectory);
  const auto back = read_trajectory_csv(dir / "truth.csv", StepSize(0.05));
  CHECK(back.states == sim.trajectory.states);
  CHECK(slurp(dir / "truth.csv").rfind("t,x_1,x_2,x_3\n", 0) == 0);

  const auto obs = observe(sim.trajectory, ObservationModel::identity(3), 2.0, RngSeed{2, 3});
  write_observations_csv(dir / "obs.csv", obs);
  CHECK(read_observations_csv(dir / "obs.csv").observations == obs.observations);
}

TEST_CASE("noise posterior and rmse round trips") {
  TempDir dir("noise");
  NoisePosterior noise{{StateVector{0.1, -0.2}, StateVector{1e-17, 3.0}},
                       {StateVector{0.0, 0.5}, StateVector{2.25, 1e-300}}};
  write_noise_posterior_csv(dir / "n.csv", noise);
  const auto back = read_noise_posterior_csv(dir / "n.csv");
  CHECK(back.mu == noise.mu);
  CHECK(back.sigma == noise.sigma);
  const auto table = read_csv(dir / "n.csv");
  CHECK(table.rows.front().front() == 1.0);

  RmseSeries raw{{0.0, 0.5, 1.25}, std::nullopt};
  RmseSeries smooth{{0.25, 0.5, 0.875}, 3};
  write_rmse_csv(dir / "r.csv", raw, &smooth);
  CHECK(read_rmse_csv(dir / "r.csv").values == raw.values);
  CHECK(read_rmse_csv(dir / "r.csv", "rmse_smoothed").values == smooth.values);
  RmseSeries short_series{{1.0}, std::nullopt};
  CHECK_THROWS_AS(write_rmse_csv(dir / "bad.csv", raw, &short_series), DimensionError);
}

TEST_CASE("ensemble csv round trip") {
  TempDir dir("ens");
  CfTrajectorySet set;
  set.trajectories = {Trajectory{{StateVector{1.0}, StateVector{2.0}, StateVector{3.0}}, StepSize(0.5)},
                      Trajectory{{StateVector{-1.0}, StateVector{0.5}, StateVector{7.0}}, StepSize(0.5)}};
  set.thetas = {ParameterVector{0.5, 100}, ParameterVector{0.6, 90}};
  set.failed_at = {std::nullopt, std::nullopt};
  write_ensemble_csv(dir / "e.csv", set);
  const auto back = read_ensemble_csv(dir / "e.csv", StepSize(0.5));
  REQUIRE(back.size() == 2);
  CHECK(back[0].states == set.trajectories[0].states);
  CHECK(back[1].states == set.trajectories[1].states);

  write_theta_table_csv(dir / "th.csv", set.thetas, {"r", "K"});
  const auto th = read_csv(dir / "th.csv");
  CHECK(th.header == std::vector<std::string>{"traj_id", "r", "K"});
  CHECK(th.rows[1] == std::vector<double>{1, 0.6, 90});
}

TEST_CASE("csv errors carry file and line") {
  TempDir dir("err");
  spit(dir / "bad.csv", "t,x_1\n0,1.5\n1,abc\n");
  try {
    (void)read_trajectory_csv(dir / "bad.csv", StepSize(1.0));
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("bad.csv:3") != std::string::npos);
  }
  spit(dir / "short.csv", "t,x_1,x_2\n0,1\n");
  try {
    (void)read_csv(dir / "short.csv");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("short.csv:2") != std::string::npos);
  }
  CHECK_THROWS_AS((void)read_csv(dir / "missing.csv"), IoError);
  spit(dir / "empty.csv", "");
  CHECK_THROWS_AS((void)read_csv(dir / "empty.csv"), IoError);
  CHECK_THROWS_AS((void)read_csv(dir / "bad.csv").column("nope"), IoError);
}

TEST_CASE("filter history binary round trip") {
  TempDir dir("hist");
  const auto& sys = system_spec(SystemId::Lorenz);
  const auto sim = simulate_hidden(sys, {10, 28, 8.0 / 3.0}, {1, 1, 1}, 20, StepSize(0.05), 1.0,
                                   RngSeed{3, 3});
  const auto obs = observe(sim.trajectory, ObservationModel::identity(3), 1.0, RngSeed{3, 4});
  const ParameterPrior prior({{5, 15}, {20, 35}, {2, 4}});
  FilterConfig c;
  c.outer_count = 4;
  c.inner_count = 5;
  c.kernel = JitterKernel::shrinking(prior, 4);
  const auto h = run_filter(obs, sys, prior, {StateVector{1, 1, 1}, 0.0}, c,
                            ObservationModel::identity(3), RngSeed{3, 5});
  const auto sm = backward_smooth(h, sys, StepSize(0.05), 1.0);

  write_history(dir / "h.bin", h, nullptr);
  const auto plain = read_history(dir / "h.bin");
  CHECK_FALSE(plain.smoothed.has_value());
  CHECK(plain.history.states == h.states);
  CHECK(plain.history.theta == h.theta);
  CHECK(plain.history.parent_inner == h.parent_inner);
  CHECK(plain.history.diagnostics == h.diagnostics);

  write_history(dir / "hs.bin", h, &sm);
  const auto full = read_history(dir / "hs.bin");
  REQUIRE(full.smoothed.has_value());
  CHECK(full.smoothed->w_tilde == sm.w_tilde);
  CHECK(full.smoothed->v_tilde == sm.v_tilde);
  CHECK(full.smoothed->lineage == sm.lineage);
  CHECK(full.smoothed->fallbacks == sm.fallbacks);

  spit(dir / "junk.bin", "not a history");
  CHECK_THROWS_AS((void)read_history(dir / "junk.bin"), IoError);
  const auto bytes = slurp(dir / "h.bin");
  spit(dir / "trunc.bin", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS((void)read_history(dir / "trunc.bin"), IoError);
}
