#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cfseq/error.hpp"
#include "cfseq/particle_cloud.hpp"

using namespace cfseq;

namespace {

const ParameterPrior kLorenzPrior({{5, 15}, {20, 35}, {2, 4}});

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("prior validation") {
  CHECK_THROWS_AS(ParameterPrior({{1.0, 1.0}}), ConfigError);
  CHECK_THROWS_AS(ParameterPrior({{2.0, 1.0}}), ConfigError);
  CHECK(kLorenzPrior.contains(std::array<double, 3>{10, 28, 3}));
  CHECK_FALSE(kLorenzPrior.contains(std::array<double, 3>{16, 28, 3}));
}

TEST_CASE("single particle cloud") {
  const auto cloud = init_particles(kLorenzPrior, 1, 1, {StateVector{1, 1, 1}, 0.0}, RngSeed{1, 0});
  CHECK(cloud.inner_weights[0] == 1.0);
  CHECK(cloud.outer_weights[0] == 1.0);
  CHECK(cloud.state(0, 0)[0] == 1.0);
}

TEST_CASE("init draws from the table-1 prior") {
  const auto cloud = init_particles(kLorenzPrior, 200, 200, {StateVector{1, 1, 1}, 0.0}, RngSeed{2, 0});
  for (std::size_t m = 0; m < 200; ++m) CHECK(kLorenzPrior.contains(cloud.theta_of(m)));
  CHECK(sum(cloud.outer_weights) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t m = 0; m < 200; ++m) {
    CHECK(sum(cloud.inner_weights_of(m)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("uniform prior sample mean") {
  const ParameterPrior prior({{5, 15}});
  const auto cloud = init_particles(prior, 10000, 1, {StateVector{0.0}, 0.0}, RngSeed{3, 0});
  const double mean = sum(cloud.theta) / 10000.0;
  CHECK(std::abs(mean - 10.0) < 0.2);
}

TEST_CASE("jitter") {
  auto cloud = init_particles(kLorenzPrior, 50, 2, {StateVector{1, 1, 1}, 0.0}, RngSeed{4, 0});
  const auto before = cloud.theta;
  jitter(cloud, JitterKernel::none(3), RngSeed{4, 1});
  CHECK(cloud.theta == before);

  JitterKernel wide{{5.0, 5.0, 5.0}, kLorenzPrior};
  jitter(cloud, wide, RngSeed{4, 2});
  for (std::size_t m = 0; m < 50; ++m) CHECK(kLorenzPrior.contains(cloud.theta_of(m)));

  CHECK_THROWS_AS(jitter(cloud, JitterKernel::none(2), RngSeed{}), DimensionError);
}

TEST_CASE("jitter spread matches the kernel std") {
  const std::size_t M = 10000;
  auto cloud = init_particles_known(ParameterVector{0.0}, M, 1, {StateVector{0.0}, 0.0}, RngSeed{5, 0});
  jitter(cloud, JitterKernel{{0.1}, std::nullopt}, RngSeed{5, 1});
  double mean = sum(cloud.theta) / M, sq = 0.0;
  for (double v : cloud.theta) sq += (v - mean) * (v - mean);
  CHECK(std::abs(std::sqrt(sq / M) - 0.1) < 0.005);
}

TEST_CASE("shrinking kernel width") {
  const auto k = JitterKernel::shrinking(kLorenzPrior, 100, 0.05);
  CHECK(k.std[0] == doctest::Approx(0.05 * 10.0 / 10.0));
  CHECK(k.std[1] == doctest::Approx(0.05 * 15.0 / 10.0));
  REQUIRE(k.clamp.has_value());
}

TEST_CASE("reflection into bounds") {
  const ParameterBounds b{0.0, 1.0};
  CHECK(reflect_into(0.5, b) == 0.5);
  CHECK(reflect_into(1.25, b) == doctest::Approx(0.75));
  CHECK(reflect_into(-0.25, b) == doctest::Approx(0.25));
  CHECK(reflect_into(2.5, b) == doctest::Approx(0.5));
  for (double v = -10.0; v < 10.0; v += 0.137) {
    const double r = reflect_into(v, b);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("propagate") {
  const auto& lorenz = system_spec(SystemId::Lorenz);
  const ParameterVector theta{10, 28, 8.0 / 3.0};
  auto one = init_particles_known(theta, 1, 1, {StateVector{1, 2, 3}, 0.0}, RngSeed{});
  CHECK(propagate(one, lorenz, StepSize(0.05), 0.0, RngSeed{6, 0}) == 0);
  const auto expected = rk4_step(lorenz, {1, 2, 3}, theta, StepSize(0.05));
  for (std::size_t i = 0; i < 3; ++i) CHECK(one.state(0, 0)[i] == expected[i]);

  auto fixed = init_particles_known(theta, 4, 5, {StateVector{0, 0, 0}, 0.0}, RngSeed{});
  const auto before = fixed.states;
  (void)propagate(fixed, lorenz, StepSize(0.05), 0.0, RngSeed{6, 1});
  CHECK(fixed.states == before);
}

TEST_CASE("propagated displacement has the process variance") {
  const auto& lorenz = system_spec(SystemId::Lorenz);
  const ParameterVector theta{10, 28, 8.0 / 3.0};
  auto cloud = init_particles_known(theta, 200, 200, {StateVector{1, 1, 1}, 0.0}, RngSeed{});
  (void)propagate(cloud, lorenz, StepSize(0.05), 1.0, RngSeed{7, 0});
  const auto image = rk4_step(lorenz, {1, 1, 1}, theta, StepSize(0.05));
  for (std::size_t i = 0; i < 3; ++i) {
    double sq = 0.0;
    for (std::size_t m = 0; m < 200; ++m) {
      for (std::size_t n = 0; n < 200; ++n) {
        const double r = cloud.state(m, n)[i] - image[i];
        sq += r * r;
      }
    }
    CHECK(std::abs(sq / 40000.0 - 1.0) < 0.05);
  }
}

TEST_CASE("propagate flags non-finite particles") {
  const auto& logistic = system_spec(SystemId::LogisticGrowth);
  auto cloud = init_particles_known(ParameterVector{5.0, 1.0}, 1, 2, {StateVector{1e200}, 0.0}, RngSeed{});
  CHECK(propagate(cloud, logistic, StepSize(1.0), 0.0, RngSeed{}) == 2);
  CHECK(std::isnan(cloud.state(0, 0)[0]));
  const std::array<double, 1> y{1.0};
  cloud.inner_weights_of(0)[0] = 0.5;
  CHECK(inner_weights(cloud, y, ObservationModel::identity(1), 1.0) == 1);
  CHECK(sum(cloud.inner_weights_of(0)) == doctest::Approx(1.0));
}

TEST_CASE("gaussian log-likelihood") {
  const auto id1 = ObservationModel::identity(1);
  const std::array<double, 1> y{2.0};
  CHECK(gaussian_log_likelihood(y, y, id1, 1.0) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK(gaussian_log_likelihood(y, std::array<double, 1>{1.0}, id1, 1.0) ==
        gaussian_log_likelihood(y, std::array<double, 1>{3.0}, id1, 1.0));
  const auto id3 = ObservationModel::identity(3);
  const std::array<double, 3> obs{0, 0, 0};
  const double far = gaussian_log_likelihood(obs, std::array<double, 3>{0, 6, 0}, id3, 2.0);
  const double near = gaussian_log_likelihood(obs, obs, id3, 2.0);
  CHECK(far - near == doctest::Approx(-4.5));
  CHECK_THROWS_AS((void)gaussian_log_likelihood(y, y, id1, 0.0), std::invalid_argument);
}

TEST_CASE("inner weights") {
  const auto id1 = ObservationModel::identity(1);
  const std::array<double, 1> y{0.0};

  auto single = init_particles_known(ParameterVector{1.0}, 1, 1, {StateVector{5.0}, 0.0}, RngSeed{});
  CHECK(inner_weights(single, y, id1, 1.0) == 0);
  CHECK(single.inner_weights[0] == 1.0);

  ParticleCloud two(1, 2, 1, 1);
  two.states = {0.0, 4.0};
  (void)inner_weights(two, y, id1, 1.0);
  CHECK(two.inner_weights[0] > two.inner_weights[1]);
  CHECK(two.inner_weights[0] + two.inner_weights[1] == doctest::Approx(1.0));

  ParticleCloud three(1, 3, 1, 1);
  three.states = {-1.0, 0.5, 2.0};
  (void)inner_weights(three, y, id1, 1.5);
  std::array<double, 3> dens{};
  for (std::size_t n = 0; n < 3; ++n) dens[n] = std::exp(-0.5 * std::pow(three.states[n] / 1.5, 2));
  const double total = dens[0] + dens[1] + dens[2];
  for (std::size_t n = 0; n < 3; ++n) CHECK(three.inner_weights[n] == doctest::Approx(dens[n] / total));
}

TEST_CASE("inner weights fall back to uniform on underflow") {
  ParticleCloud cloud(1, 3, 1, 1);
  cloud.states = {1e6, 2e6, 3e6};
  cloud.inner_weights = {0.0, 0.0, 0.0};
  CHECK(inner_weights(cloud, std::array<double, 1>{0.0}, ObservationModel::identity(1), 1.0) == 1);
  for (double w : cloud.inner_weights) CHECK(w == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("outer weights") {
  ParticleCloud one(1, 2, 1, 1);
  one.log_evidence = {-1e4};
  CHECK(outer_weights(one));
  CHECK(one.outer_weights[0] == 1.0);

  ParticleCloud two(2, 3, 1, 1);
  two.states = {0.1, 0.2, 0.3, 0.1, 0.2, 0.3};
  (void)inner_weights(two, std::array<double, 1>{0.0}, ObservationModel::identity(1), 1.0);
  CHECK(outer_weights(two));
  CHECK(two.outer_weights[0] == doctest::Approx(0.5));

  two.log_evidence = {std::log(0.2), std::log(0.8)};
  CHECK(outer_weights(two));
  CHECK(two.outer_weights[0] == doctest::Approx(0.2));
  CHECK(two.outer_weights[1] == doctest::Approx(0.8));

  two.log_evidence = {-INFINITY, -INFINITY};
  CHECK_FALSE(outer_weights(two));
  CHECK(two.outer_weights[0] == 0.5);
}

TEST_CASE("log-space helpers") {
  const std::array<double, 2> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  std::array<double, 2> out{};
  CHECK(normalize_log_weights(std::array<double, 2>{-1e5, -1e5 + std::log(3.0)}, out));
  CHECK(out[1] == doctest::Approx(0.75));
}

TEST_CASE("systematic resampling") {
  const std::vector<double> first{1.0, 0.0, 0.0, 0.0};
  for (auto i : systematic_resample(first, 4, 0.7)) CHECK(i == 0);

  const std::vector<double> uniform(6, 1.0 / 6.0);
  auto idx = systematic_resample(uniform, 6, 0.3);
  std::sort(idx.begin(), idx.end());
  for (std::uint32_t i = 0; i < 6; ++i) CHECK(idx[i] == i);

  const std::vector<double> tail{0.5, 0.5, 0.0};
  for (double u : {1e-12, 0.5, 1.0 - 1e-12}) {
    for (auto i : systematic_resample(tail, 3, u)) CHECK(i < 2);
  }
  CHECK_THROWS((void)systematic_resample(std::vector<double>{0.0, 0.0}, 2, 0.5));
}

TEST_CASE("resampling offspring are unbiased") {
  const std::vector<double> w{0.05, 0.15, 0.3, 0.1, 0.4};
  std::vector<double> counts(w.size(), 0.0);
  RandomStream s(RngSeed{8, 0});
  const int trials = 10000;
  for (int k = 0; k < trials; ++k) {
    for (auto i : systematic_resample(w, w.size(), s.uniform())) counts[i] += 1.0;
  }
  for (std::size_t m = 0; m < w.size(); ++m) {
    const double expected = static_cast<double>(w.size()) * w[m];
    CHECK(std::abs(counts[m] / trials - expected) < 0.05 * expected);
  }
}

TEST_CASE("cloud resampling carries theta and inner clouds") {
  ParticleCloud cloud(2, 2, 1, 1);
  cloud.theta = {1.0, 2.0};
  cloud.states = {10.0, 11.0, 20.0, 21.0};
  cloud.outer_weights = {0.0, 1.0};
  const auto anc = resample(cloud, RngSeed{9, 0});
  CHECK(anc == std::vector<std::uint32_t>{1, 1});
  CHECK(cloud.theta == std::vector<double>{2.0, 2.0});
  CHECK(cloud.states == std::vector<double>{20.0, 21.0, 20.0, 21.0});
  CHECK(cloud.outer_weights == std::vector<double>{0.5, 0.5});

  cloud.inner_weights = {1.0, 0.0, 0.0, 1.0};
  const auto inner = resample_inner(cloud, RngSeed{9, 1});
  CHECK(inner == std::vector<std::uint32_t>{0, 0, 1, 1});
  CHECK(cloud.states == std::vector<double>{20.0, 20.0, 21.0, 21.0});
}

TEST_CASE("per-lane draws do not depend on the thread count") {
  const auto& lorenz = system_spec(SystemId::Lorenz);
  auto a = init_particles(kLorenzPrior, 16, 8, {StateVector{1, 1, 1}, 0.5}, RngSeed{10, 0});
  auto b = a;
  jitter(a, JitterKernel::shrinking(kLorenzPrior, 16), RngSeed{10, 1}, Executor(1));
  jitter(b, JitterKernel::shrinking(kLorenzPrior, 16), RngSeed{10, 1}, Executor(5));
  (void)propagate(a, lorenz, StepSize(0.05), 1.0, RngSeed{10, 2}, Executor(1));
  (void)propagate(b, lorenz, StepSize(0.05), 1.0, RngSeed{10, 2}, Executor(5));
  CHECK(a.theta == b.theta);
  CHECK(a.states == b.states);
}
