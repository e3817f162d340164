#include "cfseq/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "cfseq/error.hpp"

namespace cfseq {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError(std::string(what) + " has a non-finite component");
  }
}

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

const SystemSpec& system_spec(SystemId id) {
  static const SystemSpec lorenz{SystemId::Lorenz, "lorenz", 3, {"sigma", "rho", "beta"},
                                 "rho >~ 24.74"};
  static const SystemSpec rossler{SystemId::Rossler, "rossler", 3, {"a", "b", "c"}, "c >~ 5.7"};
  static const SystemSpec logistic{SystemId::LogisticGrowth, "logistic", 1, {"r", "K"}, ""};
  static const SystemSpec linear{SystemId::LinearDecay, "linear_decay", 1, {"lambda"}, ""};
  switch (id) {
    case SystemId::Lorenz: return lorenz;
    case SystemId::Rossler: return rossler;
    case SystemId::LogisticGrowth: return logistic;
    case SystemId::LinearDecay: return linear;
  }
  throw std::invalid_argument("unknown system id");
}

SystemId parse_system_id(std::string_view name) {
  if (name == "lorenz") return SystemId::Lorenz;
  if (name == "rossler") return SystemId::Rossler;
  if (name == "logistic" || name == "logistic_growth") return SystemId::LogisticGrowth;
  if (name == "linear_decay") return SystemId::LinearDecay;
  throw ConfigError("unknown system '" + std::string(name) + "'");
}

std::string_view to_string(SystemId id) noexcept {
  switch (id) {
    case SystemId::Lorenz: return "lorenz";
    case SystemId::Rossler: return "rossler";
    case SystemId::LogisticGrowth: return "logistic";
    case SystemId::LinearDecay: return "linear_decay";
  }
  return "unknown";
}

StateVector::StateVector(std::initializer_list<double> values)
    : StateVector(std::span<const double>(values.begin(), values.size())) {}

StateVector::StateVector(std::span<const double> values) : dim_(values.size()) {
  if (values.empty() || values.size() > kMaxStateDim) {
    throw DimensionError("state dimension must be in [1, " + std::to_string(kMaxStateDim) + "]");
  }
  require_finite(values, "state");
  std::copy(values.begin(), values.end(), data_.begin());
}

StateVector StateVector::zeros(std::size_t dim) {
  std::array<double, kMaxStateDim> z{};
  if (dim > kMaxStateDim) throw DimensionError("state dimension too large");
  return StateVector(std::span<const double>(z.data(), dim));
}

StateVector StateVector::with(std::size_t i, double value) const {
  if (i >= dim_) throw DimensionError("component index out of range");
  auto copy = data_;
  copy[i] = value;
  return StateVector(std::span<const double>(copy.data(), dim_));
}

bool operator==(const StateVector& a, const StateVector& b) noexcept {
  return a.dim_ == b.dim_ && std::equal(a.data_.begin(), a.data_.begin() + a.dim_, b.data_.begin());
}

ParameterVector::ParameterVector(std::initializer_list<double> values)
    : ParameterVector(std::vector<double>(values)) {}

ParameterVector::ParameterVector(std::vector<double> values) : values_(std::move(values)) {
  require_finite(values_, "parameter vector");
}

StepSize::StepSize(double delta) : delta_(delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("step size must be positive and finite");
  }
}

void check_compatible(const SystemSpec& system, std::size_t state_dim, std::size_t param_count) {
  if (state_dim != system.dimension) {
    throw DimensionError(system.name + ": expected state dimension " +
                         std::to_string(system.dimension) + ", got " + std::to_string(state_dim));
  }
  if (param_count != system.parameter_count()) {
    throw DimensionError(system.name + ": expected " + std::to_string(system.parameter_count()) +
                         " parameters, got " + std::to_string(param_count));
  }
}

void rhs_into(SystemId id, std::span<const double> x, std::span<const double> p,
              std::span<double> out) noexcept {
  switch (id) {
    case SystemId::Lorenz:
      out[0] = p[0] * (x[1] - x[0]);
      out[1] = x[0] * (p[1] - x[2]) - x[1];
      out[2] = x[0] * x[1] - p[2] * x[2];
      return;
    case SystemId::Rossler:
      out[0] = -x[1] - x[2];
      out[1] = x[0] + p[0] * x[1];
      out[2] = p[1] + x[2] * (x[0] - p[2]);
      return;
    case SystemId::LogisticGrowth:
      out[0] = p[0] * x[0] * (1.0 - x[0] / p[1]);
      return;
    case SystemId::LinearDecay:
      out[0] = -p[0] * x[0];
      return;
  }
}

namespace {

struct Rk4Stages {
  std::array<double, kMaxStateDim> k1{}, k2{}, k3{}, k4{};
};

void rk4_stages(SystemId id, std::span<const double> x, std::span<const double> p, double h,
                Rk4Stages& s) noexcept {
  const std::size_t d = x.size();
  std::array<double, kMaxStateDim> tmp{};
  const std::span<double> y(tmp.data(), d);

  rhs_into(id, x, p, {s.k1.data(), d});
  for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + 0.5 * h * s.k1[i];
  rhs_into(id, y, p, {s.k2.data(), d});
  for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + 0.5 * h * s.k2[i];
  rhs_into(id, y, p, {s.k3.data(), d});
  for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + h * s.k3[i];
  rhs_into(id, y, p, {s.k4.data(), d});
}

}  // namespace

void rk4_step_into(SystemId id, std::span<const double> x, std::span<const double> p, double h,
                   std::span<double> out) noexcept {
  Rk4Stages s;
  rk4_stages(id, x, p, h, s);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] + (h / 6.0) * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
  }
}

StateVector rhs(const SystemSpec& system, const StateVector& state, const ParameterVector& params) {
  check_compatible(system, state.size(), params.size());
  std::array<double, kMaxStateDim> out{};
  rhs_into(system.id, state.span(), params.span(), {out.data(), state.size()});
  if (!all_finite({out.data(), state.size()})) throw NumericalError("rhs evaluation is non-finite");
  return StateVector(std::span<const double>(out.data(), state.size()));
}

StateVector rk4_step(const SystemSpec& system, const StateVector& state,
                     const ParameterVector& params, StepSize delta) {
  check_compatible(system, state.size(), params.size());
  const std::size_t d = state.size();
  Rk4Stages s;
  rk4_stages(system.id, state.span(), params.span(), delta.value(), s);
  const std::array<const std::array<double, kMaxStateDim>*, 4> stages{&s.k1, &s.k2, &s.k3, &s.k4};
  for (std::size_t k = 0; k < stages.size(); ++k) {
    if (!all_finite({stages[k]->data(), d})) {
      throw NumericalError("rk4 stage k" + std::to_string(k + 1) + " is non-finite");
    }
  }
  const double h = delta.value();
  std::array<double, kMaxStateDim> out{};
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = state[i] + (h / 6.0) * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
  }
  if (!all_finite({out.data(), d})) throw NumericalError("rk4 update is non-finite");
  return StateVector(std::span<const double>(out.data(), d));
}

}  // namespace cfseq
