/**
 * @file dynamics.hpp
 * @brief ODE right-hand sides of the supported systems and the RK4 forward operator.
 *
 * Supported systems:
 *   - Lorenz:          x' = sigma (y - x),  y' = x (rho - z) - y,  z' = x y - beta z
 *   - Rossler:         x' = -y - z,  y' = x + a y,  z' = b + z (x - c)
 *   - LogisticGrowth:  X' = r X (1 - X / K)
 *   - LinearDecay:     X' = -lambda X   (test system for convergence and Kalman checks)
 *
 * Everything here is a pure function; calls are safe from any thread.
 */
#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfseq {

inline constexpr std::size_t kMaxStateDim = 3;

enum class SystemId { Lorenz, Rossler, LogisticGrowth, LinearDecay };

struct SystemSpec {
  SystemId id;
  std::string name;
  std::size_t dimension;
  std::vector<std::string> parameter_names;
  std::string chaotic_region_note;

  [[nodiscard]] std::size_t parameter_count() const noexcept { return parameter_names.size(); }
};

[[nodiscard]] const SystemSpec& system_spec(SystemId id);
/// Accepts "lorenz", "rossler", "logistic" / "logistic_growth", "linear_decay".
[[nodiscard]] SystemId parse_system_id(std::string_view name);
[[nodiscard]] std::string_view to_string(SystemId id) noexcept;

/// d-dimensional state with inline storage (d <= kMaxStateDim).
/// Components are finite on construction.
class StateVector {
 public:
  StateVector() = default;
  StateVector(std::initializer_list<double> values);
  explicit StateVector(std::span<const double> values);

  [[nodiscard]] static StateVector zeros(std::size_t dim);

  [[nodiscard]] std::size_t size() const noexcept { return dim_; }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return data_[i]; }
  [[nodiscard]] std::span<const double> span() const noexcept { return {data_.data(), dim_}; }

  /// Copy with component `i` replaced (finiteness checked).
  [[nodiscard]] StateVector with(std::size_t i, double value) const;

  friend bool operator==(const StateVector& a, const StateVector& b) noexcept;

 private:
  std::array<double, kMaxStateDim> data_{};
  std::size_t dim_ = 0;
};

class ParameterVector {
 public:
  ParameterVector() = default;
  ParameterVector(std::initializer_list<double> values);
  explicit ParameterVector(std::vector<double> values);

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }
  [[nodiscard]] std::span<const double> span() const noexcept { return values_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  std::vector<double> values_;
};

class StepSize {
 public:
  explicit StepSize(double delta);
  [[nodiscard]] double value() const noexcept { return delta_; }

 private:
  double delta_;
};

/// Throws DimensionError unless the state and parameters fit `system`.
void check_compatible(const SystemSpec& system, std::size_t state_dim, std::size_t param_count);

// Raw kernels used by the particle code. No validation, may produce non-finite output.
void rhs_into(SystemId id, std::span<const double> state, std::span<const double> params,
              std::span<double> out) noexcept;
void rk4_step_into(SystemId id, std::span<const double> state, std::span<const double> params,
                   double delta, std::span<double> out) noexcept;

[[nodiscard]] StateVector rhs(const SystemSpec& system, const StateVector& state,
                              const ParameterVector& params);

/// X + (delta/6)(k1 + 2 k2 + 2 k3 + k4). Throws NumericalError naming the first
/// non-finite stage.
[[nodiscard]] StateVector rk4_step(const SystemSpec& system, const StateVector& state,
                                   const ParameterVector& params, StepSize delta);

}  // namespace cfseq
