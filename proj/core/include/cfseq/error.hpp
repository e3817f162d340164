/**
 * @file error.hpp
 * @brief Exception types shared by all cfseq modules.
 *
 * The CLI maps each category onto a process exit code: ConfigError -> 2,
 * NumericalError -> 3, IoError -> 4. DimensionError is a programming error
 * on the caller's side and derives from std::invalid_argument.
 */
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace cfseq {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a state or intermediate quantity stops being finite.
/// `step()` carries the first failing time index when one is known.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::optional<std::size_t> step = std::nullopt)
      : std::runtime_error(what), step_(step) {}

  [[nodiscard]] std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  std::optional<std::size_t> step_;
};

}  // namespace cfseq
