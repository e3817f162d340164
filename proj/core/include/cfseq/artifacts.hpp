/**
 * @file artifacts.hpp
 * @brief On-disk formats for run artifacts.
 *
 * Numeric series are UTF-8 CSV with a one-line header. Doubles are written in
 * shortest round-trip form, so reading a file back yields bit-identical values.
 *
 *   trajectory        t,x_1..x_d
 *   observations      t,y_1..y_d
 *   process noise     t,u_1..u_d
 *   noise posterior   t,mu_1..mu_d,sigma_1..sigma_d      (t = 1..T)
 *   ensemble          t,traj_id,x_1..x_d
 *   theta table       traj_id,<parameter names>
 *   rmse              t,rmse[,rmse_smoothed]
 *
 * Filter histories use a little-endian binary layout (see write_history).
 */
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfseq/abduction.hpp"
#include "cfseq/counterfactual.hpp"
#include "cfseq/metrics.hpp"
#include "cfseq/nested_filter.hpp"

namespace cfseq {

/// Shortest decimal form that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::size_t column(std::string_view name) const;
};

[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

void write_states_csv(const std::filesystem::path& path, const std::vector<StateVector>& states,
                      std::string_view prefix);
[[nodiscard]] std::vector<StateVector> read_states_csv(const std::filesystem::path& path,
                                                       std::string_view prefix);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);
[[nodiscard]] Trajectory read_trajectory_csv(const std::filesystem::path& path, StepSize delta);

void write_observations_csv(const std::filesystem::path& path, const ObservationSequence& obs);
[[nodiscard]] ObservationSequence read_observations_csv(const std::filesystem::path& path);

void write_noise_posterior_csv(const std::filesystem::path& path, const NoisePosterior& noise);
[[nodiscard]] NoisePosterior read_noise_posterior_csv(const std::filesystem::path& path);

void write_ensemble_csv(const std::filesystem::path& path, const CfTrajectorySet& ensemble);
[[nodiscard]] std::vector<Trajectory> read_ensemble_csv(const std::filesystem::path& path,
                                                        StepSize delta);

void write_theta_table_csv(const std::filesystem::path& path,
                           const std::vector<ParameterVector>& thetas,
                           const std::vector<std::string>& names);

void write_rmse_csv(const std::filesystem::path& path, const RmseSeries& raw,
                    const RmseSeries* smoothed = nullptr);
[[nodiscard]] RmseSeries read_rmse_csv(const std::filesystem::path& path,
                                       std::string_view column = "rmse");

/// Binary layout, all integers u64 and reals f64, little-endian:
///   magic "CFSQHIS1", steps, outer, inner, dim, params,
///   theta, states, inner_weights, outer_weights (f64 arrays),
///   parent_outer, parent_inner (u32 arrays),
///   diagnostics (4 x u64), has_smoothed (u64),
///   [w_tilde, v_tilde (f64), lineage (u32), fallbacks (u64)]
void write_history(const std::filesystem::path& path, const FilterHistory& history,
                   const SmoothedWeights* smoothed);

struct StoredHistory {
  FilterHistory history;
  std::optional<SmoothedWeights> smoothed;
};
[[nodiscard]] StoredHistory read_history(const std::filesystem::path& path);

}  // namespace cfseq
