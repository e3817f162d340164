/**
 * @file experiment.hpp
 * @brief Experiment configuration, presets, and the end-to-end pipeline.
 *
 * Stages run in causal order:
 *   simulate -> filter + smooth -> abduct -> intervene + generate -> evaluate.
 * Every stage draws from its own substream of the master seed, and each can
 * be resumed from the previous stage's files in the output directory.
 */
#pragma once

#include <cstdint>
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

inline constexpr std::string_view kVersion = "0.1.0";

struct ExperimentConfig {
  SystemId system = SystemId::Lorenz;
  std::vector<double> theta_true;
  std::vector<double> x0;
  std::size_t horizon = 500;
  double delta = 0.05;
  double process_std = 1.0;
  double observation_std = 1.0;
  std::vector<ParameterBounds> prior_bounds;
  std::size_t outer_particles = 50;
  std::size_t inner_particles = 50;
  double jitter_scale = 0.05;
  bool inner_resampling = true;
  /// 1-based component, as written in config files.
  std::size_t intervention_component = 1;
  double intervention_delta = 0.0;
  std::optional<std::vector<double>> intervention_absolute;
  ThetaMode regime = ThetaMode::TrueTheta;
  std::size_t n_cf = 20;
  std::size_t rmse_window = 200;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::size_t smoother_stride = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  [[nodiscard]] const SystemSpec& spec() const { return system_spec(system); }
  [[nodiscard]] ParameterVector true_parameters() const { return ParameterVector(theta_true); }
  [[nodiscard]] StateVector initial_state() const { return StateVector(x0); }
  [[nodiscard]] ParameterPrior prior() const { return ParameterPrior(prior_bounds); }
  [[nodiscard]] Intervention intervention() const;
  [[nodiscard]] FilterConfig filter_config() const;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

/// JSON text with snake_case keys mirroring the struct fields; keys sorted.
[[nodiscard]] std::string config_to_json(const ExperimentConfig& config, int indent = 2);
/// Parses and validates. Unknown keys are rejected. `source` prefixes error messages.
[[nodiscard]] ExperimentConfig parse_config(std::string_view json_text,
                                            std::string_view source = "<config>");
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

/// FNV-1a 64 of the canonical JSON form (output_dir excluded), as 16 hex digits.
[[nodiscard]] std::string config_hash(const ExperimentConfig& config);

/// Named presets: {lorenz,rossler}-{full,wide,desk}, logistic-{full,fast,desk}.
/// "wide" widens the prior; "fast" is logistic with r = 3.9, K = 1.
[[nodiscard]] ExperimentConfig preset(std::string_view name);
[[nodiscard]] std::vector<std::string> preset_names();

/// The four (process_std, observation_std) pairs of the noise grid.
[[nodiscard]] std::vector<std::pair<double, double>> noise_grid_pairs(bool include_swapped = false);

struct PipelineOptions {
  std::size_t threads = 1;
  bool write_files = true;
  bool keep_history = false;
  bool render_plots = false;
  /// Replaces the smoothed posterior std of theta (regime nesting checks).
  std::optional<std::vector<double>> theta_std_override;
  /// Replaces the abducted noise posterior.
  std::optional<NoisePosterior> noise_override;
  SmootherOptions smoother;
};

struct SimulationStage {
  SimulatedTrajectory truth;
  ObservationSequence observations;
};

struct FilterStage {
  FilterHistory history;
  SmoothedWeights smoothed;
  PosteriorSummary posterior;
};

struct MetricsStage {
  RmseSeries rmse;
  RmseSeries rmse_smoothed;
  RmseSeries factual;
};

struct RunArtifacts {
  ExperimentConfig config;
  std::string config_hash;
  SimulationStage simulation;
  PosteriorSummary posterior;
  FilterDiagnostics diagnostics;
  NoisePosterior noise;
  CfTrajectorySet ensemble;
  Trajectory deterministic;
  MetricsStage metrics;
  std::vector<std::string> files;
  std::optional<std::string> failure;
};

[[nodiscard]] SimulationStage run_simulation(const ExperimentConfig& config);
[[nodiscard]] FilterStage run_filter_stage(const ExperimentConfig& config,
                                           const ObservationSequence& observations,
                                           const PipelineOptions& options = {});
[[nodiscard]] NoisePosterior run_abduction(const ExperimentConfig& config,
                                           const FilterHistory& history,
                                           const SmoothedWeights& smoothed,
                                           const PipelineOptions& options = {});
[[nodiscard]] ThetaRegime make_regime(const ExperimentConfig& config,
                                      const PosteriorSummary& posterior,
                                      const PipelineOptions& options = {});
/// Ensemble with its deterministic reference attached.
[[nodiscard]] CfTrajectorySet run_counterfactual(const ExperimentConfig& config,
                                                 const PosteriorSummary& posterior,
                                                 const NoisePosterior& noise,
                                                 const PipelineOptions& options = {});
[[nodiscard]] MetricsStage run_metrics(const ExperimentConfig& config,
                                       const std::vector<Trajectory>& ensemble,
                                       const Trajectory& reference, const Trajectory& estimate,
                                       const Trajectory& truth);

/// Runs every stage. With options.write_files, writes artifacts and a manifest
/// into config.output_dir; on a stage failure the manifest records it, partial
/// artifacts stay on disk, and the exception is rethrown.
[[nodiscard]] RunArtifacts run_pipeline(const ExperimentConfig& config,
                                        const PipelineOptions& options = {});

struct GridCell {
  std::filesystem::path directory;
  double process_std;
  double observation_std;
  ThetaMode regime;
  std::optional<RunArtifacts> artifacts;
  std::optional<std::string> error;
};

/// Cross product of noise pairs and regimes under `root`, one sub-directory
/// per cell. Cells of the same noise pair share a derived seed. Failures are
/// recorded per cell.
[[nodiscard]] std::vector<GridCell> run_grid(const ExperimentConfig& base,
                                             const std::vector<std::pair<double, double>>& noise_pairs,
                                             const std::vector<ThetaMode>& regimes,
                                             const std::filesystem::path& root,
                                             const PipelineOptions& options = {});

// Artifact file names inside an output directory.
namespace files {
inline constexpr std::string_view kTruth = "truth.csv";
inline constexpr std::string_view kProcessNoise = "process_noise.csv";
inline constexpr std::string_view kObservations = "observations.csv";
inline constexpr std::string_view kHistory = "history.bin";
inline constexpr std::string_view kEstimate = "estimate.csv";
inline constexpr std::string_view kPosterior = "posterior.json";
inline constexpr std::string_view kNoisePosterior = "noise_posterior.csv";
inline constexpr std::string_view kEnsemble = "ensemble.csv";
inline constexpr std::string_view kThetaCf = "theta_cf.csv";
inline constexpr std::string_view kDeterministicCf = "deterministic_cf.csv";
inline constexpr std::string_view kRmse = "rmse.csv";
inline constexpr std::string_view kFactualRmse = "factual_rmse.csv";
inline constexpr std::string_view kManifest = "manifest.json";
}  // namespace files

void write_simulation(const std::filesystem::path& dir, const SimulationStage& stage);
void write_filter_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                          const FilterStage& stage, bool keep_history);
void write_counterfactual(const std::filesystem::path& dir, const ExperimentConfig& config,
                          const CfTrajectorySet& ensemble);
void write_metrics(const std::filesystem::path& dir, const MetricsStage& stage);
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config,
                    const FilterDiagnostics& diagnostics, std::size_t cf_failures,
                    const std::vector<std::string>& files, const std::optional<std::string>& failure);

[[nodiscard]] PosteriorSummary read_posterior(const std::filesystem::path& dir,
                                              const ExperimentConfig& config);

struct PlotInputs {
  const SystemSpec* system = nullptr;
  std::string regime_label;
  const Trajectory* truth = nullptr;
  const ObservationSequence* observations = nullptr;
  const Trajectory* estimate = nullptr;
  const std::vector<Trajectory>* ensemble = nullptr;
  const Trajectory* reference = nullptr;
  const RmseSeries* rmse = nullptr;
  const RmseSeries* rmse_smoothed = nullptr;
};

/// Writes cf_timeseries.svg, factual.svg, rmse.svg and (for d >= 2) phase.svg.
/// Throws before writing anything if the ensemble is missing or empty.
std::vector<std::string> render_plots(const std::filesystem::path& dir, const PlotInputs& inputs);

/// Loads the run files in `dir` and renders them.
std::vector<std::string> render_plots_from_dir(const std::filesystem::path& dir,
                                               const ExperimentConfig& config);

}  // namespace cfseq
