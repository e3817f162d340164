#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfseq/artifacts.hpp"
#include "cfseq/error.hpp"
#include "cfseq/experiment.hpp"
#include "cfseq/svg_plot.hpp"

namespace cfseq {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

RngSeed master_seed(const ExperimentConfig& config) { return RngSeed{config.seed, 0}; }

fs::path file(const fs::path& dir, std::string_view name) { return dir / std::string(name); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

json diagnostics_json(const FilterDiagnostics& d, std::size_t cf_failures) {
  return json{{"nonfinite_particles", d.nonfinite_particles},
              {"inner_degeneracies", d.inner_degeneracies},
              {"outer_degeneracies", d.outer_degeneracies},
              {"smoother_fallbacks", d.smoother_fallbacks},
              {"cf_failures", cf_failures}};
}

std::string cell_name(double process_std, double observation_std, ThetaMode regime) {
  return "su" + format_double(process_std) + "_sw" + format_double(observation_std) + "_" +
         std::string(to_string(regime));
}

}  // namespace

SimulationStage run_simulation(const ExperimentConfig& config) {
  config.validate();
  const SystemSpec& spec = config.spec();
  const RngSeed master = master_seed(config);
  SimulationStage stage;
  stage.truth = simulate_hidden(spec, config.true_parameters(), config.initial_state(),
                                config.horizon, StepSize(config.delta), config.process_std,
                                substream(master, stream_tag::kSimulateHidden));
  stage.observations = observe(stage.truth.trajectory, ObservationModel::identity(spec.dimension),
                               config.observation_std, substream(master, stream_tag::kObserve));
  return stage;
}

FilterStage run_filter_stage(const ExperimentConfig& config, const ObservationSequence& observations,
                             const PipelineOptions& options) {
  config.validate();
  const SystemSpec& spec = config.spec();
  const Executor exec(options.threads);
  const StepSize delta(config.delta);
  FilterStage stage;
  stage.history = run_filter(observations, spec, config.prior(),
                             InitialStateSampler{config.initial_state(), 0.0},
                             config.filter_config(), ObservationModel::identity(spec.dimension),
                             substream(master_seed(config), stream_tag::kFilter), exec);
  SmootherOptions smoother = options.smoother;
  smoother.stride = config.smoother_stride;
  stage.smoothed = backward_smooth(stage.history, spec, delta, config.process_std, smoother, exec);
  stage.history.diagnostics.smoother_fallbacks = stage.smoothed.fallbacks;
  stage.posterior = posterior_summary(stage.history, stage.smoothed, delta);
  return stage;
}

NoisePosterior run_abduction(const ExperimentConfig& config, const FilterHistory& history,
                             const SmoothedWeights& smoothed, const PipelineOptions& options) {
  return abduct_noise(history, smoothed, config.spec(), StepSize(config.delta),
                      Executor(options.threads));
}

ThetaRegime make_regime(const ExperimentConfig& config, const PosteriorSummary& posterior,
                        const PipelineOptions& options) {
  ThetaRegime regime;
  regime.mode = config.regime;
  regime.truth = config.true_parameters();
  regime.estimate = posterior.theta_mean;
  regime.estimate_std = options.theta_std_override ? *options.theta_std_override : posterior.theta_std;
  return regime;
}

CfTrajectorySet run_counterfactual(const ExperimentConfig& config, const PosteriorSummary& posterior,
                                   const NoisePosterior& noise, const PipelineOptions& options) {
  config.validate();
  const SystemSpec& spec = config.spec();
  const StepSize delta(config.delta);
  const StateVector x0_cf = intervene(config.initial_state(), config.intervention());
  CfTrajectorySet set = generate_cf(spec, make_regime(config, posterior, options), noise, x0_cf,
                                    config.horizon, delta, config.n_cf,
                                    substream(master_seed(config), stream_tag::kCounterfactual),
                                    Executor(options.threads));
  set.reference = deterministic_cf(spec, config.true_parameters(), x0_cf, config.horizon, delta);
  return set;
}

MetricsStage run_metrics(const ExperimentConfig& config, const std::vector<Trajectory>& ensemble,
                         const Trajectory& reference, const Trajectory& estimate,
                         const Trajectory& truth) {
  MetricsStage stage;
  stage.rmse = rmse_t(ensemble, reference);
  stage.rmse_smoothed = moving_average(stage.rmse, config.rmse_window);
  stage.factual = factual_rmse(estimate, truth);
  return stage;
}

void write_simulation(const fs::path& dir, const SimulationStage& stage) {
  ensure_dir(dir);
  write_trajectory_csv(file(dir, files::kTruth), stage.truth.trajectory);
  write_states_csv(file(dir, files::kProcessNoise), stage.truth.noise, "u");
  write_observations_csv(file(dir, files::kObservations), stage.observations);
}

void write_filter_outputs(const fs::path& dir, const ExperimentConfig& config,
                          const FilterStage& stage, bool keep_history) {
  ensure_dir(dir);
  write_trajectory_csv(file(dir, files::kEstimate), stage.posterior.state_mean);
  const json doc{{"parameter_names", config.spec().parameter_names},
                 {"theta_mean", stage.posterior.theta_mean.values()},
                 {"theta_std", stage.posterior.theta_std},
                 {"diagnostics", diagnostics_json(stage.history.diagnostics, 0)}};
  write_text(file(dir, files::kPosterior), doc.dump(2) + "\n");
  if (keep_history) write_history(file(dir, files::kHistory), stage.history, &stage.smoothed);
}

void write_counterfactual(const fs::path& dir, const ExperimentConfig& config,
                          const CfTrajectorySet& ensemble) {
  ensure_dir(dir);
  write_ensemble_csv(file(dir, files::kEnsemble), ensemble);
  write_theta_table_csv(file(dir, files::kThetaCf), ensemble.thetas, config.spec().parameter_names);
  if (ensemble.reference) write_trajectory_csv(file(dir, files::kDeterministicCf), *ensemble.reference);
}

void write_metrics(const fs::path& dir, const MetricsStage& stage) {
  ensure_dir(dir);
  write_rmse_csv(file(dir, files::kRmse), stage.rmse, &stage.rmse_smoothed);
  write_rmse_csv(file(dir, files::kFactualRmse), stage.factual);
}

void write_manifest(const fs::path& dir, const ExperimentConfig& config,
                    const FilterDiagnostics& diagnostics, std::size_t cf_failures,
                    const std::vector<std::string>& written, const std::optional<std::string>& failure) {
  ensure_dir(dir);
  std::vector<std::string> sorted = written;
  std::sort(sorted.begin(), sorted.end());
  json echo = json::parse(config_to_json(config));
  echo.erase("output_dir");
  json doc{{"version", std::string(kVersion)},
           {"config", std::move(echo)},
           {"config_hash", config_hash(config)},
           {"seed", config.seed},
           {"horizon", config.horizon},
           {"n_cf", config.n_cf},
           {"diagnostics", diagnostics_json(diagnostics, cf_failures)},
           {"files", sorted},
           {"status", failure ? "failed" : "ok"}};
  if (failure) doc["failure"] = *failure;
  write_text(file(dir, files::kManifest), doc.dump(2) + "\n");
}

PosteriorSummary read_posterior(const fs::path& dir, const ExperimentConfig& config) {
  const fs::path path = file(dir, files::kPosterior);
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  PosteriorSummary summary{read_trajectory_csv(file(dir, files::kEstimate), StepSize(config.delta)),
                           {}, {}};
  try {
    summary.theta_mean = ParameterVector(doc.at("theta_mean").get<std::vector<double>>());
    summary.theta_std = doc.at("theta_std").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  check_compatible(config.spec(), config.spec().dimension, summary.theta_mean.size());
  if (summary.theta_std.size() != summary.theta_mean.size()) {
    throw IoError(path.string() + ": theta_std has the wrong length");
  }
  return summary;
}

RunArtifacts run_pipeline(const ExperimentConfig& config, const PipelineOptions& options) {
  config.validate();
  RunArtifacts run;
  run.config = config;
  run.config_hash = config_hash(config);
  const fs::path dir = config.output_dir.empty() ? fs::path(".") : fs::path(config.output_dir);
  const auto note = [&](std::initializer_list<std::string_view> names) {
    for (auto n : names) run.files.emplace_back(n);
  };
  const auto finish = [&] {
    if (options.write_files) {
      write_manifest(dir, config, run.diagnostics, run.ensemble.failures(), run.files, run.failure);
    }
  };

  try {
    run.simulation = run_simulation(config);
    if (options.write_files) {
      write_simulation(dir, run.simulation);
      note({files::kTruth, files::kProcessNoise, files::kObservations});
    }

    FilterStage filter = run_filter_stage(config, run.simulation.observations, options);
    run.posterior = filter.posterior;
    run.diagnostics = filter.history.diagnostics;
    if (options.write_files) {
      write_filter_outputs(dir, config, filter, options.keep_history);
      note({files::kEstimate, files::kPosterior});
      if (options.keep_history) note({files::kHistory});
    }

    run.noise = options.noise_override ? *options.noise_override
                                       : run_abduction(config, filter.history, filter.smoothed, options);
    if (options.write_files) {
      write_noise_posterior_csv(file(dir, files::kNoisePosterior), run.noise);
      note({files::kNoisePosterior});
    }

    run.ensemble = run_counterfactual(config, run.posterior, run.noise, options);
    run.deterministic = *run.ensemble.reference;
    if (options.write_files) {
      write_counterfactual(dir, config, run.ensemble);
      note({files::kEnsemble, files::kThetaCf, files::kDeterministicCf});
    }

    run.metrics = run_metrics(config, run.ensemble.trajectories, run.deterministic,
                              run.posterior.state_mean, run.simulation.truth.trajectory);
    if (options.write_files) {
      write_metrics(dir, run.metrics);
      note({files::kRmse, files::kFactualRmse});
    }

    if (options.write_files && options.render_plots) {
      PlotInputs inputs;
      inputs.system = &config.spec();
      inputs.regime_label = std::string(to_string(config.regime));
      inputs.truth = &run.simulation.truth.trajectory;
      inputs.observations = &run.simulation.observations;
      inputs.estimate = &run.posterior.state_mean;
      inputs.ensemble = &run.ensemble.trajectories;
      inputs.reference = &run.deterministic;
      inputs.rmse = &run.metrics.rmse;
      inputs.rmse_smoothed = &run.metrics.rmse_smoothed;
      for (auto& f : render_plots(dir, inputs)) run.files.push_back(std::move(f));
    }
  } catch (const NumericalError& e) {
    run.failure = e.what();
    finish();
    throw;
  }
  finish();
  return run;
}

std::vector<GridCell> run_grid(const ExperimentConfig& base,
                               const std::vector<std::pair<double, double>>& noise_pairs,
                               const std::vector<ThetaMode>& regimes, const fs::path& root,
                               const PipelineOptions& options) {
  if (noise_pairs.empty() || regimes.empty()) {
    throw ConfigError("grid must contain at least one noise pair and one regime");
  }
  base.validate();

  std::vector<GridCell> cells;
  std::vector<ExperimentConfig> configs;
  for (std::size_t p = 0; p < noise_pairs.size(); ++p) {
    const auto [su, sw] = noise_pairs[p];
    const std::uint64_t cell_seed =
        substream(RngSeed{base.seed, 0}, stream_tag::kGridCell, p).stream_id;
    for (ThetaMode mode : regimes) {
      ExperimentConfig c = base;
      c.process_std = su;
      c.observation_std = sw;
      c.regime = mode;
      c.seed = cell_seed;
      GridCell cell{root / cell_name(su, sw, mode), su, sw, mode, std::nullopt, std::nullopt};
      c.output_dir = cell.directory.string();
      cells.push_back(std::move(cell));
      configs.push_back(std::move(c));
    }
  }

  PipelineOptions inner = options;
  inner.threads = 1;
  Executor(options.threads).for_each(cells.size(), [&](std::size_t i) {
    try {
      configs[i].validate();
      cells[i].artifacts = run_pipeline(configs[i], inner);
    } catch (const std::exception& e) {
      cells[i].error = e.what();
    }
  });
  return cells;
}

namespace {

constexpr const char* kReferenceColor = "#1f3a93";
constexpr const char* kEnsembleColor = "#e4572e";
constexpr const char* kTruthColor = "#222222";
constexpr const char* kObservationColor = "#9aa5b1";
constexpr const char* kEstimateColor = "#2a9d8f";

std::vector<double> time_axis(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i);
  return t;
}

std::vector<double> component(const std::vector<StateVector>& states, std::size_t i) {
  std::vector<double> out(states.size());
  for (std::size_t t = 0; t < states.size(); ++t) out[t] = states[t][i];
  return out;
}

plot::Series line(const std::vector<StateVector>& states, std::size_t i, const char* color,
                  double width = 1.0, double opacity = 1.0) {
  return plot::Series{time_axis(states.size()), component(states, i), color, width, opacity};
}

plot::Series phase(const std::vector<StateVector>& states, std::size_t i, std::size_t j,
                   const char* color, double width = 1.0, double opacity = 1.0) {
  return plot::Series{component(states, i), component(states, j), color, width, opacity};
}

std::string axis_name(std::size_t i) { return "x_" + std::to_string(i + 1); }

}  // namespace

std::vector<std::string> render_plots(const fs::path& dir, const PlotInputs& in) {
  if (in.ensemble == nullptr || in.ensemble->empty()) {
    throw std::invalid_argument("render_plots: counterfactual ensemble is empty");
  }
  if (in.system == nullptr || in.reference == nullptr || in.truth == nullptr ||
      in.estimate == nullptr || in.rmse == nullptr) {
    throw std::invalid_argument("render_plots: incomplete plot inputs");
  }
  const std::size_t d = in.reference->dimension();
  const std::string suffix = in.regime_label.empty() ? "" : " (" + in.regime_label + ")";
  std::vector<std::string> written;

  plot::Figure cf{in.system->name + " counterfactual ensemble" + suffix, {}, 1};
  for (std::size_t i = 0; i < d; ++i) {
    plot::Panel panel{axis_name(i), "t", axis_name(i), {}};
    for (const auto& traj : *in.ensemble) {
      panel.series.push_back(line(traj.states, i, kEnsembleColor, 0.8, 0.6));
    }
    panel.series.push_back(line(in.reference->states, i, kReferenceColor, 1.4));
    cf.panels.push_back(std::move(panel));
  }

  plot::Figure factual{in.system->name + " factual estimate", {}, 1};
  for (std::size_t i = 0; i < d; ++i) {
    plot::Panel panel{axis_name(i), "t", axis_name(i), {}};
    if (in.observations != nullptr) {
      panel.series.push_back(line(in.observations->observations, i, kObservationColor, 0.6, 0.7));
    }
    panel.series.push_back(line(in.truth->states, i, kTruthColor, 1.2));
    panel.series.push_back(line(in.estimate->states, i, kEstimateColor, 1.0));
    factual.panels.push_back(std::move(panel));
  }

  plot::Figure rmse{in.system->name + " RMSE_t" + suffix, {}, 1};
  {
    plot::Panel panel{"RMSE_t", "t", "rmse", {}};
    panel.series.push_back(
        plot::Series{time_axis(in.rmse->values.size()), in.rmse->values, kObservationColor, 0.8});
    if (in.rmse_smoothed != nullptr) {
      panel.series.push_back(plot::Series{time_axis(in.rmse_smoothed->values.size()),
                                          in.rmse_smoothed->values, kEnsembleColor, 1.4});
    }
    rmse.panels.push_back(std::move(panel));
  }

  ensure_dir(dir);
  plot::write_svg(dir / "cf_timeseries.svg", cf);
  plot::write_svg(dir / "factual.svg", factual);
  plot::write_svg(dir / "rmse.svg", rmse);
  written = {"cf_timeseries.svg", "factual.svg", "rmse.svg"};

  if (d >= 2) {
    plot::Figure ph{in.system->name + " phase projections" + suffix, {}, d == 2 ? 1u : 3u};
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i + 1; j < d; ++j) {
        plot::Panel panel{axis_name(i) + " vs " + axis_name(j), axis_name(i), axis_name(j), {}};
        for (const auto& traj : *in.ensemble) {
          panel.series.push_back(phase(traj.states, i, j, kEnsembleColor, 0.6, 0.5));
        }
        panel.series.push_back(phase(in.reference->states, i, j, kReferenceColor, 1.2));
        ph.panels.push_back(std::move(panel));
      }
    }
    plot::write_svg(dir / "phase.svg", ph);
    written.emplace_back("phase.svg");
  }
  return written;
}

std::vector<std::string> render_plots_from_dir(const fs::path& dir, const ExperimentConfig& config) {
  const StepSize delta(config.delta);
  const Trajectory truth = read_trajectory_csv(file(dir, files::kTruth), delta);
  const ObservationSequence obs = read_observations_csv(file(dir, files::kObservations));
  const Trajectory estimate = read_trajectory_csv(file(dir, files::kEstimate), delta);
  const std::vector<Trajectory> ensemble = read_ensemble_csv(file(dir, files::kEnsemble), delta);
  const Trajectory reference = read_trajectory_csv(file(dir, files::kDeterministicCf), delta);
  const RmseSeries raw = read_rmse_csv(file(dir, files::kRmse), "rmse");
  const RmseSeries smoothed = read_rmse_csv(file(dir, files::kRmse), "rmse_smoothed");

  PlotInputs inputs;
  inputs.system = &config.spec();
  inputs.regime_label = std::string(to_string(config.regime));
  inputs.truth = &truth;
  inputs.observations = &obs;
  inputs.estimate = &estimate;
  inputs.ensemble = &ensemble;
  inputs.reference = &reference;
  inputs.rmse = &raw;
  inputs.rmse_smoothed = &smoothed;
  return render_plots(dir, inputs);
}

}  // namespace cfseq
