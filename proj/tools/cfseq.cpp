/**
 * @file cfseq.cpp
 * @brief Command-line front end: staged or fused counterfactual runs.
 *
 * Exit codes: 0 success, 2 configuration error, 3 numerical failure,
 * 4 I/O error.
 */
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cfseq/artifacts.hpp"
#include "cfseq/error.hpp"
#include "cfseq/experiment.hpp"

namespace fs = std::filesystem;
using namespace cfseq;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

constexpr std::string_view kConfigFile = "config.json";

struct CommonArgs {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t threads = 1;
};

void add_common(CLI::App& cmd, CommonArgs& args) {
  cmd.add_option("--config", args.config_path, "JSON config file (or a run manifest)");
  cmd.add_option("--preset", args.preset_name, "built-in preset name");
  cmd.add_option("--seed", args.seed, "master seed override");
  cmd.add_option("--out", args.out, "output directory override");
  cmd.add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
}

// --config wins over --preset; otherwise fall back to <out>/config.json left by an earlier stage.
ExperimentConfig resolve(const CommonArgs& args) {
  if (!args.config_path.empty() && !args.preset_name.empty()) {
    throw ConfigError("give either --config or --preset, not both");
  }
  ExperimentConfig config;
  if (!args.config_path.empty()) {
    config = load_config(args.config_path);
  } else if (!args.preset_name.empty()) {
    config = preset(args.preset_name);
  } else if (!args.out.empty() && fs::exists(fs::path(args.out) / kConfigFile)) {
    config = load_config(fs::path(args.out) / kConfigFile);
  } else {
    throw ConfigError("no configuration: pass --config, --preset, or an --out holding config.json");
  }
  if (args.seed) config.seed = *args.seed;
  if (!args.out.empty()) config.output_dir = args.out;
  if (config.output_dir.empty()) config.output_dir = ".";
  config.validate();
  return config;
}

fs::path prepare(const ExperimentConfig& config) {
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  save_config(dir / kConfigFile, config);
  return dir;
}

PipelineOptions options_for(const CommonArgs& args) {
  PipelineOptions o;
  o.threads = args.threads;
  return o;
}

int cmd_simulate(const CommonArgs& args) {
  const ExperimentConfig config = resolve(args);
  const fs::path dir = prepare(config);
  write_simulation(dir, run_simulation(config));
  std::cout << "wrote " << files::kTruth << ", " << files::kProcessNoise << ", "
            << files::kObservations << " to " << dir.string() << '\n';
  return 0;
}

int cmd_filter(const CommonArgs& args) {
  const ExperimentConfig config = resolve(args);
  const fs::path dir = prepare(config);
  const ObservationSequence obs = read_observations_csv(dir / files::kObservations);
  if (obs.horizon() != config.horizon || obs.dimension() != config.spec().dimension) {
    throw ConfigError(std::string(files::kObservations) + " does not match the configured horizon/system");
  }
  const FilterStage stage = run_filter_stage(config, obs, options_for(args));
  write_filter_outputs(dir, config, stage, true);
  std::cout << "theta_mean:";
  for (double v : stage.posterior.theta_mean.values()) std::cout << ' ' << format_double(v);
  std::cout << "\nwrote " << files::kEstimate << ", " << files::kPosterior << ", "
            << files::kHistory << '\n';
  return 0;
}

int cmd_abduct(const CommonArgs& args) {
  const ExperimentConfig config = resolve(args);
  const fs::path dir = prepare(config);
  const StoredHistory stored = read_history(dir / files::kHistory);
  if (!stored.smoothed) {
    throw IoError(std::string(files::kHistory) + " carries no smoothed weights; rerun `filter`");
  }
  const NoisePosterior noise = run_abduction(config, stored.history, *stored.smoothed, options_for(args));
  write_noise_posterior_csv(dir / files::kNoisePosterior, noise);
  std::cout << "wrote " << files::kNoisePosterior << '\n';
  return 0;
}

int cmd_counterfactual(const CommonArgs& args) {
  const ExperimentConfig config = resolve(args);
  const fs::path dir = prepare(config);
  const PosteriorSummary posterior = read_posterior(dir, config);
  const NoisePosterior noise = read_noise_posterior_csv(dir / files::kNoisePosterior);
  const CfTrajectorySet set = run_counterfactual(config, posterior, noise, options_for(args));
  write_counterfactual(dir, config, set);
  std::cout << "wrote " << set.size() << " trajectories (" << set.failures() << " failed) to "
            << files::kEnsemble << '\n';
  return 0;
}

int cmd_metrics(const CommonArgs& args) {
  const ExperimentConfig config = resolve(args);
  const fs::path dir = prepare(config);
  const StepSize delta(config.delta);
  const MetricsStage stage =
      run_metrics(config, read_ensemble_csv(dir / files::kEnsemble, delta),
                  read_trajectory_csv(dir / files::kDeterministicCf, delta),
                  read_trajectory_csv(dir / files::kEstimate, delta),
                  read_trajectory_csv(dir / files::kTruth, delta));
  write_metrics(dir, stage);
  std::cout << "wrote " << files::kRmse << ", " << files::kFactualRmse << '\n';
  return 0;
}

int cmd_plot(const CommonArgs& args) {
  const ExperimentConfig config = resolve(args);
  for (const auto& f : render_plots_from_dir(config.output_dir, config)) {
    std::cout << "wrote " << f << '\n';
  }
  return 0;
}

int cmd_run(const CommonArgs& args, bool plots, bool keep_history) {
  const ExperimentConfig config = resolve(args);
  prepare(config);
  PipelineOptions options = options_for(args);
  options.render_plots = plots;
  options.keep_history = keep_history;
  const RunArtifacts run = run_pipeline(config, options);
  std::cout << "run " << run.config_hash << " -> " << config.output_dir << " ("
            << run.files.size() << " files)\n";
  return 0;
}

int cmd_grid(const CommonArgs& args, bool both_orderings, const std::vector<std::string>& regime_names,
             bool plots) {
  ExperimentConfig config = resolve(args);
  std::vector<ThetaMode> regimes;
  for (const auto& r : regime_names) regimes.push_back(parse_theta_mode(r));
  if (regimes.empty()) {
    regimes = {ThetaMode::TrueTheta, ThetaMode::PointEstimate, ThetaMode::PosteriorSample};
  }
  PipelineOptions options = options_for(args);
  options.render_plots = plots;
  const auto cells = run_grid(config, noise_grid_pairs(both_orderings), regimes,
                              config.output_dir, options);
  std::size_t failed = 0;
  for (const auto& cell : cells) {
    std::cout << cell.directory.string() << ": " << (cell.error ? "FAILED " + *cell.error : "ok")
              << '\n';
    failed += cell.error ? 1 : 0;
  }
  std::cout << cells.size() - failed << "/" << cells.size() << " cells completed\n";
  return failed == 0 ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual sequence estimation for noisy dynamical systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CommonArgs args;
  bool plots = true;
  bool keep_history = false;
  bool both_orderings = false;
  std::vector<std::string> regime_names;

  auto* simulate = app.add_subcommand("simulate", "simulate the hidden trajectory and observations");
  auto* filter = app.add_subcommand("filter", "nested particle filter and backward smoother");
  auto* abduct = app.add_subcommand("abduct", "noise posterior from the smoothed history");
  auto* counterfactual = app.add_subcommand("counterfactual", "generate the counterfactual ensemble");
  auto* metrics = app.add_subcommand("metrics", "RMSE_t and factual RMSE");
  auto* plot = app.add_subcommand("plot", "render SVG figures from a run directory");
  auto* run = app.add_subcommand("run", "full pipeline");
  auto* grid = app.add_subcommand("grid", "noise-pair x regime grid");
  for (auto* cmd : {simulate, filter, abduct, counterfactual, metrics, plot, run, grid}) {
    add_common(*cmd, args);
  }
  run->add_flag("!--no-plots", plots, "skip SVG rendering");
  run->add_flag("--keep-history", keep_history, "also write history.bin");
  grid->add_flag("!--no-plots", plots, "skip SVG rendering");
  grid->add_flag("--both-orderings", both_orderings, "also run every noise pair swapped");
  grid->add_option("--regimes", regime_names, "true_theta, point_estimate, posterior_sample");
  app.add_subcommand("presets", "list built-in presets")->callback([] {
    for (const auto& name : preset_names()) std::cout << name << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(args);
    if (*filter) return cmd_filter(args);
    if (*abduct) return cmd_abduct(args);
    if (*counterfactual) return cmd_counterfactual(args);
    if (*metrics) return cmd_metrics(args);
    if (*plot) return cmd_plot(args);
    if (*run) return cmd_run(args, plots, keep_history);
    if (*grid) return cmd_grid(args, both_orderings, regime_names, plots);
    return 0;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
