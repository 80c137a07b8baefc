#include "cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "rffslam/checkpoint.hpp"
#include "rffslam/errors.hpp"
#include "rffslam/io.hpp"
#include "rffslam/sim.hpp"

namespace rffslam::cli {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

double degrees_to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

std::string convergence_csv(const std::vector<UpdateLog>& updates) {
  std::string out = "update,iteration,lambda,objective,trial_objective,accepted,cg_iterations\n";
  for (const auto& u : updates) {
    for (const auto& it : u.report.log) {
      out += std::to_string(u.update) + ',' + std::to_string(it.iteration) + ',' +
             io::format_double(it.lambda) + ',' + io::format_double(it.objective) + ',' +
             io::format_double(it.trial_objective) + ',' + (it.accepted ? "1" : "0") + ',' +
             std::to_string(it.cg_iterations) + '\n';
    }
  }
  return out;
}

ordered_json summary_json(const PipelineResult& result) {
  ordered_json j;
  j["final_objective"] = result.final_objective;
  j["num_poses"] = result.trajectory.size();
  j["num_landmarks"] = result.landmarks.size();
  j["headings_from_motion"] = result.headings_from_motion;
  ordered_json updates = ordered_json::array();
  for (const auto& u : result.updates) {
    ordered_json e;
    e["update"] = u.update;
    e["num_measurements"] = u.num_measurements;
    e["last_time"] = u.last_time;
    e["iterations"] = u.report.iterations;
    e["accepted_steps"] = u.report.accepted_steps;
    e["converged"] = u.report.converged;
    e["initial_objective"] = u.report.initial_objective;
    e["final_objective"] = u.report.final_objective;
    e["final_lambda"] = u.report.final_lambda;
    updates.push_back(e);
  }
  j["updates"] = updates;
  return j;
}

io::Dataset load_run_dataset(const RunConfig& config) {
  if (config.scenario) return io::scenario_to_dataset(sim::make_scenario(*config.scenario));
  io::LoadOptions options;
  options.format = config.loader.format;
  options.strict = config.loader.strict;
  options.range_sigma = config.loader.range_sigma;
  options.bearing_sigma = config.loader.bearing_sigma;
  options.max_landmarks = config.loader.max_landmarks;
  options.min_per_keyframe = config.loader.min_per_keyframe;
  options.seed = config.pipeline.estimator.solver.seed;
  io::LoadReport report;
  io::Dataset ds = io::load_dataset(*config.dataset, options, &report);
  return ds;
}

Trajectory load_ground_truth(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "dataset.txt";
  if (p.extension() == ".csv") return io::load_trajectory_csv(p);
  return io::load_dataset(p).ground_truth;
}

// ---- Flag plumbing ----------------------------------------------------------

struct ScenarioFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> num_landmarks;
  std::optional<double> duration;
  std::optional<double> cadence;
  std::optional<std::string> kind;
  std::optional<double> range_noise;
  std::optional<double> bearing_noise;
  std::optional<double> bearing_noise_deg;
  std::optional<double> max_range;
  std::optional<double> odometry_velocity_noise;
  std::optional<double> odometry_yaw_noise;

  void add(CLI::App& app) {
    app.add_option("--seed", seed, "Scenario seed (default 0)");
    app.add_option("--landmarks", num_landmarks, "Number of landmarks (default 20)");
    app.add_option("--duration", duration, "Trajectory duration in s (default 10)");
    app.add_option("--cadence", cadence, "Measurement cadence in s (default 0.1)");
    app.add_option("--kind", kind, "range | bearing | range_bearing (default range_bearing)");
    app.add_option("--range-noise", range_noise, "Range noise std in m (default 2)");
    app.add_option("--bearing-noise", bearing_noise, "Bearing noise std in rad (default 3 deg)");
    app.add_option("--bearing-noise-deg", bearing_noise_deg, "Bearing noise std in degrees");
    app.add_option("--max-range", max_range, "Sensor range limit in m, 0 = unlimited (default 0)");
    app.add_option("--odometry-velocity-noise", odometry_velocity_noise,
                   "Odometry speed noise std in m/s (default 0)");
    app.add_option("--odometry-yaw-noise", odometry_yaw_noise,
                   "Odometry yaw-rate noise std in rad/s (default 0)");
  }

  void apply(sim::ScenarioConfig& c) const {
    if (bearing_noise && bearing_noise_deg) {
      throw ValidationError("give --bearing-noise or --bearing-noise-deg, not both");
    }
    if (seed) c.seed = *seed;
    if (num_landmarks) c.num_landmarks = *num_landmarks;
    if (duration) c.trajectory.duration = *duration;
    if (cadence) c.trajectory.cadence = *cadence;
    if (kind) c.kind = parse_measurement_kind(*kind);
    if (range_noise) c.range_noise_std = *range_noise;
    if (bearing_noise) c.bearing_noise_std = *bearing_noise;
    if (bearing_noise_deg) c.bearing_noise_std = degrees_to_radians(*bearing_noise_deg);
    if (max_range) c.sensor_max_range = *max_range;
    if (odometry_velocity_noise) c.odometry_velocity_std = *odometry_velocity_noise;
    if (odometry_yaw_noise) c.odometry_yaw_rate_std = *odometry_yaw_noise;
  }
};

struct RunFlags {
  std::optional<std::string> dataset;
  std::optional<std::string> scenario;
  std::optional<std::string> format;
  std::optional<std::string> prior;
  std::optional<std::string> kind;
  std::optional<int> batch_size;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<int> features;
  std::optional<double> lengthscale;
  std::optional<double> time_scale;
  std::optional<double> weight_prior_variance;
  std::optional<double> landmark_prior_variance;
  std::optional<double> lambda;
  std::optional<double> tolerance;
  std::optional<int> max_iterations;
  std::optional<double> cg_tolerance;
  std::optional<int> cg_max_iter;
  std::optional<double> range_sigma;
  std::optional<double> bearing_sigma;
  std::optional<int> max_landmarks;
  std::optional<double> smoothing;
  std::optional<int> spline_refinements;
  bool lenient = false;

  void add(CLI::App& app, bool with_inputs) {
    if (with_inputs) {
      app.add_option("--dataset", dataset, "Dataset path (file, or directory for plaza)");
      app.add_option("--scenario", scenario, "Scenario JSON to simulate instead of a dataset");
      app.add_option("--format", format, "canonical | plaza | bearing_csv (default canonical)");
      app.add_option("--out", output, "Output directory (default out)");
      app.add_flag("--lenient", lenient, "Skip malformed rows instead of failing");
    }
    app.add_option("--prior", prior, "motion | spline (default motion)");
    app.add_option("--measurement-kind", kind, "Use only this kind: range | bearing | range_bearing");
    app.add_option("--batch-size", batch_size,
                   "Measurements per update, 0 = one batch (default 5 for plaza, else 0)");
    app.add_option("--basis-seed", seed, "Random feature seed (default 0)");
    app.add_option("--features", features, "Number of random features D, even (default 100)");
    app.add_option("--lengthscale", lengthscale, "RBF lengthscale in s (default 3.0)");
    app.add_option("--time-scale", time_scale, "Factor applied to time before the kernel (default 1)");
    app.add_option("--weight-prior-variance", weight_prior_variance, "K_m = v I (default 1)");
    app.add_option("--landmark-prior-variance", landmark_prior_variance, "L = v I (default 1e4)");
    app.add_option("--lambda", lambda, "Initial LM damping (default 1e-3)");
    app.add_option("--tolerance", tolerance, "Relative objective change to stop (default 1e-6)");
    app.add_option("--max-iterations", max_iterations, "LM trials per update (default 50)");
    app.add_option("--cg-tolerance", cg_tolerance, "Relative CG residual (default 1e-8)");
    app.add_option("--cg-max-iter", cg_max_iter, "CG iteration cap, 0 = 10 x dimension (default 0)");
    app.add_option("--range-sigma", range_sigma, "Range std for files without one, m (default 0.3)");
    app.add_option("--bearing-sigma", bearing_sigma,
                   "Bearing std for files without one, rad (default 0.02)");
    app.add_option("--max-landmarks", max_landmarks,
                   "bearing_csv: weighted landmark subsampling cap, 0 = off (default 0)");
    app.add_option("--spline-smoothing", smoothing, "Spline smoothing parameter p (default 0.98)");
    app.add_option("--spline-refinements", spline_refinements,
                   "Extra refresh passes with the spline prior (default 1)");
  }

  void apply(RunConfig& c) const {
    if (dataset) {
      c.dataset = *dataset;
      c.scenario.reset();
    }
    if (scenario) {
      sim::ScenarioConfig s;
      from_json(read_json_file(*scenario), s);
      c.scenario = s;
      if (!dataset) c.dataset.reset();
    }
    if (format) c.loader.format = io::parse_dataset_format(*format);
    if (lenient) c.loader.strict = false;
    if (output) c.output = *output;
    auto& solver = c.pipeline.estimator.solver;
    if (prior) c.pipeline.estimator.prior = parse_prior_kind(*prior);
    if (kind) c.pipeline.kind_filter = parse_measurement_kind(*kind);
    if (batch_size) c.batch_size = *batch_size;
    if (seed) solver.seed = *seed;
    if (features) solver.num_features = *features;
    if (lengthscale) solver.lengthscale = *lengthscale;
    if (time_scale) solver.time_scale = *time_scale;
    if (weight_prior_variance) solver.weight_prior_variance = *weight_prior_variance;
    if (landmark_prior_variance) solver.landmark_prior_variance = *landmark_prior_variance;
    if (lambda) solver.lm_lambda_init = *lambda;
    if (tolerance) solver.tolerance = *tolerance;
    if (max_iterations) solver.max_iterations = *max_iterations;
    if (cg_tolerance) solver.cg_tolerance = *cg_tolerance;
    if (cg_max_iter) solver.cg_max_iter = *cg_max_iter;
    if (range_sigma) c.loader.range_sigma = *range_sigma;
    if (bearing_sigma) c.loader.bearing_sigma = *bearing_sigma;
    if (max_landmarks) c.loader.max_landmarks = *max_landmarks;
    if (smoothing) c.pipeline.estimator.spline.smoothing = *smoothing;
    if (spline_refinements) c.pipeline.spline_refinements = *spline_refinements;
  }
};

template <class T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, std::string>) {
      out.push_back(item);
    } else {
      const auto v = io::parse_double(item);
      if (!v) throw ValidationError(std::string(flag) + ": not a number: '" + item + "'");
      out.push_back(static_cast<T>(*v));
    }
  }
  if (out.empty()) throw ValidationError(std::string(flag) + ": empty list");
  return out;
}

// ---- sweep ------------------------------------------------------------------

struct SweepJob {
  sim::ScenarioConfig scenario;
};

struct SweepRow {
  eval::EvalReport report;
  eval::RelativeErrors relative;
  double final_objective = 0.0;
  std::string error;
};

SweepRow run_job(const SweepJob& job, const RunConfig& base) {
  SweepRow row;
  try {
    const sim::Scenario scenario = sim::make_scenario(job.scenario);
    PipelineConfig pipeline = base.pipeline;
    pipeline.batch_size = base.batch_size.value_or(0);
    const PipelineResult result = run_pipeline(io::scenario_to_dataset(scenario), pipeline);
    const auto [est, gt] = eval::associate(result.trajectory, scenario.ground_truth);
    row.report = eval::evaluate(est, gt);
    row.relative = eval::relative_errors(est, gt, result.landmarks, scenario.landmarks);
    row.final_objective = result.final_objective;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

int cmd_sweep(const RunConfig& base, const std::vector<SweepJob>& jobs, int parallel,
              const std::string& out_dir, std::ostream& out) {
  std::vector<SweepRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) rows[i] = run_job(jobs[i], base);
  };
  const int threads = std::max(1, std::min<int>(parallel, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::string csv =
      "seed,kind,num_landmarks,range_noise_std,bearing_noise_std,ape_trans,ape_rot,rpe_trans,"
      "rpe_rot,rel_position,rel_rotation,rel_landmarks,final_objective,error\n";
  struct Acc {
    double ape_trans = 0, ape_rot = 0, rpe_trans = 0, rpe_rot = 0;
    int n = 0;
  };
  std::map<std::tuple<std::string, int, double, double>, Acc> groups;
  int failures = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& c = jobs[i].scenario;
    const auto& r = rows[i];
    const auto f = [](double v) { return io::format_double(v); };
    csv += std::to_string(c.seed) + ',' + std::string(to_string(c.kind)) + ',' +
           std::to_string(c.num_landmarks) + ',' + f(c.range_noise_std) + ',' + f(c.bearing_noise_std) + ',';
    if (r.error.empty()) {
      csv += f(r.report.ape_trans) + ',' + f(r.report.ape_rot) + ',' + f(r.report.rpe_trans) + ',' +
             f(r.report.rpe_rot) + ',' + f(r.relative.position) + ',' + f(r.relative.rotation) + ',' +
             f(r.relative.landmarks.value_or(0.0)) + ',' + f(r.final_objective) + ",\n";
      auto& acc = groups[{std::string(to_string(c.kind)), c.num_landmarks, c.range_noise_std,
                          c.bearing_noise_std}];
      acc.ape_trans += r.report.ape_trans;
      acc.ape_rot += r.report.ape_rot;
      acc.rpe_trans += r.report.rpe_trans;
      acc.rpe_rot += r.report.rpe_rot;
      ++acc.n;
    } else {
      ++failures;
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      csv += ",,,,,,,," + msg + '\n';
    }
  }
  std::string agg = "kind,num_landmarks,range_noise_std,bearing_noise_std,runs,ape_trans,ape_rot,rpe_trans,rpe_rot\n";
  for (const auto& [key, acc] : groups) {
    const auto& [kind, m, rn, bn] = key;
    const auto f = [](double v) { return io::format_double(v); };
    agg += kind + ',' + std::to_string(m) + ',' + f(rn) + ',' + f(bn) + ',' + std::to_string(acc.n) + ',' +
           f(acc.ape_trans / acc.n) + ',' + f(acc.ape_rot / acc.n) + ',' + f(acc.rpe_trans / acc.n) + ',' +
           f(acc.rpe_rot / acc.n) + '\n';
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir, ec.message());
  io::write_file(fs::path(out_dir) / "runs.csv", csv);
  io::write_file(fs::path(out_dir) / "aggregate.csv", agg);
  write_json_file((fs::path(out_dir) / "run_config.json").string(), to_json(base));
  out << "sweep: " << jobs.size() << " runs, " << failures << " failed -> " << out_dir << "\n";
  return failures == 0 ? kOk : kNumericalFailure;
}

int dispatch(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic scenario datasets");
  ScenarioFlags sim_flags;
  std::optional<std::string> sim_config;
  std::string sim_out = "scenario";
  int num_seeds = 1;
  sim_flags.add(*simulate);
  simulate->add_option("--config", sim_config, "Scenario JSON; flags override it");
  simulate->add_option("--out", sim_out, "Output directory (default scenario)");
  simulate->add_option("--num-seeds", num_seeds,
                       "Emit this many scenarios, seeds seed..seed+n-1, in seed_<n>/ (default 1)");

  // run
  auto* run_cmd = app.add_subcommand("run", "Estimate trajectory and landmarks");
  RunFlags run_flags;
  std::optional<std::string> run_config;
  run_flags.add(*run_cmd, true);
  run_cmd->add_option("--config", run_config, "Run config JSON; flags override it");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Compute APE/RPE of an estimate");
  std::string eval_estimate, eval_truth, eval_out = "eval";
  eval_cmd->add_option("--estimate", eval_estimate, "Trajectory CSV or run directory")->required();
  eval_cmd->add_option("--ground-truth", eval_truth,
                       "Trajectory CSV, canonical dataset, or scenario directory")->required();
  eval_cmd->add_option("--out", eval_out, "Output directory (default eval)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Simulate, estimate and evaluate over a grid");
  RunFlags sweep_run_flags;
  ScenarioFlags sweep_sim_flags;
  std::optional<std::string> sweep_config, sweep_scenario;
  std::string sweep_out = "sweep";
  int sweep_seeds = 10;
  int parallel = 1;
  std::optional<std::string> kinds, range_noises, bearing_noises_deg, landmark_counts;
  sweep_run_flags.add(*sweep, false);
  sweep->add_option("--config", sweep_config, "Run config JSON for the estimator settings");
  sweep->add_option("--scenario", sweep_scenario, "Base scenario JSON");
  sweep->add_option("--seed", sweep_sim_flags.seed, "First scenario seed (default 0)");
  sweep->add_option("--num-seeds", sweep_seeds, "Seeds per grid point (default 10)");
  sweep->add_option("--kinds", kinds, "Comma list of measurement kinds (default range_bearing)");
  sweep->add_option("--range-noise", range_noises, "Comma list of range stds in m (default 2)");
  sweep->add_option("--bearing-noise-deg", bearing_noises_deg,
                    "Comma list of bearing stds in degrees (default 3)");
  sweep->add_option("--landmarks", landmark_counts, "Comma list of landmark counts (default 20)");
  sweep->add_option("--parallel-scenarios", parallel, "Scenarios run concurrently (default 1)");
  sweep->add_option("--out", sweep_out, "Output directory (default sweep)");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kValidationFailure;
  }
  for (auto* sub : {simulate, run_cmd, eval_cmd, sweep}) {
    if (sub->count("--help") > 0) {
      out << sub->help();
      return kOk;
    }
  }

  if (simulate->parsed()) {
    sim::ScenarioConfig config;
    if (sim_config) from_json(read_json_file(*sim_config), config);
    sim_flags.apply(config);
    if (num_seeds < 1) throw ValidationError("--num-seeds must be >= 1");
    try {
      config.validate();
    } catch (const InvalidArgument& e) {
      throw ValidationError(e.what());
    }
    if (num_seeds == 1) {
      write_scenario(config, sim_out);
      out << "simulate: seed " << config.seed << " -> " << sim_out << "\n";
    } else {
      for (int k = 0; k < num_seeds; ++k) {
        sim::ScenarioConfig c = config;
        c.seed = config.seed + static_cast<std::uint64_t>(k);
        const std::string dir = (fs::path(sim_out) / ("seed_" + std::to_string(c.seed))).string();
        write_scenario(c, dir);
      }
      out << "simulate: " << num_seeds << " scenarios -> " << sim_out << "\n";
    }
    return kOk;
  }

  if (run_cmd->parsed()) {
    RunConfig config;
    if (run_config) from_json(read_json_file(*run_config), config);
    run_flags.apply(config);
    config.validate();
    const PipelineResult result = run_estimation(config, out);
    out << "final objective: " << io::format_double(result.final_objective) << "\n";
    return kOk;
  }

  if (eval_cmd->parsed()) {
    const eval::EvalReport report = evaluate_paths(eval_estimate, eval_truth);
    std::error_code ec;
    fs::create_directories(eval_out, ec);
    if (ec) throw IoError(eval_out, ec.message());
    io::write_file(fs::path(eval_out) / "metrics.json", eval::report_to_json(report));
    io::write_file(fs::path(eval_out) / "errors.csv", eval::report_series_csv(report));
    out << "ape_trans " << io::format_double(report.ape_trans) << " ape_rot "
        << io::format_double(report.ape_rot) << " rpe_trans " << io::format_double(report.rpe_trans)
        << " rpe_rot " << io::format_double(report.rpe_rot) << "\n";
    return kOk;
  }

  // sweep
  RunConfig base;
  if (sweep_config) from_json(read_json_file(*sweep_config), base);
  sweep_run_flags.apply(base);
  try {
    base.pipeline.estimator.solver.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(e.what());
  }
  sim::ScenarioConfig scenario;
  if (sweep_scenario) from_json(read_json_file(*sweep_scenario), scenario);
  sweep_sim_flags.apply(scenario);
  if (sweep_seeds < 1) throw ValidationError("--num-seeds must be >= 1");
  if (parallel < 1) throw ValidationError("--parallel-scenarios must be >= 1");
  const auto kind_list = kinds ? parse_list<std::string>(*kinds, "--kinds")
                               : std::vector<std::string>{std::string(to_string(scenario.kind))};
  const auto range_list = range_noises ? parse_list<double>(*range_noises, "--range-noise")
                                       : std::vector<double>{scenario.range_noise_std};
  std::vector<double> bearing_list{scenario.bearing_noise_std};
  if (bearing_noises_deg) {
    bearing_list.clear();
    for (double d : parse_list<double>(*bearing_noises_deg, "--bearing-noise-deg")) {
      bearing_list.push_back(degrees_to_radians(d));
    }
  }
  const auto landmark_list = landmark_counts ? parse_list<int>(*landmark_counts, "--landmarks")
                                             : std::vector<int>{scenario.num_landmarks};
  std::vector<SweepJob> jobs;
  for (const auto& kind : kind_list) {
    for (int m : landmark_list) {
      for (double rn : range_list) {
        for (double bn : bearing_list) {
          for (int k = 0; k < sweep_seeds; ++k) {
            sim::ScenarioConfig c = scenario;
            c.kind = parse_measurement_kind(kind);
            c.num_landmarks = m;
            c.range_noise_std = rn;
            c.bearing_noise_std = bn;
            c.seed = scenario.seed + static_cast<std::uint64_t>(k);
            try {
              c.validate();
            } catch (const InvalidArgument& e) {
              throw ValidationError(e.what());
            }
            jobs.push_back({c});
          }
        }
      }
    }
  }
  return cmd_sweep(base, jobs, parallel, sweep_out, out);
}

}  // namespace

void write_scenario(const sim::ScenarioConfig& config, const std::string& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError(directory, ec.message());
  const sim::Scenario scenario = sim::make_scenario(config);
  io::save_dataset(io::scenario_to_dataset(scenario), fs::path(directory) / "dataset.txt");
  write_json_file((fs::path(directory) / "scenario.json").string(), to_json(config));
}

PipelineResult run_estimation(const RunConfig& config, std::ostream& log) {
  config.validate();
  const io::Dataset dataset = load_run_dataset(config);
  PipelineConfig pipeline = config.pipeline;
  pipeline.batch_size = config.effective_batch_size();
  const PipelineResult result = run_pipeline(dataset, pipeline);

  const fs::path dir(config.output);
  std::optional<eval::EvalReport> report;
  if (!dataset.ground_truth.empty()) {
    const auto [est, gt] = eval::associate(result.trajectory, dataset.ground_truth);
    report = eval::evaluate(est, gt);
  }
  io::save_results(result.trajectory, result.landmarks, report ? &*report : nullptr, dir);
  io::write_file(dir / "convergence.csv", convergence_csv(result.updates));
  write_json_file((dir / "summary.json").string(), summary_json(result));
  save_checkpoint(dir / "checkpoint.json", result.state, result.model);
  write_json_file((dir / "run_config.json").string(), to_json(config));
  for (const auto& u : result.updates) {
    log << "update " << u.update << ": " << u.num_measurements << " measurements, "
        << u.report.iterations << " iterations, objective "
        << io::format_double(u.report.initial_objective) << " -> "
        << io::format_double(u.report.final_objective) << (u.report.converged ? "" : " (not converged)")
        << "\n";
  }
  if (report) {
    log << "ape_trans " << io::format_double(report->ape_trans) << " ape_rot "
        << io::format_double(report->ape_rot) << "\n";
  }
  return result;
}

eval::EvalReport evaluate_paths(const std::string& estimate, const std::string& ground_truth) {
  fs::path est_path(estimate);
  if (fs::is_directory(est_path)) est_path /= "trajectory.csv";
  const Trajectory est = io::load_trajectory_csv(est_path);
  const Trajectory gt = load_ground_truth(ground_truth);
  const auto [e, g] = eval::associate(est, gt);
  return eval::evaluate(e, g);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-time 2D SLAM with random Fourier feature trajectories", "rffslam"};
  try {
    return dispatch(app, args, out, err);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\nRun with --help for usage.\n";
    return kValidationFailure;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\nRun with --help for usage.\n";
    return kValidationFailure;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace rffslam::cli
