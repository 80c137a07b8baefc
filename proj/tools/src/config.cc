#include "config.hpp"

#include <filesystem>
#include <set>

#include "rffslam/errors.hpp"

namespace rffslam::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(where) + ": expected a JSON object");
  const std::set<std::string_view> keys(allowed);
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw ValidationError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& target) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

MeasurementKind read_kind(const json& j) {
  try {
    return parse_measurement_kind(j.get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("measurement kind: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ValidationError(e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (dataset.has_value() == scenario.has_value()) {
    throw ValidationError("exactly one of dataset or scenario must be given");
  }
  if (dataset && !std::filesystem::exists(*dataset)) {
    throw ValidationError("dataset not found: " + *dataset);
  }
  if (batch_size && *batch_size < 0) throw ValidationError("batch_size must be >= 0");
  if (scenario) {
    try {
      scenario->validate();
    } catch (const InvalidArgument& e) {
      throw ValidationError(e.what());
    }
  }
  try {
    pipeline.estimator.solver.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(e.what());
  }
  if (!(loader.range_sigma > 0.0) || !(loader.bearing_sigma > 0.0)) {
    throw ValidationError("loader sigmas must be > 0");
  }
}

int RunConfig::effective_batch_size() const {
  if (batch_size) return *batch_size;
  return dataset && loader.format == io::DatasetFormat::kPlaza ? 5 : 0;
}

ordered_json to_json(const sim::ScenarioConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["num_landmarks"] = c.num_landmarks;
  j["duration"] = c.trajectory.duration;
  j["cadence"] = c.trajectory.cadence;
  j["world_size"] = c.trajectory.world_size;
  j["max_speed"] = c.trajectory.max_speed;
  j["waypoint_interval"] = c.trajectory.waypoint_interval;
  j["turn_std"] = c.trajectory.turn_std;
  j["landmark_margin"] = c.landmark_margin;
  j["measurement_kind"] = std::string(to_string(c.kind));
  j["range_noise_std"] = c.range_noise_std;
  j["bearing_noise_std"] = c.bearing_noise_std;
  j["min_range_sigma"] = c.min_range_sigma;
  j["min_bearing_sigma"] = c.min_bearing_sigma;
  j["sensor_max_range"] = c.sensor_max_range;
  j["odometry_velocity_std"] = c.odometry_velocity_std;
  j["odometry_yaw_rate_std"] = c.odometry_yaw_rate_std;
  return j;
}

void from_json(const json& j, sim::ScenarioConfig& c) {
  check_keys(j, "scenario",
             {"seed", "num_landmarks", "duration", "cadence", "world_size", "max_speed",
              "waypoint_interval", "turn_std", "landmark_margin", "measurement_kind",
              "range_noise_std", "bearing_noise_std", "min_range_sigma", "min_bearing_sigma",
              "sensor_max_range", "odometry_velocity_std", "odometry_yaw_rate_std"});
  read(j, "seed", c.seed);
  read(j, "num_landmarks", c.num_landmarks);
  read(j, "duration", c.trajectory.duration);
  read(j, "cadence", c.trajectory.cadence);
  read(j, "world_size", c.trajectory.world_size);
  read(j, "max_speed", c.trajectory.max_speed);
  read(j, "waypoint_interval", c.trajectory.waypoint_interval);
  read(j, "turn_std", c.trajectory.turn_std);
  read(j, "landmark_margin", c.landmark_margin);
  if (j.contains("measurement_kind")) c.kind = read_kind(j.at("measurement_kind"));
  read(j, "range_noise_std", c.range_noise_std);
  read(j, "bearing_noise_std", c.bearing_noise_std);
  read(j, "min_range_sigma", c.min_range_sigma);
  read(j, "min_bearing_sigma", c.min_bearing_sigma);
  read(j, "sensor_max_range", c.sensor_max_range);
  read(j, "odometry_velocity_std", c.odometry_velocity_std);
  read(j, "odometry_yaw_rate_std", c.odometry_yaw_rate_std);
}

ordered_json to_json(const SolverConfig& c) {
  ordered_json j;
  j["num_features"] = c.num_features;
  j["lengthscale"] = c.lengthscale;
  j["time_scale"] = c.time_scale;
  j["seed"] = c.seed;
  j["weight_prior_variance"] = c.weight_prior_variance;
  j["landmark_prior_variance"] = c.landmark_prior_variance;
  j["lm_lambda_init"] = c.lm_lambda_init;
  j["lm_up"] = c.lm_up;
  j["lm_down"] = c.lm_down;
  j["tolerance"] = c.tolerance;
  j["max_iterations"] = c.max_iterations;
  j["cg_tolerance"] = c.cg_tolerance;
  j["cg_max_iter"] = c.cg_max_iter;
  return j;
}

void from_json(const json& j, SolverConfig& c) {
  check_keys(j, "solver",
             {"num_features", "lengthscale", "time_scale", "seed", "weight_prior_variance",
              "landmark_prior_variance", "lm_lambda_init", "lm_up", "lm_down", "tolerance",
              "max_iterations", "cg_tolerance", "cg_max_iter"});
  read(j, "num_features", c.num_features);
  read(j, "lengthscale", c.lengthscale);
  read(j, "time_scale", c.time_scale);
  read(j, "seed", c.seed);
  read(j, "weight_prior_variance", c.weight_prior_variance);
  read(j, "landmark_prior_variance", c.landmark_prior_variance);
  read(j, "lm_lambda_init", c.lm_lambda_init);
  read(j, "lm_up", c.lm_up);
  read(j, "lm_down", c.lm_down);
  read(j, "tolerance", c.tolerance);
  read(j, "max_iterations", c.max_iterations);
  read(j, "cg_tolerance", c.cg_tolerance);
  read(j, "cg_max_iter", c.cg_max_iter);
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["dataset"] = c.dataset ? ordered_json(*c.dataset) : ordered_json(nullptr);
  j["scenario"] = c.scenario ? to_json(*c.scenario) : ordered_json(nullptr);
  ordered_json loader;
  loader["format"] = std::string(io::to_string(c.loader.format));
  loader["strict"] = c.loader.strict;
  loader["range_sigma"] = c.loader.range_sigma;
  loader["bearing_sigma"] = c.loader.bearing_sigma;
  loader["max_landmarks"] = c.loader.max_landmarks;
  loader["min_per_keyframe"] = c.loader.min_per_keyframe;
  j["loader"] = loader;
  j["prior"] = std::string(to_string(c.pipeline.estimator.prior));
  j["measurement_kind"] = c.pipeline.kind_filter
                              ? ordered_json(std::string(to_string(*c.pipeline.kind_filter)))
                              : ordered_json(nullptr);
  j["batch_size"] = c.effective_batch_size();
  j["solver"] = to_json(c.pipeline.estimator.solver);
  ordered_json spline;
  spline["smoothing"] = c.pipeline.estimator.spline.smoothing;
  spline["weight_floor"] = c.pipeline.estimator.spline.weight_floor;
  spline["refinements"] = c.pipeline.spline_refinements;
  j["spline"] = spline;
  j["output"] = c.output;
  return j;
}

void from_json(const json& j, RunConfig& c) {
  check_keys(j, "run config",
             {"dataset", "scenario", "loader", "prior", "measurement_kind", "batch_size", "solver",
              "spline", "output"});
  if (j.contains("dataset") && !j.at("dataset").is_null()) {
    c.dataset = j.at("dataset").get<std::string>();
  }
  if (j.contains("scenario") && !j.at("scenario").is_null()) {
    sim::ScenarioConfig s;
    from_json(j.at("scenario"), s);
    c.scenario = s;
  }
  if (j.contains("loader")) {
    const auto& l = j.at("loader");
    check_keys(l, "loader",
               {"format", "strict", "range_sigma", "bearing_sigma", "max_landmarks", "min_per_keyframe"});
    if (l.contains("format")) {
      try {
        c.loader.format = io::parse_dataset_format(l.at("format").get<std::string>());
      } catch (const InvalidArgument& e) {
        throw ValidationError(e.what());
      }
    }
    read(l, "strict", c.loader.strict);
    read(l, "range_sigma", c.loader.range_sigma);
    read(l, "bearing_sigma", c.loader.bearing_sigma);
    read(l, "max_landmarks", c.loader.max_landmarks);
    read(l, "min_per_keyframe", c.loader.min_per_keyframe);
  }
  if (j.contains("prior")) {
    try {
      c.pipeline.estimator.prior = parse_prior_kind(j.at("prior").get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ValidationError(e.what());
    }
  }
  if (j.contains("measurement_kind") && !j.at("measurement_kind").is_null()) {
    c.pipeline.kind_filter = read_kind(j.at("measurement_kind"));
  }
  if (j.contains("batch_size") && !j.at("batch_size").is_null()) {
    int b = 0;
    read(j, "batch_size", b);
    c.batch_size = b;
  }
  if (j.contains("solver")) from_json(j.at("solver"), c.pipeline.estimator.solver);
  if (j.contains("spline")) {
    const auto& s = j.at("spline");
    check_keys(s, "spline", {"smoothing", "weight_floor", "refinements"});
    read(s, "smoothing", c.pipeline.estimator.spline.smoothing);
    read(s, "weight_floor", c.pipeline.estimator.spline.weight_floor);
    read(s, "refinements", c.pipeline.spline_refinements);
  }
  read(j, "output", c.output);
}

nlohmann::json read_json_file(const std::string& path) {
  const std::string text = io::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const ordered_json& j) {
  io::write_file(path, j.dump(2) + "\n");
}

}  // namespace rffslam::cli
