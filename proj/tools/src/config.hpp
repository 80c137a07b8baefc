#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "rffslam/io.hpp"
#include "rffslam/pipeline.hpp"
#include "rffslam/sim.hpp"

namespace rffslam::cli {

struct LoaderConfig {
  io::DatasetFormat format = io::DatasetFormat::kCanonical;
  bool strict = true;
  double range_sigma = 0.3;
  double bearing_sigma = 0.02;
  int max_landmarks = 0;
  int min_per_keyframe = 10;
};

struct RunConfig {
  std::optional<std::string> dataset;
  std::optional<sim::ScenarioConfig> scenario;
  LoaderConfig loader;
  PipelineConfig pipeline;
  // Unset means: 5 for plaza data, one batch otherwise.
  std::optional<int> batch_size;
  std::string output = "out";

  // Exactly one of dataset/scenario; the dataset must exist. Throws ValidationError.
  void validate() const;
  int effective_batch_size() const;
};

// JSON <-> config. Unknown keys are rejected with ValidationError so that
// typos in config files do not go unnoticed.
nlohmann::ordered_json to_json(const sim::ScenarioConfig& config);
void from_json(const nlohmann::json& j, sim::ScenarioConfig& config);
nlohmann::ordered_json to_json(const SolverConfig& config);
void from_json(const nlohmann::json& j, SolverConfig& config);
nlohmann::ordered_json to_json(const RunConfig& config);
void from_json(const nlohmann::json& j, RunConfig& config);

// Parses a JSON file; IoError if unreadable, ValidationError if malformed.
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::ordered_json& j);

}  // namespace rffslam::cli
