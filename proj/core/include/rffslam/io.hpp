#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rffslam/eval.hpp"
#include "rffslam/observation.hpp"
#include "rffslam/priors.hpp"
#include "rffslam/trajectory.hpp"

namespace rffslam::sim {
struct Scenario;
}

namespace rffslam::io {

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);
// Full-string parse; nullopt on trailing junk, empty input or overflow.
std::optional<double> parse_double(std::string_view text);

struct Dataset {
  Trajectory ground_truth;
  std::vector<OdometryControl> odometry;
  std::vector<Measurement> measurements;
  std::vector<LandmarkPrior> landmark_priors;
  // True landmark positions, when known.
  std::vector<Landmark2D> landmarks;
  std::map<std::string, std::string> metadata;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class DatasetFormat { kCanonical, kPlaza, kBearingCsv };

// "canonical", "plaza", "bearing_csv".
DatasetFormat parse_dataset_format(std::string_view text);
std::string_view to_string(DatasetFormat format);

struct LoadOptions {
  DatasetFormat format = DatasetFormat::kCanonical;
  // Throw ParseError on the first malformed row; otherwise skip and report it.
  bool strict = true;
  // Noise stds for sources that carry none.
  double range_sigma = 0.3;     // m
  double bearing_sigma = 0.02;  // rad
  // bearing_csv: cap on distinct landmarks when a weight column is present
  // (0 keeps all), and the per-keyframe floor the subsampling respects.
  int max_landmarks = 0;
  int min_per_keyframe = 10;
  std::uint64_t seed = 0;
};

struct Diagnostic {
  std::string source;
  std::size_t line = 0;
  std::string message;
};

struct LoadReport {
  // Non-blank, non-comment data rows seen.
  std::size_t rows = 0;
  std::size_t parsed = 0;
  std::vector<Diagnostic> malformed;
};

// Loader-added counts live under this metadata prefix and are not saved back.
inline constexpr std::string_view kLoadMetadataPrefix = "loaded.";

// Throws IoError (missing/unreadable), ParseError (strict mode, with the
// 1-based line) or ValidationError (decreasing timestamps within a stream).
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options = {},
                     LoadReport* report = nullptr);

// Canonical text from a string, for tests and converters.
Dataset parse_canonical(std::string_view text, const std::string& source = "<string>",
                        bool strict = true, LoadReport* report = nullptr);
std::string format_canonical(const Dataset& dataset);

// Writes the canonical format. Throws IoError with the path on failure.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Canonical content of a simulated scenario, with its config in metadata.
Dataset scenario_to_dataset(const sim::Scenario& scenario);

// trajectory.csv (time,x,y,heading), landmarks.csv (id,x,y) and, when a
// report is given, metrics.json and errors.csv in `directory`, which is
// created if needed.
void save_results(const Trajectory& trajectory, const std::vector<Landmark2D>& landmarks,
                  const eval::EvalReport* report, const std::filesystem::path& directory);

std::string format_trajectory_csv(const Trajectory& trajectory);
std::string format_landmarks_csv(const std::vector<Landmark2D>& landmarks);
// Accepts the trajectory.csv layout, header optional.
Trajectory load_trajectory_csv(const std::filesystem::path& path);
std::vector<Landmark2D> load_landmarks_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
// Truncates and writes; IoError on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace rffslam::io
