#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "rffslam/eval.hpp"
#include "rffslam/pipeline.hpp"

namespace rffslam::cli {

enum ExitCode : int { kOk = 0, kValidationFailure = 1, kNumericalFailure = 2, kIoFailure = 3 };

// Full command line, argv[0] included. Never throws; errors become messages
// on `err` and the matching exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// simulate: <dir>/dataset.txt (canonical) and <dir>/scenario.json.
void write_scenario(const sim::ScenarioConfig& config, const std::string& directory);

// run: estimates and writes trajectory.csv, landmarks.csv, convergence.csv,
// summary.json, checkpoint.json and run_config.json, plus metrics.json and
// errors.csv when ground truth is available.
PipelineResult run_estimation(const RunConfig& config, std::ostream& log);

// eval: `estimate` is a trajectory CSV or a run directory; `ground_truth` is a
// trajectory CSV, a canonical dataset or a directory holding dataset.txt.
eval::EvalReport evaluate_paths(const std::string& estimate, const std::string& ground_truth);

}  // namespace rffslam::cli
