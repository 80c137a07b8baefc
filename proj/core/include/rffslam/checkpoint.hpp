#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rffslam/estimator.hpp"
#include "rffslam/features.hpp"

namespace rffslam {

// {"num_features", "lengthscale", "seed", "frequencies": [[...], ...]}
std::string basis_to_json(const FeatureBasis& basis);
// Throws ParseError on malformed JSON or InvalidArgument on inconsistent fields.
FeatureBasis basis_from_json(std::string_view json);

struct Checkpoint {
  WeightState state;
  StateModel model;
};

// Estimator state plus the three bases. Doubles are written in shortest
// round-trip form, so load(save(x)) == x.
std::string checkpoint_to_json(const WeightState& state, const StateModel& model);
Checkpoint checkpoint_from_json(std::string_view json);

void save_checkpoint(const std::filesystem::path& path, const WeightState& state,
                     const StateModel& model);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rffslam
