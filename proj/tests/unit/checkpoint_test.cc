#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "rffslam/checkpoint.hpp"
#include "rffslam/errors.hpp"

namespace rffslam {
namespace {

TEST(Checkpoint, BasisRoundTrip) {
  const FeatureBasis basis = sample_frequencies(30, 2.5, 1, 77);
  EXPECT_EQ(basis_from_json(basis_to_json(basis)), basis);
}

TEST(Checkpoint, BasisRejectsInconsistentFields) {
  EXPECT_THROW(basis_from_json("{not json"), ParseError);
  EXPECT_THROW(basis_from_json(R"({"num_features": 4, "lengthscale": 1.0, "seed": 0, "frequencies": [[1.0]]})"),
               InvalidArgument);
}

TEST(Checkpoint, StateRoundTripIsExact) {
  const oracle::Instance inst = oracle::random_instance(5, {.num_features = 8, .dense_weight_prior = true});
  const Checkpoint back = checkpoint_from_json(checkpoint_to_json(inst.state, inst.model));
  EXPECT_EQ(back.state, inst.state);
  EXPECT_EQ(back.model.bases, inst.model.bases);
  EXPECT_EQ(back.model.time_origin, inst.model.time_origin);
  EXPECT_EQ(back.model.time_scale, inst.model.time_scale);

  const auto path = std::filesystem::temp_directory_path() / "rffslam_checkpoint_test.json";
  save_checkpoint(path, inst.state, inst.model);
  EXPECT_EQ(load_checkpoint(path).state, inst.state);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace rffslam
