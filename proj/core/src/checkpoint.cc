#include "rffslam/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "rffslam/errors.hpp"

namespace rffslam {
namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty() || !rows.front().is_array()) {
    throw InvalidArgument("checkpoint: expected a non-empty array of rows");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
      throw InvalidArgument("checkpoint: ragged matrix");
    }
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return out;
}

json basis_json(const FeatureBasis& basis) {
  return {{"num_features", basis.num_features()},
          {"lengthscale", basis.lengthscale()},
          {"seed", basis.seed()},
          {"frequencies", matrix_to_json(basis.frequencies())}};
}

FeatureBasis basis_from(const json& j) {
  FeatureBasis basis(matrix_from_json(j.at("frequencies")), j.at("lengthscale").get<double>(),
                     j.at("seed").get<std::uint64_t>());
  if (basis.num_features() != j.at("num_features").get<int>()) {
    throw InvalidArgument("basis: num_features does not match the frequency rows");
  }
  return basis;
}

json parse(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what, 1, e.what());
  }
}

template <typename F>
auto with_json_errors(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace

std::string basis_to_json(const FeatureBasis& basis) { return basis_json(basis).dump(); }

FeatureBasis basis_from_json(std::string_view text) {
  const json j = parse(text, "basis");
  return with_json_errors([&] { return basis_from(j); });
}

std::string checkpoint_to_json(const WeightState& state, const StateModel& model) {
  json bases = json::array();
  for (const auto& b : model.bases) bases.push_back(basis_json(b));
  json weight_cov = json::array();
  for (int m = 0; m < kStateDim; ++m) weight_cov.push_back(matrix_to_json(state.weight_prior_cov(m)));
  json landmarks = json::array();
  for (int j = 0; j < state.num_landmarks(); ++j) {
    const LandmarkPrior prior = state.landmark_prior(j);
    landmarks.push_back({{"id", prior.id},
                         {"prior_mean", {prior.mean(0), prior.mean(1)}},
                         {"prior_cov", matrix_to_json(prior.cov)}});
  }
  json values = json::array();
  for (Eigen::Index i = 0; i < state.size(); ++i) values.push_back(state.values()(i));

  json j = {{"format", "rffslam-checkpoint"},
            {"version", 1},
            {"model",
             {{"time_origin", model.time_origin},
              {"time_scale", model.time_scale},
              {"bases", std::move(bases)}}},
            {"state",
             {{"num_features", state.num_features()},
              {"weight_prior_cov", std::move(weight_cov)},
              {"landmarks", std::move(landmarks)},
              {"values", std::move(values)}}}};
  return j.dump(1);
}

Checkpoint checkpoint_from_json(std::string_view text) {
  const json j = parse(text, "checkpoint");
  return with_json_errors([&] {
    Checkpoint out;
    const json& jm = j.at("model");
    out.model.time_origin = jm.at("time_origin").get<double>();
    out.model.time_scale = jm.at("time_scale").get<double>();
    const json& jb = jm.at("bases");
    if (!jb.is_array() || jb.size() != static_cast<std::size_t>(kStateDim)) {
      throw InvalidArgument("checkpoint: expected one basis per state dimension");
    }
    for (int m = 0; m < kStateDim; ++m) out.model.bases[m] = basis_from(jb[static_cast<std::size_t>(m)]);

    const json& js = j.at("state");
    std::vector<LandmarkPrior> priors;
    for (const auto& jl : js.at("landmarks")) {
      LandmarkPrior p;
      p.id = jl.at("id").get<LandmarkId>();
      p.mean = Eigen::Vector2d(jl.at("prior_mean").at(0).get<double>(),
                               jl.at("prior_mean").at(1).get<double>());
      p.cov = matrix_from_json(jl.at("prior_cov"));
      priors.push_back(p);
    }
    out.state = WeightState(js.at("num_features").get<int>(), priors);
    const json& jk = js.at("weight_prior_cov");
    for (int m = 0; m < kStateDim; ++m) {
      out.state.set_weight_prior_cov(m, matrix_from_json(jk.at(static_cast<std::size_t>(m))));
    }
    const auto& jv = js.at("values");
    Eigen::VectorXd values(static_cast<Eigen::Index>(jv.size()));
    for (std::size_t i = 0; i < jv.size(); ++i) values(static_cast<Eigen::Index>(i)) = jv[i].get<double>();
    out.state.set_values(values);
    if (out.model.num_features() != out.state.num_features()) {
      throw InvalidArgument("checkpoint: basis size does not match state");
    }
    return out;
  });
}

void save_checkpoint(const std::filesystem::path& path, const WeightState& state,
                     const StateModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << checkpoint_to_json(state, model) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str());
}

}  // namespace rffslam
