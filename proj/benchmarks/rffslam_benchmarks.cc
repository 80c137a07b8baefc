#include <benchmark/benchmark.h>

#include "rffslam/estimator.hpp"
#include "rffslam/eval.hpp"
#include "rffslam/features.hpp"
#include "rffslam/io.hpp"
#include "rffslam/pipeline.hpp"
#include "rffslam/sim.hpp"

namespace rffslam {
namespace {

io::Dataset scenario(double duration) {
  sim::ScenarioConfig config;
  config.seed = 1;
  config.trajectory.duration = duration;
  return io::scenario_to_dataset(sim::make_scenario(config));
}

struct Problem {
  WeightState state;
  StateModel model;
  PriorMeanFn prior;
  std::vector<Measurement> measurements;
};

Problem problem(double duration, int num_features) {
  const io::Dataset ds = scenario(duration);
  PipelineConfig config;
  config.estimator.solver.num_features = num_features;
  PipelineResult result = run_pipeline(ds, config);
  const Trajectory truth = ds.ground_truth;
  PriorMeanFn prior = [truth](double t) { return interpolate_linear(truth, t); };
  return {result.state, result.model, prior, ds.measurements};
}

void BM_FeatureMap(benchmark::State& state) {
  const FeatureBasis basis = sample_frequencies(static_cast<int>(state.range(0)), 3.0, 1, 0);
  Eigen::VectorXd out(basis.num_features());
  double t = 0.0;
  for (auto _ : state) {
    basis.map_into(t, out);
    benchmark::DoNotOptimize(out.data());
    t += 0.01;
  }
}
BENCHMARK(BM_FeatureMap)->Arg(100)->Arg(1000)->Arg(4000);

void BM_Matvec(benchmark::State& state) {
  const Problem p = problem(static_cast<double>(state.range(0)), 100);
  const LinearizedSystem system = assemble_system(p.state, p.measurements, p.model, p.prior);
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(system.size());
  Eigen::VectorXd out(system.size());
  for (auto _ : state) {
    system.apply(v, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["measurements"] = static_cast<double>(p.measurements.size());
}
BENCHMARK(BM_Matvec)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMicrosecond);

void BM_Linearize(benchmark::State& state) {
  const Problem p = problem(10.0, static_cast<int>(state.range(0)));
  const MeasurementProblem prepared(p.measurements, p.model, p.prior, p.state);
  for (auto _ : state) benchmark::DoNotOptimize(prepared.linearize(p.state).objective());
}
BENCHMARK(BM_Linearize)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond);

void BM_LmSolve(benchmark::State& state) {
  const Problem p = problem(10.0, static_cast<int>(state.range(0)));
  const LinearizedSystem system = assemble_system(p.state, p.measurements, p.model, p.prior);
  for (auto _ : state) benchmark::DoNotOptimize(lm_solve(system, 1e-3).delta.data());
}
BENCHMARK(BM_LmSolve)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  const io::Dataset ds = scenario(10.0);
  PipelineConfig config;
  config.estimator.solver.num_features = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(ds, config).final_objective);
}
BENCHMARK(BM_Pipeline)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Ape(benchmark::State& state) {
  const io::Dataset ds = scenario(static_cast<double>(state.range(0)));
  Trajectory estimate = ds.ground_truth;
  for (auto& p : estimate) p.pose.x += 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate(estimate, ds.ground_truth).ape_trans);
}
BENCHMARK(BM_Ape)->Arg(10)->Arg(100)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace rffslam

BENCHMARK_MAIN();
