#include <benchmark/benchmark.h>

#include "aggopt/engine.hpp"
#include "aggopt/graph.hpp"
#include "aggopt/oracle.hpp"
#include "aggopt/problem.hpp"

namespace {

using namespace aggopt;

SimConfig der_config(double t_end) {
  SimConfig cfg{make_der_instance(), ring_graph(4)};
  cfg.delta = 0.1;
  cfg.step = 1e-3;
  cfg.t_end = t_end;
  cfg.x0 = Vector::Zero(4);
  cfg.x0 << 5, 6, 3, 8;
  const double beta1[] = {10, 8, 8, 10};
  const double beta2[] = {0.01, 0.1, 0.15, 0.05};
  for (int i = 0; i < 4; ++i) cfg.schemes.push_back(EventTrigger{beta1[i], beta2[i]});
  cfg.output_stride = 100;
  return cfg;
}

void BM_EngineDer4(benchmark::State& state) {
  const SimConfig cfg = der_config(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run(cfg));
}
BENCHMARK(BM_EngineDer4)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_EngineDispatch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SimConfig cfg{make_dispatch_instance(n, 1), random_connected_graph(n, 1)};
  cfg.delta = 0.1;
  cfg.step = 1e-3;
  cfg.t_end = 1.0;
  cfg.x0 = Vector::Zero(static_cast<Eigen::Index>(n));
  cfg.schemes.assign(n, EventTrigger{6.0, 0.15});
  cfg.output_stride = 100;
  for (auto _ : state) benchmark::DoNotOptimize(run(cfg));
}
BENCHMARK(BM_EngineDispatch)->Arg(5)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_LambdaBound(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix lap = laplacian(random_connected_graph(n, 3));
  for (auto _ : state) benchmark::DoNotOptimize(lambda_bound(lap));
}
BENCHMARK(BM_LambdaBound)->RangeMultiplier(2)->Range(4, 64);

void BM_CentralizedFlow(benchmark::State& state) {
  const AggregativeProblem p = make_der_instance();
  FlowOptions opts;
  opts.step = 1e-2;
  opts.t_end = 20.0;
  opts.gradient_tolerance = 0.0;
  opts.record_stride = 100;
  const Vector x0 = Vector::Zero(4);
  for (auto _ : state) benchmark::DoNotOptimize(centralized_flow(p, x0, opts));
}
BENCHMARK(BM_CentralizedFlow)->Unit(benchmark::kMicrosecond);

void BM_SolveKkt(benchmark::State& state) {
  const AggregativeProblem p = make_dispatch_instance(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_kkt_quadratic(p));
}
BENCHMARK(BM_SolveKkt)->Arg(4)->Arg(15)->Arg(60);

}  // namespace

BENCHMARK_MAIN();
