#include <benchmark/benchmark.h>

#include <vector>

#include "goesched/cmdp.hpp"
#include "goesched/config.hpp"
#include "goesched/env.hpp"
#include "goesched/solver.hpp"

using namespace goesched;

static void BM_BuildTransitions(benchmark::State& state) {
  const SystemConfig c = default_config();
  for (auto _ : state) {
    TransitionTable t = build_transitions(c);
    benchmark::DoNotOptimize(t.num_entries());
  }
}
BENCHMARK(BM_BuildTransitions);

static void BM_ValueIteration(benchmark::State& state) {
  const SystemConfig c = default_config();
  const TransitionTable t = build_transitions(c);
  const double mu = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) {
    ValueIterationResult r = value_iteration(t, mu, c);
    benchmark::DoNotOptimize(r.values.data());
  }
}
BENCHMARK(BM_ValueIteration)->Arg(0)->Arg(5)->Arg(20);

static void BM_BisectionSolve(benchmark::State& state) {
  SystemConfig c = default_config();
  c.cost_flex = static_cast<double>(state.range(0)) / 1000.0;
  const TransitionTable t = build_transitions(c);
  for (auto _ : state) {
    SolveReport r = bisection_solve(t, c);
    benchmark::DoNotOptimize(r.mu_star);
  }
}
BENCHMARK(BM_BisectionSolve)->Arg(286)->Arg(750)->Unit(benchmark::kMillisecond);

static void BM_EnvStep(benchmark::State& state) {
  const Environment env(default_config());
  EnvState s = env.reset(1);
  const std::vector<int> actions[3] = {{}, {1}, {2}};
  std::size_t k = 0;
  for (auto _ : state) {
    TraceRecord r = env.step(s, actions[k++ % 3]);
    benchmark::DoNotOptimize(r.goe);
  }
}
BENCHMARK(BM_EnvStep);

static void BM_EnvAdvance(benchmark::State& state) {
  const Environment env(default_config());
  EnvState s = env.reset(1);
  const std::vector<int> actions[3] = {{}, {1}, {2}};
  std::size_t k = 0;
  for (auto _ : state) {
    env.advance(s, actions[k++ % 3], nullptr);
    benchmark::DoNotOptimize(s.t);
  }
}
BENCHMARK(BM_EnvAdvance);
BENCHMARK_MAIN();
