#include <benchmark/benchmark.h>

#include <random>

#include "warerover/planner.hpp"
#include "warerover/scenarios.hpp"

using namespace warerover;

namespace {

// Requests sending every preset AGV to a random free cell on the preset floor.
std::vector<PlanRequest> random_requests(const Layout& layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PlanRequest> out;
  std::vector<Cell> taken;
  for (const auto& a : layout.agvs) {
    PlanRequest r;
    r.spec = a.spec;
    r.start = a.pose;
    for (;;) {
      Cell g{std::uniform_int_distribution<int>(0, layout.width - 2)(rng), std::uniform_int_distribution<int>(0, layout.height - 2)(rng)};
      if (!is_traversable(layout, g, a.spec.footprint, false, {})) continue;
      if (std::find(taken.begin(), taken.end(), g) != taken.end()) continue;
      taken.push_back(g);
      r.goal = g;
      break;
    }
    out.push_back(std::move(r));
  }
  return out;
}

void BM_LowLevelSearch(benchmark::State& state) {
  Layout layout = homogeneous_layout();
  const BlockSet none;
  LowLevelQuery q;
  q.spec = layout.agvs.front().spec;
  q.start = {{0, 1}, Heading::E};
  q.goal = {layout.width - 1, layout.height - 2};
  for (auto _ : state) {
    auto r = low_level_search(q, layout, none);
    benchmark::DoNotOptimize(r.expansions);
  }
}
BENCHMARK(BM_LowLevelSearch);

void BM_Planner(benchmark::State& state, const char* name, Scenario scenario) {
  Layout layout = scenario == Scenario::Heterogeneous ? heterogeneous_layout() : homogeneous_layout();
  const BlockSet none;
  auto planner = make_planner(name);
  std::uint64_t seed = 0;
  long expansions = 0;
  for (auto _ : state) {
    state.PauseTiming();
    auto requests = random_requests(layout, seed++ % 16);
    PlanningContext ctx{layout, none};
    ctx.node_budget = 1000;
    state.ResumeTiming();
    auto result = planner->plan(requests, ctx);
    expansions += result.expansions;
  }
  state.counters["expansions"] = benchmark::Counter(static_cast<double>(expansions), benchmark::Counter::kAvgIterations);
}
BENCHMARK_CAPTURE(BM_Planner, prioritized_homogeneous, "astar", Scenario::Homogeneous)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Planner, cbs_homogeneous, "cbs", Scenario::Homogeneous)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Planner, prioritized_heterogeneous, "astar", Scenario::Heterogeneous)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
