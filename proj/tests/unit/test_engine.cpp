#include <doctest.h>

#include <sstream>

#include "warerover/engine.hpp"
#include "warerover/errors.hpp"
#include "warerover/scenarios.hpp"

using namespace warerover;

namespace {

// One AGV, one shelf, one station.
std::shared_ptr<const Layout> tiny_layout() {
  Layout layout;
  layout.width = 6;
  layout.height = 6;
  layout.stations.push_back({StationId{0}, {2, 0}, 1});
  layout.shelves.push_back({ShelfId{0}, {2, 3}, {{SkuId{0}, 5}}, 1});
  layout.parking.push_back({5, 5});
  layout.agvs.push_back({{AgvId{0}, 1, 1, "carrier", 0}, {{5, 5}, Heading::N}});
  layout.build_index();
  return std::make_shared<const Layout>(layout);
}

ExperimentConfig tiny_config(int orders) {
  ExperimentConfig config;
  config.layout = tiny_layout();
  config.pattern = pattern::OneShot{orders};
  config.horizon = 200;
  config.deterministic_ct = true;
  return config;
}

std::string csv_row(const ExperimentConfig& config, const RunResult& r) {
  std::ostringstream out;
  write_results_row(out, config, r);
  return out.str();
}

std::string log_text(const std::vector<LogEvent>& events) {
  std::ostringstream out;
  write_event_log(out, events);
  return out.str();
}

}  // namespace

TEST_CASE("metric formulas") {
  auto m = compute_metrics(30, 30, 120, true, 2000, 600.0, 20);
  CHECK(m.sr == doctest::Approx(100.0));
  CHECK(m.makespan == 120);
  CHECK(m.tp == doctest::Approx(0.25));
  CHECK(m.ct == doctest::Approx(30.0));
  auto partial = compute_metrics(30, 27, 1500, false, 2000, 0.0, 0);
  CHECK(partial.sr == doctest::Approx(90.0));
  CHECK(partial.makespan == 2000);
  CHECK(partial.ct == 0.0);
  auto none = compute_metrics(0, 0, 0, true, 2000, 0.0, 0);
  CHECK(none.sr == 100.0);
  CHECK(none.tp == 0.0);
}

TEST_CASE("a step with no work only advances the clock") {
  Simulation sim(tiny_config(0), 1);
  auto before = sim.state().agvs;
  sim.step();
  CHECK(sim.state().clock == 1);
  REQUIRE(sim.state().agvs.size() == before.size());
  CHECK(sim.state().agvs[0].pose == before[0].pose);
  CHECK(sim.state().tasks.empty());
}

TEST_CASE("one order and one idle AGV yield one assignment and one plan") {
  Simulation sim(tiny_config(1), 1);
  sim.step();
  const auto& s = sim.state();
  REQUIRE(s.tasks.size() == 1);
  CHECK(s.tasks[0].assigned_agv == AgvId{0});
  CHECK(s.agvs[0].plan.has_value());
  int assignments = 0;
  for (const auto& e : s.events) assignments += e.kind == "assignment" ? 1 : 0;
  CHECK(assignments == 1);
}

TEST_CASE("a failure in phase 2 leaves the AGV planless inside an active corridor") {
  auto config = tiny_config(1);
  config.scripted_failures.push_back({0, AgvId{0}});
  Simulation sim(config, 1);
  sim.step();
  const auto& s = sim.state();
  CHECK_FALSE(s.agvs[0].health.active());
  CHECK_FALSE(s.agvs[0].plan.has_value());
  REQUIRE(s.corridors.size() == 1);
  CHECK(s.corridors[0].active_at(1));
}

TEST_CASE("the tiny run finishes its order and conserves stock at every step") {
  Simulation sim(tiny_config(3), 2);
  while (!sim.finished()) {
    sim.step();
    CHECK_NOTHROW(sim.check_conservation());
  }
  auto r = sim.result();
  CHECK(r.metrics.sr == 100.0);
  CHECK(r.completed);
  CHECK(r.collisions == 0);
}

TEST_CASE("zero orders is a vacuous success") {
  auto r = run(tiny_config(0), 3);
  CHECK(r.metrics.sr == 100.0);
  CHECK(r.metrics.tp == 0.0);
}

TEST_CASE("homogeneous TA with prioritized planning completes every order") {
  auto config = scenario_config(Scenario::Homogeneous);
  config.deterministic_ct = true;
  for (std::uint64_t seed : {0u, 7u}) {
    auto r = run(config, seed);
    CHECK(r.metrics.sr == 100.0);
    CHECK(r.collisions == 0);
  }
}

TEST_CASE("run_experiment aggregation") {
  auto config = tiny_config(2);
  config.repeats = 1;
  config.base_seed = 4;
  auto single = run_experiment(config);
  REQUIRE(single.runs.size() == 1);
  auto direct = run(config, 4);
  CHECK(single.sr.mean == direct.metrics.sr);
  CHECK(single.tp.mean == direct.metrics.tp);
  CHECK(single.sr.stddev == 0.0);
  CHECK(single.tp.stddev == 0.0);

  config.repeats = 6;
  auto one_thread = run_experiment(config, 1);
  auto three_threads = run_experiment(config, 3);
  CHECK(one_thread.runs.size() == 6);
  CHECK(one_thread.tp.mean == three_threads.tp.mean);
  CHECK(one_thread.ct.mean == three_threads.ct.mean);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(one_thread.runs[i].seed == config.base_seed + i);
    CHECK(csv_row(config, one_thread.runs[i]) == csv_row(config, three_threads.runs[i]));
  }
}

TEST_CASE("deterministic-ct runs are reproducible bit for bit") {
  auto config = scenario_config(Scenario::Fault);
  config.deterministic_ct = true;
  auto a = run(config, 11);
  auto b = run(config, 11);
  CHECK(csv_row(config, a) == csv_row(config, b));
  CHECK(log_text(a.events) == log_text(b.events));
  auto c = run(config, 12);
  CHECK(log_text(a.events) != log_text(c.events));
}

TEST_CASE("results CSV schema") {
  std::ostringstream out;
  write_results_header(out);
  CHECK(out.str() == std::string(kResultsHeader) + "\n");
  auto config = tiny_config(1);
  config.env = "Ho";
  auto row = csv_row(config, run(config, 0));
  CHECK(row.rfind("Ho,ta,astar,os,0,100.0000,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 10);
}

TEST_CASE("event logs round-trip and replay to the recorded metrics") {
  auto config = scenario_config(Scenario::Fault);
  config.deterministic_ct = true;
  auto r = run(config, 5);
  std::istringstream in(log_text(r.events));
  auto events = read_event_log(in);
  CHECK(events == r.events);
  auto replay = replay_event_log(events);
  REQUIRE(replay.recorded);
  CHECK(replay.recomputed == *replay.recorded);
  CHECK(replay.recomputed == r.metrics);

  std::istringstream bad("{\"step\":1}\n");
  CHECK_THROWS_AS(read_event_log(bad), ParseError);
}

TEST_CASE("invalid configurations are rejected") {
  auto config = tiny_config(1);
  config.horizon = 0;
  CHECK_THROWS_AS(validate(config), ConfigError);
  config = tiny_config(1);
  config.layout.reset();
  CHECK_THROWS_AS(validate(config), ConfigError);
  config = tiny_config(1);
  config.failures.per_step_probability = 2.0;
  CHECK_THROWS_AS(Simulation(config, 0), ConfigError);
  config = tiny_config(1);
  config.planner = "bogus";
  CHECK_THROWS_AS(Simulation(config, 0), ConfigError);
}
