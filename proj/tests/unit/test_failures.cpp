#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles/oracles.hpp"
#include "support/instances.hpp"
#include "warerover/errors.hpp"
#include "warerover/failures.hpp"
#include "warerover/scenarios.hpp"

using namespace warerover;
using fixtures::open_layout;

namespace {

std::vector<AgvState> fleet(int n) {
  std::vector<AgvState> agvs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    agvs[static_cast<std::size_t>(i)].spec.id = AgvId{i};
    agvs[static_cast<std::size_t>(i)].pose.anchor = {i, 0};
  }
  return agvs;
}

FailureEvent event_at(int agv, int at, int down = 40) {
  return {FailureId{0}, AgvId{agv}, at, at + down, FailureEvent::Source::Injected};
}

std::vector<std::pair<int, int>> cells_of_block(Cell lo, int side, const Layout& layout) {
  std::vector<std::pair<int, int>> out;
  for (int x = lo.x; x < lo.x + side; ++x) {
    for (int y = lo.y; y < lo.y + side; ++y) {
      if (layout.in_bounds({x, y})) out.emplace_back(x, y);
    }
  }
  return out;
}

// Expected corridor on an open floor: the dilated block plus the straight
// strip to the oracle's boundary exit.
CellSet open_floor_corridor(const Layout& layout, Cell anchor, int footprint) {
  auto region = cells_of_block({anchor.x - 1, anchor.y - 1}, footprint + 2, layout);
  CellSet cells;
  for (auto [x, y] : region) cells.insert({x, y});
  auto exit = oracle::nearest_boundary(layout.width, layout.height, region);
  auto [ex, ey] = exit.cell;
  // Walk from the exit toward the region one axis at a time.
  int x = ex;
  int y = ey;
  for (int k = 0; k < exit.distance; ++k) {
    cells.insert({x, y});
    if (x < anchor.x - 1) ++x;
    else if (x > anchor.x + footprint) --x;
    else if (y < anchor.y - 1) ++y;
    else --y;
  }
  return cells;
}

}  // namespace

TEST_CASE("sample_failures at the probability extremes") {
  auto agvs = fleet(3);
  Rng rng(1);
  FailureConfig never{0.0, 40, true};
  for (int t = 0; t < 100; ++t) CHECK(sample_failures(never, agvs, rng, t).empty());
  FailureConfig always{1.0, 40, true};
  auto events = sample_failures(always, agvs, rng, 5);
  REQUIRE(events.size() == 3);
  for (const auto& e : events) {
    CHECK(e.at == 5);
    CHECK(e.recovery_at == 45);
    CHECK(e.source == FailureEvent::Source::Random);
  }
  agvs[1].health = Health::failed(10);
  CHECK(sample_failures(always, agvs, rng, 6).size() == 2);
}

TEST_CASE("failure config validation") {
  CHECK_THROWS_AS(validate(FailureConfig{1.5, 40, true}), ConfigError);
  CHECK_THROWS_AS(validate(FailureConfig{-0.1, 40, true}), ConfigError);
  CHECK_THROWS_AS(validate(FailureConfig{0.01, 0, true}), ConfigError);
  CHECK_NOTHROW(validate(FailureConfig{0.01, 40, true}));
}

TEST_CASE("inject_failure examples") {
  auto agvs = fleet(4);
  FailureConfig config{0.01, 40, true};
  auto e = inject_failure(agvs[3], 100, config);
  CHECK(e.agv == AgvId{3});
  CHECK(e.at == 100);
  CHECK(e.recovery_at == 140);
  CHECK(e.source == FailureEvent::Source::Injected);
  CHECK(inject_failure(agvs[0], 0, config).recovery_at == config.down_steps);
  agvs[2].health = Health::failed(40);
  CHECK_THROWS_AS(inject_failure(agvs[2], 10, config), NotActiveError);
}

TEST_CASE("build_corridor on an open floor") {
  Layout layout = open_layout(20, 15);
  SUBCASE("1x1 failure at (5,5)") {
    auto corridor = build_corridor(event_at(0, 10), {{5, 5}, Heading::N}, 1, layout, CorridorId{0});
    auto expected = open_floor_corridor(layout, {5, 5}, 1);
    CHECK(corridor.cells == expected);
    CHECK(corridor.cells.size() == 13);
    CHECK(corridor.cells.count({0, 4}) == 1);
    CHECK(corridor.active_from == 10);
    CHECK(corridor.active_until == 50);
    CHECK_FALSE(corridor.degenerate);
  }
  SUBCASE("failure on the boundary needs no access strip") {
    auto corridor = build_corridor(event_at(0, 0), {{0, 7}, Heading::N}, 1, layout, CorridorId{0});
    CHECK(corridor.cells.size() == cells_of_block({-1, 6}, 3, layout).size());
    CHECK(corridor.cells.size() == 6);
  }
  SUBCASE("2x2 failure dilates to a 4x4 block") {
    auto corridor = build_corridor(event_at(0, 0), {{5, 5}, Heading::N}, 2, layout, CorridorId{0});
    for (auto [x, y] : cells_of_block({4, 4}, 4, layout)) CHECK(corridor.cells.count({x, y}) == 1);
    CHECK(corridor.cells == open_floor_corridor(layout, {5, 5}, 2));
    auto corner = build_corridor(event_at(0, 0), {{0, 0}, Heading::N}, 2, layout, CorridorId{0});
    CHECK(corner.cells.size() == 9);
  }
  SUBCASE("lifetime equals the downtime") {
    for (int at : {0, 3, 99}) {
      auto c = build_corridor(event_at(0, at, 25), {{9, 9}, Heading::N}, 1, layout, CorridorId{1});
      CHECK(c.active_until - c.active_from == 25);
    }
  }
}

TEST_CASE("build_corridor skips shelves and obstacles") {
  Layout layout = open_layout(10, 10, {{4, 5}});
  layout.shelves.push_back({ShelfId{0}, {6, 5}, {{SkuId{0}, 1}}, 1});
  layout.build_index();
  auto corridor = build_corridor(event_at(0, 0), {{5, 5}, Heading::N}, 1, layout, CorridorId{0});
  CHECK(corridor.cells.count({4, 5}) == 0);
  CHECK(corridor.cells.count({6, 5}) == 0);
  CHECK(corridor.cells.count({5, 5}) == 1);
}

TEST_CASE("apply_recovery timing and state preservation") {
  auto agvs = fleet(4);
  agvs[2].carrying = ShelfId{7};
  agvs[2].stage = TaskStage::CarryToStation;
  agvs[2].task = TaskId{1};
  agvs[2].health = Health::failed(40);
  std::vector<FailureEvent> events{event_at(2, 100)};
  std::vector<SafetyCorridor> corridors{build_corridor(events[0], agvs[2].pose, 1, open_layout(20, 15), CorridorId{3})};

  auto none = apply_recovery(events, corridors, agvs, 139);
  CHECK(none.recovered.empty());
  CHECK(none.expired.empty());
  CHECK_FALSE(agvs[2].health.active());

  auto rec = apply_recovery(events, corridors, agvs, 140);
  CHECK(rec.recovered == std::vector<AgvId>{AgvId{2}});
  CHECK(rec.expired == std::vector<CorridorId>{CorridorId{3}});
  CHECK(agvs[2].health.active());
  CHECK(agvs[2].carrying == ShelfId{7});
  CHECK(agvs[2].stage == TaskStage::CarryToStation);
  CHECK_FALSE(agvs[2].plan.has_value());
}

TEST_CASE("failure scripts") {
  std::istringstream ok("step,agv_id\n30,2\n10,1\n\n# comment\n");
  auto script = parse_failure_script(ok);
  REQUIRE(script.size() == 2);
  CHECK(script[0] == ScriptedFailure{10, AgvId{1}});
  CHECK(script[1] == ScriptedFailure{30, AgvId{2}});
  std::istringstream bad("10,1\nten,2\n");
  CHECK_THROWS_AS(parse_failure_script(bad), ParseError);
}

TEST_CASE("random failure counts agree with the exposure-based binomial") {
  auto config = scenario_config(Scenario::Fault);
  config.pattern = pattern::Steady{0.05, 1000};
  config.horizon = 1000;
  config.deterministic_ct = true;
  const double p = config.failures.per_step_probability;
  const int agents = static_cast<int>(config.layout->agvs.size());

  double exposure = 0.0;
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Simulation sim(config, seed);
    while (!sim.finished()) sim.step();
    const int steps = sim.state().clock;
    // An agent is exposed at every step it is active when failures are drawn;
    // after failing at `at` it is down (not drawn) until recovery_at.
    long down = 0;
    for (const auto& f : sim.state().failures) {
      CHECK(f.source == FailureEvent::Source::Random);
      down += std::max(0, std::min(f.recovery_at, steps) - f.at - 1);
    }
    exposure += static_cast<double>(agents) * steps - static_cast<double>(down);
    failures += static_cast<int>(sim.state().failures.size());
  }
  auto [mean, sigma] = oracle::binomial_moments(exposure, p);
  MESSAGE("failures " << failures << " expected " << mean << " sigma " << sigma);
  CHECK(std::abs(failures - mean) <= 3.0 * sigma);
}
