#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <set>

#include "warerover/scheduler.hpp"

using namespace warerover;

namespace {

Layout floor_layout() {
  Layout layout;
  layout.width = 20;
  layout.height = 12;
  layout.stations.push_back({StationId{0}, {10, 0}, 1});
  layout.shelves.push_back({ShelfId{0}, {10, 5}, {{SkuId{0}, 10}}, 1});
  layout.shelves.push_back({ShelfId{1}, {4, 8}, {{SkuId{1}, 10}}, 2});
  layout.shelves.push_back({ShelfId{2}, {15, 8}, {{SkuId{2}, 10}}, 1});
  layout.build_index();
  return layout;
}

AgvState idle(int id, Cell at, int footprint = 1) {
  AgvState a;
  a.spec = {AgvId{id}, footprint, 1, "carrier", 0};
  a.pose.anchor = at;
  return a;
}

Task task_for(int id, int shelf) {
  Task t;
  t.id = TaskId{id};
  t.order = OrderId{id};
  t.shelf = ShelfId{shelf};
  t.station = StationId{0};
  return t;
}

}  // namespace

TEST_CASE("TA assigns the AGV with the smallest travel estimate") {
  Layout layout = floor_layout();
  // 3 and 7 cells from the shelf.
  std::vector<AgvState> agvs{idle(0, {13, 5}), idle(1, {3, 5})};
  std::vector<Task> tasks{task_for(0, 0)};

  // Brute-force minimum of the travel estimate over idle AGVs.
  const auto& shelf = layout.shelf(ShelfId{0});
  const auto& station = layout.station(StationId{0});
  int best = std::numeric_limits<int>::max();
  AgvId expected;
  for (const auto& a : agvs) {
    int cost = manhattan(a.pose.anchor, shelf.home) + manhattan(shelf.home, station.cell);
    if (cost < best) {
      best = cost;
      expected = a.spec.id;
    }
  }
  Rng rng(1);
  auto out = schedule_step(SchedulerKind::TA, tasks, agvs, layout, rng, 4);
  REQUIRE(out.size() == 1);
  CHECK(out[0].agv == expected);
  CHECK(out[0].agv == AgvId{0});
  CHECK(out[0].decided_at == 4);
}

TEST_CASE("no idle AGVs means no assignments") {
  Layout layout = floor_layout();
  std::vector<Task> tasks{task_for(0, 0), task_for(1, 2)};
  Rng rng(1);
  for (auto kind : {SchedulerKind::TA, SchedulerKind::RD}) {
    CHECK(schedule_step(kind, tasks, std::span<const AgvState>{}, layout, rng, 0).empty());
  }
}

TEST_CASE("RD picks the AGV a replayed stream selects") {
  Layout layout = floor_layout();
  std::vector<AgvState> agvs{idle(3, {1, 1}), idle(0, {2, 1}), idle(2, {3, 1}), idle(1, {4, 1})};
  std::vector<Task> tasks{task_for(0, 0)};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_stream(seed, StreamPurpose::Scheduler);
    auto out = schedule_step(SchedulerKind::RD, tasks, agvs, layout, rng, 0);
    REQUIRE(out.size() == 1);

    // Replay: candidates in id order, one uniform index draw.
    Rng replay = make_stream(seed, StreamPurpose::Scheduler);
    std::vector<int> ids;
    for (const auto& a : agvs) ids.push_back(a.spec.id.value);
    std::sort(ids.begin(), ids.end());
    std::size_t k = std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(replay);
    CHECK(out[0].agv.value == ids[k]);
  }
}

TEST_CASE("a 2x2-shelf task is not assigned to 1x1 AGVs") {
  Layout layout = floor_layout();
  std::vector<AgvState> agvs{idle(0, {1, 1}), idle(1, {2, 1})};
  std::vector<Task> tasks{task_for(0, 1)};
  Rng rng(3);
  CHECK(schedule_step(SchedulerKind::TA, tasks, agvs, layout, rng, 0).empty());
  CHECK(schedule_step(SchedulerKind::RD, tasks, agvs, layout, rng, 0).empty());
}

TEST_CASE("no AGV is assigned twice and TA ignores idle-list order") {
  Layout layout = floor_layout();
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<AgvState> agvs;
    std::set<Cell> used;
    int n = std::uniform_int_distribution<int>(1, 6)(gen);
    for (int i = 0; i < n; ++i) {
      Cell c{std::uniform_int_distribution<int>(0, 19)(gen), std::uniform_int_distribution<int>(1, 3)(gen)};
      if (!used.insert(c).second) continue;
      agvs.push_back(idle(i, c));
    }
    std::vector<Task> tasks;
    for (int t = 0; t < 4; ++t) tasks.push_back(task_for(t, t % 2 == 0 ? 0 : 2));

    Rng rng(1);
    auto a = schedule_step(SchedulerKind::TA, tasks, agvs, layout, rng, 0);
    std::set<AgvId> seen;
    for (const auto& x : a) CHECK(seen.insert(x.agv).second);
    CHECK(a.size() == std::min(tasks.size(), agvs.size()));

    std::shuffle(agvs.begin(), agvs.end(), gen);
    auto b = schedule_step(SchedulerKind::TA, tasks, agvs, layout, rng, 0);
    CHECK(a == b);

    auto r = schedule_step(SchedulerKind::RD, tasks, agvs, layout, rng, 0);
    std::set<AgvId> rseen;
    for (const auto& x : r) CHECK(rseen.insert(x.agv).second);
  }
}

TEST_CASE("scheduler names parse") {
  CHECK(scheduler_from_string("ta") == SchedulerKind::TA);
  CHECK(scheduler_from_string("rd") == SchedulerKind::RD);
  CHECK(to_string(SchedulerKind::TA) == "ta");
}
