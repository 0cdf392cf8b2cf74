#pragma once

// Random planning instances shared by the planner property tests and the
// acceptance binary.

#include <map>
#include <random>
#include <set>
#include <vector>

#include "warerover/executor.hpp"
#include "warerover/planner.hpp"
#include "warerover/world.hpp"

namespace fixtures {

using namespace warerover;

struct Instance {
  Layout layout;
  std::vector<PlanRequest> requests;
  std::map<AgvId, int> footprints;
};

inline Layout open_layout(int width, int height, const std::vector<Cell>& obstacles = {}) {
  Layout layout;
  layout.width = width;
  layout.height = height;
  layout.obstacles = obstacles;
  layout.build_index();
  return layout;
}

inline TimedPath build_path(AgvId agv, Pose start, int start_step, const std::vector<Action>& actions) {
  TimedPath p = TimedPath::stationary(agv, start, start_step);
  Pose pose = start;
  for (const Action& a : actions) {
    if (a.kind == ActionKind::Move) {
      pose.anchor = step_toward(pose.anchor, a.direction);
      pose.heading = a.direction;
    }
    p.append(a, pose, 1);
  }
  return p;
}

// Up to `agents` agents with distinct starts and distinct goals on a
// width x height floor with roughly `density` obstacles. When `mixed`, some
// agents are 2x2 and travel at two steps per cell.
inline Instance random_instance(std::mt19937_64& rng, int width, int height, int agents, double density,
                                bool mixed = false) {
  Instance inst;
  std::vector<Cell> obstacles;
  std::bernoulli_distribution wall(density);
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) {
      if (wall(rng)) obstacles.push_back({x, y});
    }
  }
  inst.layout = open_layout(width, height, obstacles);

  std::set<Cell> taken_start;
  std::set<Cell> taken_goal;
  std::uniform_int_distribution<int> ux(0, width - 1);
  std::uniform_int_distribution<int> uy(0, height - 1);
  std::bernoulli_distribution big(mixed ? 0.3 : 0.0);
  const CellSet none;
  auto free_block = [&](Cell anchor, int fp, const std::set<Cell>& taken) {
    if (!is_traversable(inst.layout, anchor, fp, false, none)) return false;
    for (Cell c : footprint_cells(anchor, fp)) {
      if (taken.count(c)) return false;
    }
    return true;
  };
  for (int i = 0; i < agents; ++i) {
    int fp = big(rng) ? 2 : 1;
    for (int attempt = 0; attempt < 200; ++attempt) {
      Cell s{ux(rng), uy(rng)};
      Cell g{ux(rng), uy(rng)};
      if (!free_block(s, fp, taken_start) || !free_block(g, fp, taken_goal)) continue;
      auto reach = static_reachability(inst.layout, s, fp, false);
      if (!reach[static_cast<std::size_t>(inst.layout.index_of(g))]) continue;
      PlanRequest r;
      r.spec = {AgvId{i}, fp, fp == 2 ? 2 : 1, "carrier", 0};
      r.start = {s, Heading::N};
      r.goal = g;
      for (Cell c : footprint_cells(s, fp)) taken_start.insert(c);
      for (Cell c : footprint_cells(g, fp)) taken_goal.insert(c);
      inst.footprints[r.spec.id] = fp;
      inst.requests.push_back(std::move(r));
      break;
    }
  }
  return inst;
}

inline std::vector<TimedPath> paths_of(const PlanResult& result) {
  std::vector<TimedPath> out;
  for (const auto& [id, p] : result.paths) out.push_back(p);
  return out;
}

inline std::vector<Trajectory> trajectories_of(const PlanResult& result, const Instance& inst) {
  std::vector<Trajectory> out;
  for (const auto& r : inst.requests) out.push_back(realize_plan(result.paths.at(r.spec.id), r.spec));
  return out;
}

}  // namespace fixtures
