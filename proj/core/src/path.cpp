#include "warerover/path.hpp"

#include <algorithm>
#include <cassert>

namespace warerover {

TimedPath TimedPath::stationary(AgvId agv, Pose pose, int step) {
  TimedPath p;
  p.agv = agv;
  p.states.push_back({pose, step});
  return p;
}

void TimedPath::append(Action a, Pose to, int duration) {
  assert(duration >= 1);
  actions.push_back(a);
  states.push_back({to, states.back().step + duration});
}

std::optional<std::size_t> TimedPath::action_index_at(int step) const {
  if (actions.empty() || step < start_step() || step >= end_step()) return std::nullopt;
  // states are sorted by step; find the last state with step <= `step`.
  auto it = std::upper_bound(states.begin(), states.end(), step,
                             [](int s, const PathState& st) { return s < st.step; });
  return static_cast<std::size_t>(std::distance(states.begin(), it) - 1);
}

void TimedPath::insert_wait_at(int step) {
  auto it = std::find_if(states.begin(), states.end(), [&](const PathState& s) { return s.step == step; });
  assert(it != states.end());
  auto idx = static_cast<std::size_t>(std::distance(states.begin(), it));
  for (auto j = idx + 1; j < states.size(); ++j) states[j].step += 1;
  if (idx + 1 == states.size()) {
    // Waiting at the end of the plan changes nothing.
    return;
  }
  states.insert(states.begin() + static_cast<std::ptrdiff_t>(idx) + 1, PathState{states[idx].pose, step + 1});
  actions.insert(actions.begin() + static_cast<std::ptrdiff_t>(idx), Action::wait());
}

Occupancy occupancy_blocks_at(const TimedPath& path, int step) {
  if (step <= path.start_step()) return {path.states.front().pose.anchor, {}, false};
  if (step >= path.end_step()) return {path.final_pose().anchor, {}, false};
  auto i = *path.action_index_at(step);
  const auto& from = path.states[i];
  const auto& to = path.states[i + 1];
  if (from.step == step || from.pose.anchor == to.pose.anchor) return {from.pose.anchor, {}, false};
  return {from.pose.anchor, to.pose.anchor, true};
}

std::vector<Cell> occupancy_at(const TimedPath& path, int footprint, int step) {
  auto occ = occupancy_blocks_at(path, step);
  auto cells = footprint_cells(occ.a, footprint);
  if (occ.spans_two) {
    for (Cell c : footprint_cells(occ.b, footprint)) {
      if (!block_contains(occ.a, footprint, c)) cells.push_back(c);
    }
  }
  return cells;
}

std::optional<Heading> moving_direction_at(const TimedPath& path, int step) {
  auto i = path.action_index_at(step);
  if (!i) return std::nullopt;
  const Action& a = path.actions[*i];
  if (a.kind != ActionKind::Move) return std::nullopt;
  return a.direction;
}

int sum_of_costs(const std::vector<TimedPath>& paths) {
  int total = 0;
  for (const auto& p : paths) total += p.end_step() - p.start_step();
  return total;
}

}  // namespace warerover
