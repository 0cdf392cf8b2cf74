#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "warerover/geometry.hpp"

namespace warerover {

enum class ActionKind : std::uint8_t { Move, Rotate, Wait, Lift, Drop };

struct Action {
  ActionKind kind = ActionKind::Wait;
  Heading direction = Heading::N;  // Move only
  bool clockwise = true;           // Rotate only

  static constexpr Action move(Heading d) { return {ActionKind::Move, d, true}; }
  static constexpr Action rotate(bool cw) { return {ActionKind::Rotate, Heading::N, cw}; }
  static constexpr Action wait() { return {ActionKind::Wait, Heading::N, true}; }
  static constexpr Action lift() { return {ActionKind::Lift, Heading::N, true}; }
  static constexpr Action drop() { return {ActionKind::Drop, Heading::N, true}; }

  bool operator==(const Action& o) const {
    if (kind != o.kind) return false;
    if (kind == ActionKind::Move) return direction == o.direction;
    if (kind == ActionKind::Rotate) return clockwise == o.clockwise;
    return true;
  }
};

std::string_view to_string(ActionKind k);

struct PathState {
  Pose pose;
  int step = 0;

  auto operator<=>(const PathState&) const = default;
};

// Discrete space-time plan. states[i+1] is the result of applying actions[i]
// to states[i]; there is always one more state than actions.
struct TimedPath {
  AgvId agv;
  std::vector<PathState> states;
  std::vector<Action> actions;

  static TimedPath stationary(AgvId agv, Pose pose, int step);

  bool empty() const { return actions.empty(); }
  int start_step() const { return states.front().step; }
  int end_step() const { return states.back().step; }
  const Pose& final_pose() const { return states.back().pose; }

  void append(Action a, Pose to, int duration);

  // Index of the action whose time interval [states[i].step, states[i+1].step)
  // contains `step`; nullopt outside the plan.
  std::optional<std::size_t> action_index_at(int step) const;

  // Delay every state after `step` by one step, inserting a Wait at `step`.
  // `step` must coincide with a state boundary.
  void insert_wait_at(int step);

  bool operator==(const TimedPath&) const = default;
};

// Cells covered by the agent at an integer step. Before the plan it sits at
// the first pose, after the plan at the last. During a multi-step move the
// agent covers both source and destination blocks.
std::vector<Cell> occupancy_at(const TimedPath& path, int footprint, int step);

// Anchor block(s) at a step: one anchor, or two (source, destination) mid-move.
struct Occupancy {
  Cell a;
  Cell b;
  bool spans_two = false;

  bool contains(Cell c, int footprint) const {
    return block_contains(a, footprint, c) || (spans_two && block_contains(b, footprint, c));
  }
};
Occupancy occupancy_blocks_at(const TimedPath& path, int step);

// Direction of travel during [step, step+1], if the agent is translating.
std::optional<Heading> moving_direction_at(const TimedPath& path, int step);

int sum_of_costs(const std::vector<TimedPath>& paths);

}  // namespace warerover
