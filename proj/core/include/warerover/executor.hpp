#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "warerover/planner.hpp"
#include "warerover/world.hpp"

namespace warerover {

// Continuous planar pose: anchor position in cell units, heading in quarter turns.
struct ContinuousPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct MotionSegment {
  enum class Kind : std::uint8_t { Translate, Rotate, Dwell };
  Kind kind = Kind::Dwell;
  ContinuousPose start_pose;
  ContinuousPose end_pose;
  double start_time = 0.0;
  double end_time = 0.0;
};

struct Trajectory {
  AgvId agv;
  std::vector<MotionSegment> segments;
  ContinuousPose initial;  // pose when there are no segments

  double start_time() const { return segments.empty() ? 0.0 : segments.front().start_time; }
  double end_time() const { return segments.empty() ? 0.0 : segments.back().end_time; }
  double duration() const { return end_time() - start_time(); }
  // Constant-velocity interpolation; clamps outside the trajectory.
  ContinuousPose pose_at(double t) const;
};

struct SafetyMargin {
  double radius = 0.05;
};

// Throws MalformedPathError when the path breaks TimedPath invariants for `spec`.
void check_path(const TimedPath& path, const AgvSpec& spec);
Trajectory realize_plan(const TimedPath& path, const AgvSpec& spec);

struct CollisionEvent {
  enum class Kind : std::uint8_t { AgentAgent, AgentObstacle, AgentShelf, AgentCorridor };
  double time = 0.0;
  Kind kind = Kind::AgentAgent;
  AgvId a;
  AgvId b;    // AgentAgent / AgentCorridor (the corridor's cause)
  Cell cell;  // static or corridor cell involved
};
std::string_view to_string(CollisionEvent::Kind k);

struct CollisionScene {
  const Layout* layout = nullptr;
  std::map<AgvId, int> footprints;
  // Carried shelf per loaded agent; loaded agents collide with stored shelves.
  std::map<AgvId, ShelfId> carrying;
  std::set<ShelfId> shelves_away;
  std::vector<CorridorSpan> corridors;
  // Agents allowed inside a given corridor (it caught them when it formed).
  std::map<AgvId, std::set<std::size_t>> corridor_exempt;
};

// Samples every trajectory `resolution` times per step unit over their joint
// time span and reports every overlap of margin-inflated footprint rectangles.
std::vector<CollisionEvent> check_continuous_collisions(const std::vector<Trajectory>& trajectories,
                                                        const CollisionScene& scene, SafetyMargin margin,
                                                        int resolution);

struct ExecAgent {
  AgvSpec spec;
  bool active = true;
  Pose pose;
  std::optional<TimedPath> plan;  // absolute steps
  int involuntary_dwell = 0;
  std::optional<ShelfId> carrying;
  std::set<std::size_t> exempt_corridors;  // indices into the corridor list
};

struct ExecOutcome {
  enum class Kind : std::uint8_t { Progressed, TriggerReplan };
  AgvId agv;
  Kind kind = Kind::Progressed;
  Pose pose;
  std::optional<ReplanReason> reason;
  bool delayed = false;
};

struct ExecConfig {
  SafetyMargin margin{0.0};
  int resolution = 10;
  int blocked_threshold = 5;
};

struct ExecCorridor {
  CorridorSpan span;
  bool newly_active = false;
};

// Whether the agent's remaining motion from `now` on (including resting at its
// final pose) touches the corridor while it is active.
bool corridor_intersects(const TimedPath* plan, Pose pose, int footprint, const CorridorSpan& corridor, int now);

// Advances every active agent by one step. Entries into cells another agent
// holds, crossing moves and corridor entries are held back by inserting a Wait;
// agents held `blocked_threshold` consecutive steps ask for a replan.
std::vector<ExecOutcome> step_execute(std::vector<ExecAgent>& agents, int now,
                                      const std::vector<ExecCorridor>& corridors, const Layout& layout,
                                      const ExecConfig& config, std::vector<CollisionEvent>* collisions = nullptr);

}  // namespace warerover
