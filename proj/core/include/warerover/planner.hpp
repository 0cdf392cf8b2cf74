#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "warerover/path.hpp"
#include "warerover/world.hpp"

namespace warerover {

enum class ConflictKind : std::uint8_t { Vertex, Edge, Corridor };
std::string_view to_string(ConflictKind k);

// Edge covers both swaps and crossing entries: one agent entering a cell the
// other vacates in the same step while travelling in a different direction.
struct Conflict {
  AgvId a;
  AgvId b;
  int step = 0;
  ConflictKind kind = ConflictKind::Vertex;
  Cell cell;  // a witness cell of the overlap (Vertex/Corridor) or the entered cell (Edge)

  bool operator==(const Conflict&) const = default;
};

// Vertex: the agent's footprint must not cover `cell` at `step`.
// Edge: the agent must not start a Move from anchor `from_cell` to anchor
// `cell` at `step`.
struct Constraint {
  enum class Kind : std::uint8_t { Vertex, Edge };
  AgvId agv;
  Cell cell;
  int step = 0;
  Kind kind = Kind::Vertex;
  Cell from_cell;

  auto operator<=>(const Constraint&) const = default;
};

// Time-windowed dynamic obstacles (safety corridors). A window is [from, until).
class BlockSet {
 public:
  struct Window {
    int from = 0;
    int until = 0;
  };

  void add(Cell c, int from, int until);
  bool blocked(Cell c, int step) const;
  // Last step at which any window is still active (or -1).
  int last_active_step() const { return last_active_; }
  bool empty() const { return windows_.empty(); }
  CellSet cells_active_at(int step) const;
  const std::unordered_map<Cell, std::vector<Window>>& windows() const { return windows_; }

 private:
  std::unordered_map<Cell, std::vector<Window>> windows_;
  int last_active_ = -1;
};

// Space-time occupancy of agents whose paths are fixed. After a path ends the
// agent is reserved at its final pose for all later steps.
class ReservationTable {
 public:
  ReservationTable(const Layout& layout, int base_step);

  void add(const TimedPath& path, int footprint);

  // Index of the reserving agent, or -1.
  int occupant(Cell c, int step) const;
  std::optional<Heading> direction(int agent_index, int step) const;
  AgvId agent(int agent_index) const { return agents_[static_cast<std::size_t>(agent_index)].path.agv; }
  std::size_t agent_count() const { return agents_.size(); }
  // Steps >= this value repeat the terminal layer.
  int static_from() const { return base_ + static_cast<int>(layers_.size()) - 1; }
  int base_step() const { return base_; }
  const Layout& layout() const { return *layout_; }

 private:
  struct Entry {
    TimedPath path;
    int footprint;
  };
  void ensure_layers(int last_step);
  void stamp(int agent_index, int from_step, int to_step);

  const Layout* layout_;
  int base_;
  std::vector<std::vector<std::int16_t>> layers_;
  std::vector<Entry> agents_;
};

struct LowLevelQuery {
  AgvSpec spec;
  Pose start;
  int start_step = 0;
  Cell goal;
  bool carrying = false;
  ShelfId carried;
  std::vector<Constraint> constraints;
  // Blocked cells the agent may still occupy while leaving them, up to grace_until.
  CellSet grace;
  int grace_until = -1;
  int horizon = 4096;  // absolute step bound
};

struct LowLevelResult {
  std::optional<TimedPath> path;
  long expansions = 0;
};

// Minimum-arrival space-time A* over (anchor, heading, step). The returned
// path ends at `goal` and may rest there forever.
// `avoid` holds other agents' tentative paths: never a hard constraint, only a
// tie-break toward paths with fewer overlaps.
LowLevelResult low_level_search(const LowLevelQuery& query, const Layout& layout, const BlockSet& blocked,
                                const ReservationTable* reservations = nullptr,
                                const ReservationTable* avoid = nullptr);

struct PlanRequest {
  AgvSpec spec;
  Pose start;
  int start_step = 0;
  Cell goal;
  bool carrying = false;
  ShelfId carried;
  CellSet grace;
  int grace_until = -1;
  // Committed motion already under way; the planned path continues from its end.
  std::optional<TimedPath> prefix;
};

struct PlanningContext {
  const Layout& layout;
  const BlockSet& blocked;
  int start_step = 0;
  // Paths (with footprints) of agents that are not being planned.
  std::vector<std::pair<TimedPath, int>> fixed;
  int horizon_steps = 1024;
  int node_budget = 10000;
  int fallback_wait = 5;
};

struct PlanResult {
  std::map<AgvId, TimedPath> paths;
  std::vector<AgvId> failures;
  bool suboptimal = false;
  long expansions = 0;
  long ct_nodes = 0;
};

PlanResult plan_prioritized(const std::vector<PlanRequest>& requests, const PlanningContext& ctx);
PlanResult plan_cbs(const std::vector<PlanRequest>& requests, const PlanningContext& ctx);

struct CorridorSpan {
  CellSet cells;
  int from = 0;
  int until = 0;
  AgvId cause;
};

// Earliest conflict among the paths (ties: lowest agent pair), or nullopt.
std::optional<Conflict> detect_conflicts(const std::vector<TimedPath>& paths, const std::map<AgvId, int>& footprints,
                                         const std::vector<CorridorSpan>& corridors = {});

enum class ReplanReason : std::uint8_t { Blocked, CorridorIntersect, Infeasible, IdleWithTask };
std::string_view to_string(ReplanReason r);

LowLevelResult replan_agent(const PlanRequest& request, ReplanReason reason, const PlanningContext& ctx);

// Pluggable planner slot (built-ins: prioritized A*, CBS).
class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  virtual PlanResult plan(const std::vector<PlanRequest>& requests, const PlanningContext& ctx) = 0;
  // Joint planners are handed every moving agent whenever any agent needs a
  // plan; others only receive the agents that need one.
  virtual bool replans_jointly() const { return false; }
};

std::unique_ptr<Planner> make_planner(const std::string& name);
void register_external_planner(const std::string& name, std::function<std::unique_ptr<Planner>()> factory);

// Path of `steps` Wait actions at the start pose (used when search fails).
TimedPath wait_path(AgvId agv, Pose pose, int start_step, int steps);

}  // namespace warerover
