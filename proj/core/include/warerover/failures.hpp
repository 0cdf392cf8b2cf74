#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "warerover/planner.hpp"
#include "warerover/random.hpp"
#include "warerover/world.hpp"

namespace warerover {

struct FailureConfig {
  double per_step_probability = 0.01;
  int down_steps = 40;
  bool enabled = false;
};

// Throws ConfigError when the probability or downtime is out of range.
void validate(const FailureConfig& config);

struct FailureEvent {
  enum class Source : std::uint8_t { Random, Injected };
  FailureId id;
  AgvId agv;
  int at = 0;
  int recovery_at = 0;
  Source source = Source::Random;

  bool operator==(const FailureEvent&) const = default;
};
std::string_view to_string(FailureEvent::Source s);

struct SafetyCorridor {
  CorridorId id;
  CellSet cells;
  int active_from = 0;
  int active_until = 0;  // exclusive
  FailureId cause;
  AgvId cause_agv;
  // No boundary cell was reachable; the corridor is the dilated region only.
  bool degenerate = false;

  bool active_at(int step) const { return step >= active_from && step < active_until; }
  CorridorSpan span() const { return {cells, active_from, active_until, cause_agv}; }
};

// One Bernoulli draw per active AGV, in the order given.
std::vector<FailureEvent> sample_failures(const FailureConfig& config, std::span<const AgvState> agvs, Rng& rng,
                                          int now);

// Throws NotActiveError when the AGV is already down.
FailureEvent inject_failure(const AgvState& agv, int now, const FailureConfig& config);

// Footprint dilated by one cell (clipped, minus shelves/obstacles and stations
// unless the failure sits on one) plus the shortest 1-cell access strip to the
// map boundary over non-shelf, non-station cells.
SafetyCorridor build_corridor(const FailureEvent& event, const Pose& failed_pose, int footprint, const Layout& layout,
                              CorridorId id);

struct RecoveryResult {
  std::vector<AgvId> recovered;
  std::vector<CorridorId> expired;
};

// Flips AGVs whose downtime ends at `now` back to Active (plan cleared, task
// and load kept), and reports their corridors as expired.
RecoveryResult apply_recovery(std::span<const FailureEvent> events, std::span<const SafetyCorridor> corridors,
                              std::span<AgvState> agvs, int now);

struct ScriptedFailure {
  int step = 0;
  AgvId agv;

  bool operator==(const ScriptedFailure&) const = default;
};

// CSV rows `step,agv_id`; an optional header line is skipped. Throws ParseError.
std::vector<ScriptedFailure> parse_failure_script(std::istream& in);
std::vector<ScriptedFailure> load_failure_script(const std::string& path);

}  // namespace warerover
