#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "warerover/orders.hpp"
#include "warerover/random.hpp"
#include "warerover/world.hpp"

namespace warerover {

struct Assignment {
  TaskId task;
  AgvId agv;
  int decided_at = 0;

  bool operator==(const Assignment&) const = default;
};

enum class SchedulerKind { TA, RD, External };

std::string_view to_string(SchedulerKind k);
SchedulerKind scheduler_from_string(std::string_view s);

// Memoized can_serve() per (footprint, shelf, station).
class Compatibility {
 public:
  explicit Compatibility(const Layout& layout) : layout_(&layout) {}
  bool operator()(const AgvSpec& spec, ShelfId shelf, StationId station) const;

 private:
  const Layout* layout_;
  mutable std::map<std::tuple<int, int, int>, bool> cache_;
};

struct ScheduleInput {
  std::span<const Task> pending_tasks;  // sorted by release step then id
  std::span<const AgvState> idle_agvs;
  const Layout& layout;
  int now = 0;
  // Full fleet, for external policies that reason about busy agents too.
  std::span<const AgvState> all_agvs = {};
};

// Slot for custom scheduling policies.
class SchedulerPolicy {
 public:
  virtual ~SchedulerPolicy() = default;
  virtual std::vector<Assignment> schedule(const ScheduleInput& input, Rng& rng, const Compatibility& compatible) = 0;
};

void register_external_scheduler(const std::string& name, std::function<std::unique_ptr<SchedulerPolicy>()> factory);
std::unique_ptr<SchedulerPolicy> make_external_scheduler(const std::string& name);

// TA: tasks in order, each to the compatible idle AGV minimizing
// |agv - shelf| + |shelf - station| (ties: lowest id). RD: a uniformly random
// compatible idle AGV. Unassignable tasks are skipped.
std::vector<Assignment> schedule_step(SchedulerKind policy, std::span<const Task> pending_tasks,
                                      std::span<const AgvState> idle_agvs, const Layout& layout, Rng& rng, int now,
                                      const Compatibility* compatible = nullptr);

}  // namespace warerover
