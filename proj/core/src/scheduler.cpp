#include "warerover/scheduler.hpp"

#include <algorithm>
#include <limits>
#include <mutex>
#include <set>

#include "warerover/errors.hpp"

namespace warerover {

std::string_view to_string(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::TA: return "ta";
    case SchedulerKind::RD: return "rd";
    case SchedulerKind::External: return "external";
  }
  return "?";
}

SchedulerKind scheduler_from_string(std::string_view s) {
  if (s == "ta") return SchedulerKind::TA;
  if (s == "rd") return SchedulerKind::RD;
  throw ConfigError("unknown scheduler '" + std::string(s) + "'");
}

bool Compatibility::operator()(const AgvSpec& spec, ShelfId shelf, StationId station) const {
  auto key = std::make_tuple(spec.footprint, shelf.value, station.value);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  bool ok = can_serve(*layout_, spec, layout_->shelf(shelf), layout_->station(station));
  cache_.emplace(key, ok);
  return ok;
}

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::function<std::unique_ptr<SchedulerPolicy>()>>& registry() {
  static std::map<std::string, std::function<std::unique_ptr<SchedulerPolicy>()>> r;
  return r;
}

}  // namespace

void register_external_scheduler(const std::string& name, std::function<std::unique_ptr<SchedulerPolicy>()> factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

std::unique_ptr<SchedulerPolicy> make_external_scheduler(const std::string& name) {
  std::lock_guard lock(registry_mutex());
  auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("no external scheduler registered as '" + name + "'");
  return it->second();
}

std::vector<Assignment> schedule_step(SchedulerKind policy, std::span<const Task> pending_tasks,
                                      std::span<const AgvState> idle_agvs, const Layout& layout, Rng& rng, int now,
                                      const Compatibility* compatible) {
  std::optional<Compatibility> local;
  if (compatible == nullptr) compatible = &local.emplace(layout);

  std::vector<const AgvState*> free_agvs;
  for (const auto& a : idle_agvs) free_agvs.push_back(&a);
  // Canonical order makes both policies independent of the caller's ordering.
  std::sort(free_agvs.begin(), free_agvs.end(),
            [](const AgvState* a, const AgvState* b) { return a->spec.id < b->spec.id; });

  std::vector<Assignment> out;
  for (const auto& task : pending_tasks) {
    if (free_agvs.empty()) break;
    const ShelfPod& shelf = layout.shelf(task.shelf);
    const Station& station = layout.station(task.station);

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < free_agvs.size(); ++i) {
      if ((*compatible)(free_agvs[i]->spec, task.shelf, task.station)) candidates.push_back(i);
    }
    if (candidates.empty()) continue;

    std::size_t chosen = candidates.front();
    if (policy == SchedulerKind::RD) {
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      chosen = candidates[pick(rng)];
    } else {
      int best = std::numeric_limits<int>::max();
      for (std::size_t i : candidates) {
        int cost = manhattan(free_agvs[i]->pose.anchor, shelf.home) + manhattan(shelf.home, station.cell);
        if (cost < best) {
          best = cost;
          chosen = i;
        }
      }
    }
    out.push_back({task.id, free_agvs[chosen]->spec.id, now});
    free_agvs.erase(free_agvs.begin() + static_cast<std::ptrdiff_t>(chosen));
  }
  return out;
}

}  // namespace warerover
