#include "warerover/failures.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <istream>
#include <sstream>

#include "warerover/errors.hpp"

namespace warerover {

void validate(const FailureConfig& config) {
  if (!(config.per_step_probability >= 0.0 && config.per_step_probability <= 1.0))
    throw ConfigError("failure probability must lie in [0, 1]");
  if (config.down_steps < 1) throw ConfigError("down steps must be at least 1");
}

std::string_view to_string(FailureEvent::Source s) {
  return s == FailureEvent::Source::Random ? "random" : "injected";
}

std::vector<FailureEvent> sample_failures(const FailureConfig& config, std::span<const AgvState> agvs, Rng& rng,
                                          int now) {
  std::vector<FailureEvent> events;
  if (!config.enabled) return events;
  std::bernoulli_distribution fail(config.per_step_probability);
  for (const auto& agv : agvs) {
    if (!agv.health.active()) continue;
    if (fail(rng)) events.push_back({FailureId{}, agv.spec.id, now, now + config.down_steps, FailureEvent::Source::Random});
  }
  return events;
}

FailureEvent inject_failure(const AgvState& agv, int now, const FailureConfig& config) {
  if (!agv.health.active()) throw NotActiveError("agv " + std::to_string(agv.spec.id.value) + " is not active");
  return {FailureId{}, agv.spec.id, now, now + config.down_steps, FailureEvent::Source::Injected};
}

SafetyCorridor build_corridor(const FailureEvent& event, const Pose& failed_pose, int footprint, const Layout& layout,
                              CorridorId id) {
  SafetyCorridor corridor;
  corridor.id = id;
  corridor.active_from = event.at;
  corridor.active_until = event.recovery_at;
  corridor.cause = event.id;
  corridor.cause_agv = event.agv;

  const auto body = footprint_cells(failed_pose.anchor, footprint);
  bool on_station = std::any_of(body.begin(), body.end(), [&](Cell c) { return layout.is_station(c); });
  for (Cell c : body) corridor.cells.insert(c);
  const Cell lo = failed_pose.anchor;
  for (int y = lo.y - 1; y <= lo.y + footprint; ++y) {
    for (int x = lo.x - 1; x <= lo.x + footprint; ++x) {
      Cell c{x, y};
      if (!layout.in_bounds(c) || layout.is_obstacle(c) || layout.shelf_home_at(c) != nullptr) continue;
      if (layout.is_station(c) && !on_station) continue;
      corridor.cells.insert(c);
    }
  }

  auto on_boundary = [&](Cell c) { return c.x == 0 || c.y == 0 || c.x == layout.width - 1 || c.y == layout.height - 1; };
  std::vector<Cell> region(corridor.cells.begin(), corridor.cells.end());
  std::sort(region.begin(), region.end());
  if (std::any_of(region.begin(), region.end(), on_boundary)) return corridor;

  // Level-synchronous BFS so the lowest-ordered boundary cell at the minimum
  // distance wins; parents are fixed by first discovery in sorted order.
  std::vector<int> parent(static_cast<std::size_t>(layout.cell_count()), -2);
  std::vector<Cell> frontier = region;
  for (Cell c : region) parent[static_cast<std::size_t>(layout.index_of(c))] = -1;
  std::optional<Cell> exit;
  while (!frontier.empty() && !exit) {
    std::vector<Cell> next;
    for (Cell c : frontier) {
      for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
        Cell n = step_toward(c, h);
        if (!layout.in_bounds(n)) continue;
        auto& p = parent[static_cast<std::size_t>(layout.index_of(n))];
        if (p != -2) continue;
        if (layout.is_obstacle(n) || layout.is_station(n) || layout.shelf_home_at(n) != nullptr) continue;
        p = layout.index_of(c);
        next.push_back(n);
      }
    }
    std::sort(next.begin(), next.end());
    for (Cell c : next) {
      if (on_boundary(c)) {
        exit = c;
        break;
      }
    }
    frontier = std::move(next);
  }
  if (!exit) {
    corridor.degenerate = true;
    return corridor;
  }
  for (int i = layout.index_of(*exit); parent[static_cast<std::size_t>(i)] != -1; i = parent[static_cast<std::size_t>(i)])
    corridor.cells.insert(layout.cell_at(i));
  return corridor;
}

RecoveryResult apply_recovery(std::span<const FailureEvent> events, std::span<const SafetyCorridor> corridors,
                              std::span<AgvState> agvs, int now) {
  RecoveryResult result;
  for (const auto& e : events) {
    if (e.recovery_at != now) continue;
    for (auto& agv : agvs) {
      if (agv.spec.id != e.agv) continue;
      agv.health = Health{};
      agv.plan.reset();
      result.recovered.push_back(agv.spec.id);
    }
    for (const auto& c : corridors) {
      if (c.cause == e.id) result.expired.push_back(c.id);
    }
  }
  return result;
}

std::vector<ScriptedFailure> parse_failure_script(std::istream& in) {
  std::vector<ScriptedFailure> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream row(line);
    std::string a;
    std::string b;
    if (!std::getline(row, a, ',') || !std::getline(row, b)) throw ParseError("failure script line " + std::to_string(line_no) + ": expected step,agv_id");
    try {
      std::size_t pa = 0;
      std::size_t pb = 0;
      int step = std::stoi(a, &pa);
      int agv = std::stoi(b, &pb);
      if (pa != a.size() || pb != b.size() || step < 0 || agv < 0) throw std::invalid_argument("range");
      out.push_back({step, AgvId{agv}});
    } catch (const std::logic_error&) {
      if (line_no == 1) continue;  // header
      throw ParseError("failure script line " + std::to_string(line_no) + ": expected step,agv_id");
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ScriptedFailure& x, const ScriptedFailure& y) { return x.step < y.step; });
  return out;
}

std::vector<ScriptedFailure> load_failure_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open failure script " + path);
  return parse_failure_script(in);
}

}  // namespace warerover
