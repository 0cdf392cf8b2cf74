#include <algorithm>
#include <mutex>
#include <queue>
#include <set>

#include "warerover/errors.hpp"
#include "warerover/planner.hpp"

namespace warerover {

std::string_view to_string(ReplanReason r) {
  switch (r) {
    case ReplanReason::Blocked: return "blocked";
    case ReplanReason::CorridorIntersect: return "corridor_intersect";
    case ReplanReason::Infeasible: return "infeasible";
    case ReplanReason::IdleWithTask: return "idle_with_task";
  }
  return "?";
}

namespace {

LowLevelQuery make_query(const PlanRequest& r, const PlanningContext& ctx) {
  LowLevelQuery q;
  q.spec = r.spec;
  q.start = r.start;
  q.start_step = r.start_step;
  q.goal = r.goal;
  q.carrying = r.carrying;
  q.carried = r.carried;
  q.grace = r.grace;
  q.grace_until = r.grace_until;
  q.horizon = ctx.start_step + ctx.horizon_steps;
  return q;
}

TimedPath with_prefix(const PlanRequest& r, TimedPath tail) {
  if (!r.prefix || r.prefix->empty()) return tail;
  TimedPath out = *r.prefix;
  for (std::size_t i = 0; i < tail.actions.size(); ++i) out.append(tail.actions[i], tail.states[i + 1].pose,
                                                                   tail.states[i + 1].step - tail.states[i].step);
  return out;
}

TimedPath fallback_path(const PlanRequest& r, const PlanningContext& ctx) {
  return with_prefix(r, wait_path(r.spec.id, r.start, r.start_step, ctx.fallback_wait));
}

ReservationTable fixed_table(const PlanningContext& ctx) {
  ReservationTable table(ctx.layout, ctx.start_step);
  for (const auto& [path, fp] : ctx.fixed) table.add(path, fp);
  return table;
}

std::vector<const PlanRequest*> by_id(const std::vector<PlanRequest>& requests) {
  std::vector<const PlanRequest*> out;
  for (const auto& r : requests) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const PlanRequest* a, const PlanRequest* b) { return a->spec.id < b->spec.id; });
  return out;
}

}  // namespace

namespace {

// Plans agents in `order` against the fixed agents and those planned before
// them. A conservative pass also treats agents not yet planned as parked where
// they stand, so no one plans through a peer that may be unable to get away.
PlanResult prioritized_pass(const std::vector<const PlanRequest*>& order, const PlanningContext& ctx,
                            bool conservative) {
  PlanResult result;
  ReservationTable table = fixed_table(ctx);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const PlanRequest* r = order[k];
    std::optional<ReservationTable> local;
    if (conservative && k + 1 < order.size()) {
      local.emplace(table);
      for (std::size_t j = k + 1; j < order.size(); ++j) {
        const PlanRequest* other = order[j];
        local->add(other->prefix ? *other->prefix : TimedPath::stationary(other->spec.id, other->start, ctx.start_step),
                   other->spec.footprint);
      }
    }
    auto found = low_level_search(make_query(*r, ctx), ctx.layout, ctx.blocked, local ? &*local : &table);
    result.expansions += found.expansions;
    TimedPath path;
    if (found.path) {
      path = with_prefix(*r, std::move(*found.path));
    } else {
      path = fallback_path(*r, ctx);
      result.failures.push_back(r->spec.id);
    }
    table.add(path, r->spec.footprint);
    result.paths.emplace(r->spec.id, std::move(path));
  }
  return result;
}

}  // namespace

PlanResult plan_prioritized(const std::vector<PlanRequest>& requests, const PlanningContext& ctx) {
  // Pass 1 plans in id order. While agents fail, they are promoted ahead of
  // the rest, first optimistically and then conservatively; the pass with the
  // fewest failures wins (earliest on ties).
  std::vector<const PlanRequest*> order = by_id(requests);
  PlanResult best = prioritized_pass(order, ctx, false);
  long expansions = best.expansions;
  for (bool conservative : {false, true}) {
    if (best.failures.empty() || order.size() < 2) break;
    std::vector<const PlanRequest*> promoted;
    auto failed = [&](const PlanRequest* r) {
      return std::find(best.failures.begin(), best.failures.end(), r->spec.id) != best.failures.end();
    };
    for (const PlanRequest* r : order) {
      if (failed(r)) promoted.push_back(r);
    }
    for (const PlanRequest* r : order) {
      if (!failed(r)) promoted.push_back(r);
    }
    PlanResult result = prioritized_pass(conservative ? order : promoted, ctx, conservative);
    expansions += result.expansions;
    if (result.failures.size() < best.failures.size()) best = std::move(result);
    if (!conservative) order = std::move(promoted);
  }
  best.expansions = expansions;
  return best;
}

namespace {

struct CtNode {
  std::vector<Constraint> constraints;
  std::vector<TimedPath> paths;  // search portion only, aligned with the active agent list
  long cost = 0;
  int conflicts = 0;
  long id = 0;
};

struct CtOrder {
  const std::vector<CtNode>* nodes;
  bool operator()(std::size_t a, std::size_t b) const {
    const CtNode& x = (*nodes)[a];
    const CtNode& y = (*nodes)[b];
    return std::tie(x.cost, x.conflicts, x.id) > std::tie(y.cost, y.conflicts, y.id);
  }
};

long path_cost(const TimedPath& p) { return p.end_step() - p.start_step(); }

int count_conflicting_pairs(const std::vector<TimedPath>& paths, const std::map<AgvId, int>& footprints) {
  int count = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = i + 1; j < paths.size(); ++j) {
      if (detect_conflicts({paths[i], paths[j]}, footprints)) ++count;
    }
  }
  return count;
}

int conflicts_with(const std::vector<TimedPath>& paths, std::size_t k, const std::map<AgvId, int>& footprints) {
  int count = 0;
  for (std::size_t j = 0; j < paths.size(); ++j) {
    if (j != k && detect_conflicts({paths[k], paths[j]}, footprints)) ++count;
  }
  return count;
}

// Tentative paths of every agent but `skip`, for the low-level tie-break.
ReservationTable avoid_table(const std::vector<TimedPath>& paths, std::size_t skip,
                             const std::vector<const PlanRequest*>& active, const PlanningContext& ctx) {
  ReservationTable avoid(ctx.layout, ctx.start_step);
  for (std::size_t j = 0; j < paths.size(); ++j) {
    if (j != skip) avoid.add(paths[j], active[j]->spec.footprint);
  }
  return avoid;
}

// Constraint forbidding `agent`'s part in the conflict, or nullopt when the
// conflicting motion precedes the agent's planning start and cannot change.
std::optional<Constraint> constraint_for(const Conflict& conflict, AgvId agent, const TimedPath& path,
                                         const std::map<AgvId, int>& footprints) {
  if (conflict.step < path.start_step()) return std::nullopt;
  if (conflict.kind == ConflictKind::Vertex) {
    if (conflict.step == path.start_step()) return std::nullopt;
    return Constraint{agent, conflict.cell, conflict.step, Constraint::Kind::Vertex, {}};
  }
  auto i = path.action_index_at(conflict.step);
  if (!i || path.actions[*i].kind != ActionKind::Move) {
    // The stationary side of a crossing: keep it off the contested cell.
    (void)footprints;
    return Constraint{agent, conflict.cell, conflict.step + 1, Constraint::Kind::Vertex, {}};
  }
  const auto& from = path.states[*i];
  const auto& to = path.states[*i + 1];
  return Constraint{agent, to.pose.anchor, from.step, Constraint::Kind::Edge, from.pose.anchor};
}

}  // namespace

namespace {

PlanResult cbs_search(std::vector<const PlanRequest*> active, const PlanningContext& ctx) {
  PlanResult result;
  ReservationTable table = fixed_table(ctx);
  std::map<AgvId, int> footprints;
  for (const auto* r : active) footprints[r->spec.id] = r->spec.footprint;

  // Root: independent searches against the fixed agents. Agents with no path
  // even without inter-agent constraints get the wait fallback and become fixed.
  std::vector<TimedPath> root_paths;
  for (bool changed = true; changed;) {
    changed = false;
    root_paths.clear();
    ReservationTable avoid(ctx.layout, ctx.start_step);
    for (std::size_t i = 0; i < active.size(); ++i) {
      auto found = low_level_search(make_query(*active[i], ctx), ctx.layout, ctx.blocked, &table, &avoid);
      result.expansions += found.expansions;
      if (!found.path) {
        TimedPath fb = fallback_path(*active[i], ctx);
        table.add(fb, active[i]->spec.footprint);
        result.paths.emplace(active[i]->spec.id, std::move(fb));
        result.failures.push_back(active[i]->spec.id);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
      avoid.add(*found.path, active[i]->spec.footprint);
      root_paths.push_back(std::move(*found.path));
    }
  }
  if (active.empty()) return result;

  std::vector<CtNode> nodes;
  nodes.push_back({{}, root_paths, 0, 0, 0});
  for (const auto& p : root_paths) nodes[0].cost += path_cost(p);
  nodes[0].conflicts = count_conflicting_pairs(root_paths, footprints);
  std::priority_queue<std::size_t, std::vector<std::size_t>, CtOrder> open(CtOrder{&nodes});
  open.push(0);
  result.ct_nodes = 1;

  auto index_of = [&](AgvId id) {
    for (std::size_t i = 0; i < active.size(); ++i) {
      if (active[i]->spec.id == id) return i;
    }
    return active.size();
  };

  while (!open.empty()) {
    std::size_t cur_idx = open.top();
    open.pop();
    auto conflict = detect_conflicts(nodes[cur_idx].paths, footprints);
    if (!conflict) {
      for (std::size_t i = 0; i < active.size(); ++i)
        result.paths.emplace(active[i]->spec.id, with_prefix(*active[i], nodes[cur_idx].paths[i]));
      return result;
    }
    if (result.ct_nodes >= ctx.node_budget) break;

    for (AgvId agent : {conflict->a, conflict->b}) {
      std::size_t k = index_of(agent);
      auto constraint = constraint_for(*conflict, agent, nodes[cur_idx].paths[k], footprints);
      if (!constraint) continue;
      CtNode child;
      child.constraints = nodes[cur_idx].constraints;
      child.constraints.push_back(*constraint);
      LowLevelQuery q = make_query(*active[k], ctx);
      for (const auto& c : child.constraints) {
        if (c.agv == agent) q.constraints.push_back(c);
      }
      ReservationTable avoid = avoid_table(nodes[cur_idx].paths, k, active, ctx);
      auto found = low_level_search(q, ctx.layout, ctx.blocked, &table, &avoid);
      result.expansions += found.expansions;
      if (!found.path) continue;
      child.paths = nodes[cur_idx].paths;
      child.paths[k] = std::move(*found.path);
      for (const auto& p : child.paths) child.cost += path_cost(p);
      child.conflicts = nodes[cur_idx].conflicts - conflicts_with(nodes[cur_idx].paths, k, footprints) +
                        conflicts_with(child.paths, k, footprints);
      child.id = static_cast<long>(nodes.size());
      nodes.push_back(std::move(child));
      open.push(nodes.size() - 1);
      ++result.ct_nodes;
    }
  }

  // Budget exhausted (or no conflict-free node): prioritized fallback on the
  // agents still in play, flagged suboptimal.
  std::vector<PlanRequest> rest;
  for (const auto* r : active) rest.push_back(*r);
  PlanningContext sub{ctx.layout, ctx.blocked, ctx.start_step, ctx.fixed, ctx.horizon_steps, ctx.node_budget,
                      ctx.fallback_wait};
  for (const auto& [id, path] : result.paths) sub.fixed.emplace_back(path, footprints.count(id) ? footprints[id] : 1);
  PlanResult fb = plan_prioritized(rest, sub);
  result.expansions += fb.expansions;
  result.suboptimal = true;
  for (auto& [id, path] : fb.paths) result.paths.insert_or_assign(id, std::move(path));
  for (AgvId id : fb.failures) result.failures.push_back(id);
  return result;
}

}  // namespace

LowLevelResult replan_agent(const PlanRequest& request, ReplanReason /*reason*/, const PlanningContext& ctx) {
  ReservationTable table = fixed_table(ctx);
  auto found = low_level_search(make_query(request, ctx), ctx.layout, ctx.blocked, &table);
  if (found.path) {
    found.path = with_prefix(request, std::move(*found.path));
  } else {
    found.path = fallback_path(request, ctx);
  }
  return found;
}

namespace {

class PrioritizedPlanner final : public Planner {
 public:
  std::string name() const override { return "astar"; }
  PlanResult plan(const std::vector<PlanRequest>& requests, const PlanningContext& ctx) override {
    return plan_prioritized(requests, ctx);
  }
};

class CbsPlanner final : public Planner {
 public:
  std::string name() const override { return "cbs"; }
  PlanResult plan(const std::vector<PlanRequest>& requests, const PlanningContext& ctx) override {
    return plan_cbs(requests, ctx);
  }
  bool replans_jointly() const override { return true; }
};

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::function<std::unique_ptr<Planner>()>>& registry() {
  static std::map<std::string, std::function<std::unique_ptr<Planner>()>> r;
  return r;
}

}  // namespace

void register_external_planner(const std::string& name, std::function<std::unique_ptr<Planner>()> factory) {
  std::lock_guard lock(registry_mutex());
  registry()[name] = std::move(factory);
}

std::unique_ptr<Planner> make_planner(const std::string& name) {
  if (name == "astar") return std::make_unique<PrioritizedPlanner>();
  if (name == "cbs") return std::make_unique<CbsPlanner>();
  constexpr std::string_view kExternal = "external:";
  if (name.starts_with(kExternal)) {
    std::string key = name.substr(kExternal.size());
    std::lock_guard lock(registry_mutex());
    auto it = registry().find(key);
    if (it == registry().end()) throw ConfigError("no external planner registered as '" + key + "'");
    return it->second();
  }
  throw ConfigError("unknown planner '" + name + "'");
}

PlanResult plan_cbs(const std::vector<PlanRequest>& requests, const PlanningContext& ctx) {
  // Agents whose goals overlap can never all rest there, which would leave
  // CBS without a solution. The agent nearest its goal (then lowest id) keeps
  // it while the others stay parked; they are planned afterwards around the
  // joint solution. A winner that cannot move yields to the next contender.
  std::vector<const PlanRequest*> order = by_id(requests);
  std::set<AgvId> demoted;
  long expansions = 0;
  for (;;) {
    std::stable_sort(order.begin(), order.end(), [&](const PlanRequest* a, const PlanRequest* b) {
      return std::pair{demoted.contains(a->spec.id), manhattan(a->start.anchor, a->goal)} <
             std::pair{demoted.contains(b->spec.id), manhattan(b->start.anchor, b->goal)};
    });
    std::vector<const PlanRequest*> kept;
    std::vector<const PlanRequest*> deferred;
    std::set<AgvId> contested;
    for (const auto* r : order) {
      auto winner = std::find_if(kept.begin(), kept.end(), [&](const PlanRequest* k) {
        return blocks_overlap(k->goal, k->spec.footprint, r->goal, r->spec.footprint);
      });
      if (winner == kept.end()) {
        kept.push_back(r);
      } else {
        contested.insert((*winner)->spec.id);
        deferred.push_back(r);
      }
    }
    std::sort(kept.begin(), kept.end(), [](const PlanRequest* a, const PlanRequest* b) { return a->spec.id < b->spec.id; });
    std::sort(deferred.begin(), deferred.end(), [](const PlanRequest* a, const PlanRequest* b) { return a->spec.id < b->spec.id; });

    PlanningContext joint{ctx.layout, ctx.blocked, ctx.start_step, ctx.fixed, ctx.horizon_steps, ctx.node_budget,
                          ctx.fallback_wait};
    for (const auto* r : deferred)
      joint.fixed.emplace_back(r->prefix ? *r->prefix : TimedPath::stationary(r->spec.id, r->start, ctx.start_step),
                               r->spec.footprint);
    PlanResult result = cbs_search(kept, joint);
    expansions += result.expansions;

    bool retry = false;
    for (AgvId id : result.failures) {
      if (contested.contains(id) && !demoted.contains(id)) {
        demoted.insert(id);
        retry = true;
      }
    }
    if (retry) continue;

    result.expansions = expansions;
    if (deferred.empty()) return result;
    std::vector<PlanRequest> rest;
    PlanningContext sub{ctx.layout, ctx.blocked, ctx.start_step, ctx.fixed, ctx.horizon_steps, ctx.node_budget,
                        ctx.fallback_wait};
    for (const auto* r : kept) sub.fixed.emplace_back(result.paths.at(r->spec.id), r->spec.footprint);
    for (const auto* r : deferred) rest.push_back(*r);
    PlanResult after = plan_prioritized(rest, sub);
    result.expansions += after.expansions;
    for (auto& [id, path] : after.paths) result.paths.insert_or_assign(id, std::move(path));
    for (AgvId id : after.failures) result.failures.push_back(id);
    return result;
  }
}

}  // namespace warerover
