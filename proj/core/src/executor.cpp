#include "warerover/executor.hpp"

#include <algorithm>
#include <cmath>

#include "warerover/errors.hpp"

namespace warerover {

namespace {

constexpr double kEps = 1e-9;

double heading_value(Heading h) { return static_cast<double>(static_cast<int>(h)); }

ContinuousPose at_state(const PathState& s, double heading) {
  return {static_cast<double>(s.pose.anchor.x), static_cast<double>(s.pose.anchor.y), heading};
}

// Signed quarter turns from a to b in (-2, 2].
int signed_turns(Heading a, Heading b) {
  int d = (static_cast<int>(b) - static_cast<int>(a) + 4) % 4;
  return d == 3 ? -1 : d;
}

[[noreturn]] void malformed(const TimedPath& path, std::size_t i, const std::string& what) {
  throw MalformedPathError("agv " + std::to_string(path.agv.value) + " action " + std::to_string(i) + ": " + what);
}

struct Rect {
  double x0, y0, x1, y1;
};

Rect agent_rect(const ContinuousPose& p, int footprint, double margin) {
  return {p.x - margin, p.y - margin, p.x + footprint + margin, p.y + footprint + margin};
}

bool overlaps(const Rect& a, const Rect& b) {
  return a.x0 < b.x1 - kEps && b.x0 < a.x1 - kEps && a.y0 < b.y1 - kEps && b.y0 < a.y1 - kEps;
}

// Position on a discrete path at continuous time t (constant velocity moves).
ContinuousPose interpolate(const TimedPath& path, double t) {
  if (path.empty() || t <= path.start_step()) return at_state(path.states.front(), heading_value(path.states.front().pose.heading));
  if (t >= path.end_step()) return at_state(path.states.back(), heading_value(path.states.back().pose.heading));
  auto i = *path.action_index_at(static_cast<int>(std::floor(t)));
  const auto& s0 = path.states[i];
  const auto& s1 = path.states[i + 1];
  double f = (t - s0.step) / static_cast<double>(s1.step - s0.step);
  ContinuousPose p;
  p.x = s0.pose.anchor.x + f * (s1.pose.anchor.x - s0.pose.anchor.x);
  p.y = s0.pose.anchor.y + f * (s1.pose.anchor.y - s0.pose.anchor.y);
  p.heading = heading_value(f > 0.0 ? s1.pose.heading : s0.pose.heading);
  return p;
}

}  // namespace

std::string_view to_string(CollisionEvent::Kind k) {
  switch (k) {
    case CollisionEvent::Kind::AgentAgent: return "agent_agent";
    case CollisionEvent::Kind::AgentObstacle: return "agent_obstacle";
    case CollisionEvent::Kind::AgentShelf: return "agent_shelf";
    case CollisionEvent::Kind::AgentCorridor: return "agent_corridor";
  }
  return "?";
}

void check_path(const TimedPath& path, const AgvSpec& spec) {
  if (path.states.empty()) throw MalformedPathError("path has no states");
  if (path.states.size() != path.actions.size() + 1) throw MalformedPathError("path needs one more state than actions");
  for (std::size_t i = 0; i < path.actions.size(); ++i) {
    const auto& a = path.actions[i];
    const auto& s0 = path.states[i];
    const auto& s1 = path.states[i + 1];
    int dur = s1.step - s0.step;
    if (dur <= 0) malformed(path, i, "steps must strictly increase");
    switch (a.kind) {
      case ActionKind::Move:
        if (s1.pose.anchor != step_toward(s0.pose.anchor, a.direction)) malformed(path, i, "move must shift one cell");
        if (dur != spec.steps_per_cell) malformed(path, i, "move must take steps_per_cell steps");
        if (s1.pose.heading != a.direction) malformed(path, i, "move must end facing its direction");
        if (spec.turn_cost > 0 && s0.pose.heading != a.direction) malformed(path, i, "move must follow the heading");
        break;
      case ActionKind::Rotate:
        if (spec.turn_cost == 0) malformed(path, i, "rotation is folded into moves when turn_cost is 0");
        if (dur != spec.turn_cost) malformed(path, i, "rotate must take turn_cost steps");
        if (s0.pose.anchor != s1.pose.anchor) malformed(path, i, "rotate must not translate");
        if (s1.pose.heading != (a.clockwise ? rotate_cw(s0.pose.heading) : rotate_ccw(s0.pose.heading)))
          malformed(path, i, "rotate must turn 90 degrees");
        break;
      case ActionKind::Wait:
      case ActionKind::Lift:
      case ActionKind::Drop:
        if (s0.pose != s1.pose) malformed(path, i, "dwell must keep the pose");
        if (dur != 1) malformed(path, i, "dwell actions take one step");
        break;
    }
  }
}

Trajectory realize_plan(const TimedPath& path, const AgvSpec& spec) {
  check_path(path, spec);
  Trajectory tr;
  tr.agv = path.agv;
  double heading = heading_value(path.states.front().pose.heading);
  tr.initial = at_state(path.states.front(), heading);
  for (std::size_t i = 0; i < path.actions.size(); ++i) {
    const auto& a = path.actions[i];
    const auto& s0 = path.states[i];
    const auto& s1 = path.states[i + 1];
    MotionSegment seg;
    seg.start_time = s0.step;
    seg.end_time = s1.step;
    seg.start_pose = at_state(s0, heading);
    switch (a.kind) {
      case ActionKind::Move:
        seg.kind = MotionSegment::Kind::Translate;
        heading += signed_turns(s0.pose.heading, s1.pose.heading);
        break;
      case ActionKind::Rotate:
        seg.kind = MotionSegment::Kind::Rotate;
        heading += a.clockwise ? 1.0 : -1.0;
        break;
      default: seg.kind = MotionSegment::Kind::Dwell; break;
    }
    seg.end_pose = at_state(s1, heading);
    tr.segments.push_back(seg);
  }
  return tr;
}

ContinuousPose Trajectory::pose_at(double t) const {
  if (segments.empty()) return initial;
  if (t <= segments.front().start_time) return segments.front().start_pose;
  if (t >= segments.back().end_time) return segments.back().end_pose;
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double v, const MotionSegment& s) { return v < s.start_time; });
  const MotionSegment& s = *std::prev(it);
  double f = (t - s.start_time) / (s.end_time - s.start_time);
  ContinuousPose p;
  p.x = s.start_pose.x + f * (s.end_pose.x - s.start_pose.x);
  p.y = s.start_pose.y + f * (s.end_pose.y - s.start_pose.y);
  if (s.kind == MotionSegment::Kind::Rotate)
    p.heading = s.start_pose.heading + f * (s.end_pose.heading - s.start_pose.heading);
  else
    p.heading = f > 0.0 ? s.end_pose.heading : s.start_pose.heading;
  return p;
}

namespace {

// `r` is the margin-inflated rectangle, `body` the bare footprint: the map
// edge only counts when the body itself leaves the floor.
void static_events(const CollisionScene& scene, AgvId agv, const Rect& r, const Rect& body, double t,
                   std::vector<CollisionEvent>& out) {
  const Layout& layout = *scene.layout;
  auto carried = scene.carrying.find(agv);
  auto exempt = scene.corridor_exempt.find(agv);
  for (int cx = static_cast<int>(std::floor(r.x0)); cx < static_cast<int>(std::ceil(r.x1)); ++cx) {
    for (int cy = static_cast<int>(std::floor(r.y0)); cy < static_cast<int>(std::ceil(r.y1)); ++cy) {
      Rect cell{static_cast<double>(cx), static_cast<double>(cy), cx + 1.0, cy + 1.0};
      if (!overlaps(r, cell)) continue;
      Cell c{cx, cy};
      if (!layout.in_bounds(c)) {
        if (overlaps(body, cell)) out.push_back({t, CollisionEvent::Kind::AgentObstacle, agv, {}, c});
        continue;
      }
      if (layout.is_obstacle(c)) out.push_back({t, CollisionEvent::Kind::AgentObstacle, agv, {}, c});
      if (carried != scene.carrying.end()) {
        const ShelfPod* s = layout.shelf_home_at(c);
        if (s != nullptr && s->id != carried->second && !scene.shelves_away.contains(s->id))
          out.push_back({t, CollisionEvent::Kind::AgentShelf, agv, {}, c});
      }
      for (std::size_t k = 0; k < scene.corridors.size(); ++k) {
        const auto& cor = scene.corridors[k];
        // Integer-step protection [from, until) covers continuous time [from, until-1].
        if (cor.cause == agv || t < cor.from - kEps || t > cor.until - 1 + kEps) continue;
        if (exempt != scene.corridor_exempt.end() && exempt->second.contains(k)) continue;
        if (cor.cells.contains(c)) out.push_back({t, CollisionEvent::Kind::AgentCorridor, agv, cor.cause, c});
      }
    }
  }
}

}  // namespace

std::vector<CollisionEvent> check_continuous_collisions(const std::vector<Trajectory>& trajectories,
                                                        const CollisionScene& scene, SafetyMargin margin,
                                                        int resolution) {
  std::vector<CollisionEvent> events;
  if (trajectories.empty()) return events;
  resolution = std::max(resolution, 2);
  double t0 = trajectories.front().start_time();
  double t1 = trajectories.front().end_time();
  for (const auto& tr : trajectories) {
    if (tr.segments.empty()) continue;
    t0 = std::min(t0, tr.start_time());
    t1 = std::max(t1, tr.end_time());
  }
  std::vector<int> fps;
  for (const auto& tr : trajectories) {
    auto it = scene.footprints.find(tr.agv);
    fps.push_back(it == scene.footprints.end() ? 1 : it->second);
  }
  auto samples = static_cast<long>(std::ceil((t1 - t0) * resolution));
  std::vector<Rect> rects(trajectories.size());
  std::vector<Rect> bodies(trajectories.size());
  for (long k = 0; k <= samples; ++k) {
    double t = t0 + static_cast<double>(k) / resolution;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      ContinuousPose p = trajectories[i].pose_at(t);
      rects[i] = agent_rect(p, fps[i], margin.radius);
      bodies[i] = agent_rect(p, fps[i], 0.0);
    }
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      for (std::size_t j = i + 1; j < trajectories.size(); ++j) {
        if (overlaps(rects[i], rects[j]))
          events.push_back({t, CollisionEvent::Kind::AgentAgent, trajectories[i].agv, trajectories[j].agv, {}});
      }
      if (scene.layout != nullptr) static_events(scene, trajectories[i].agv, rects[i], bodies[i], t, events);
    }
  }
  return events;
}

bool corridor_intersects(const TimedPath* plan, Pose pose, int footprint, const CorridorSpan& corridor, int now) {
  for (int s = std::max(now, corridor.from); s < corridor.until; ++s) {
    Occupancy occ = plan != nullptr ? occupancy_blocks_at(*plan, s) : Occupancy{pose.anchor, {}, false};
    for (Cell c : corridor.cells) {
      if (occ.contains(c, footprint)) return true;
    }
    if (plan == nullptr || s >= plan->end_step()) break;  // the rest is a constant pose
  }
  return false;
}

namespace {

struct Motion {
  Occupancy cur;
  Occupancy next;
  std::optional<Heading> dir;
  bool advancing = false;
  bool freezable = false;  // at a state boundary about to start a Move
  bool frozen = false;
  bool infeasible = false;
};

std::vector<Cell> cells_of(const Occupancy& o, int fp) {
  auto cells = footprint_cells(o.a, fp);
  if (o.spans_two) {
    for (Cell c : footprint_cells(o.b, fp)) {
      if (!block_contains(o.a, fp, c)) cells.push_back(c);
    }
  }
  return cells;
}

bool occ_overlap(const Occupancy& x, int fx, const Occupancy& y, int fy) {
  for (Cell c : cells_of(x, fx)) {
    if (y.contains(c, fy)) return true;
  }
  return false;
}

// x enters a cell that y vacates while heading another way.
bool crossing(const Motion& x, int fx, const Motion& y, int fy) {
  if (x.dir == y.dir) return false;
  for (Cell c : cells_of(x.next, fx)) {
    if (x.cur.contains(c, fx)) continue;
    if (y.cur.contains(c, fy) && !y.next.contains(c, fy)) return true;
  }
  return false;
}

bool entering(const Motion& m, int fp) {
  for (Cell c : cells_of(m.next, fp)) {
    if (!m.cur.contains(c, fp)) return true;
  }
  return false;
}

void freeze(Motion& m) {
  m.advancing = false;
  m.frozen = true;
  m.freezable = false;
  m.next = m.cur;
  m.dir.reset();
}

}  // namespace

std::vector<ExecOutcome> step_execute(std::vector<ExecAgent>& agents, int now,
                                      const std::vector<ExecCorridor>& corridors, const Layout& layout,
                                      const ExecConfig& config, std::vector<CollisionEvent>* collisions) {
  const std::size_t n = agents.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return agents[a].spec.id < agents[b].spec.id; });

  std::vector<Motion> motion(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ag = agents[i];
    Motion& m = motion[i];
    if (ag.plan && ag.active) {
      m.cur = occupancy_blocks_at(*ag.plan, now);
      auto idx = ag.plan->action_index_at(now);
      if (idx) {
        m.advancing = true;
        m.next = occupancy_blocks_at(*ag.plan, now + 1);
        m.dir = moving_direction_at(*ag.plan, now);
        m.freezable = ag.plan->states[*idx].step == now && ag.plan->actions[*idx].kind == ActionKind::Move;
      } else {
        m.next = m.cur;
      }
    } else {
      m.cur = {ag.pose.anchor, {}, false};
      m.next = m.cur;
    }
  }

  auto fp = [&](std::size_t i) { return agents[i].spec.footprint; };

  auto resolve_discrete = [&] {
    for (bool again = true; again;) {
      again = false;
      for (std::size_t oi = 0; oi < n && !again; ++oi) {
        std::size_t i = order[oi];
        if (motion[i].advancing && motion[i].freezable) {
          for (std::size_t k = 0; k < corridors.size() && !again; ++k) {
            const auto& cor = corridors[k].span;
            if (cor.cause == agents[i].spec.id || now + 1 < cor.from || now + 1 >= cor.until) continue;
            if (agents[i].exempt_corridors.contains(k)) continue;
            for (Cell c : cells_of(motion[i].next, fp(i))) {
              if (cor.cells.contains(c) && !motion[i].cur.contains(c, fp(i))) {
                freeze(motion[i]);
                again = true;
                break;
              }
            }
          }
        }
        for (std::size_t oj = oi + 1; oj < n && !again; ++oj) {
          std::size_t j = order[oj];
          Motion& a = motion[i];
          Motion& b = motion[j];
          if (!a.advancing && !b.advancing) continue;
          std::size_t victim = n;
          if (occ_overlap(a.next, fp(i), b.next, fp(j))) {
            // Hold back whoever is moving into the contested cells, the later id first.
            if (b.freezable && entering(b, fp(j)))
              victim = j;
            else if (a.freezable && entering(a, fp(i)))
              victim = i;
          } else if (crossing(a, fp(i), b, fp(j))) {
            victim = a.freezable ? i : (b.freezable ? j : n);
          } else if (crossing(b, fp(j), a, fp(i))) {
            victim = b.freezable ? j : (a.freezable ? i : n);
          }
          if (victim < n) {
            freeze(motion[victim]);
            again = true;
          }
        }
      }
    }
  };
  resolve_discrete();

  // Sampled continuous check over [now, now+1] with the configured margin.
  const int res = std::max(config.resolution, 2);
  std::vector<CollisionEvent> realized;
  for (bool again = true; again;) {
    again = false;
    realized.clear();
    std::vector<std::vector<Rect>> rects(n, std::vector<Rect>(static_cast<std::size_t>(res) + 1));
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k <= res; ++k) {
        double t = now + static_cast<double>(k) / res;
        ContinuousPose p = agents[i].plan && agents[i].active
                               ? interpolate(*agents[i].plan, motion[i].advancing ? t : static_cast<double>(now))
                               : ContinuousPose{static_cast<double>(agents[i].pose.anchor.x),
                                                static_cast<double>(agents[i].pose.anchor.y), 0.0};
        rects[i][static_cast<std::size_t>(k)] = agent_rect(p, fp(i), config.margin.radius);
      }
    }
    for (std::size_t oi = 0; oi < n && !again; ++oi) {
      for (std::size_t oj = oi + 1; oj < n && !again; ++oj) {
        std::size_t i = order[oi];
        std::size_t j = order[oj];
        for (int k = 0; k <= res; ++k) {
          if (!overlaps(rects[i][static_cast<std::size_t>(k)], rects[j][static_cast<std::size_t>(k)])) continue;
          bool moved = false;
          for (std::size_t v : {j, i}) {
            if (motion[v].freezable) {
              freeze(motion[v]);
              motion[v].infeasible = true;
              moved = true;
            }
          }
          if (moved) {
            again = true;
          } else {
            motion[i].infeasible = motion[i].advancing || motion[i].infeasible;
            motion[j].infeasible = motion[j].advancing || motion[j].infeasible;
            realized.push_back({now + static_cast<double>(k) / res, CollisionEvent::Kind::AgentAgent,
                                agents[i].spec.id, agents[j].spec.id, {}});
          }
          break;
        }
      }
    }
    if (again) resolve_discrete();
  }
  if (collisions != nullptr) collisions->insert(collisions->end(), realized.begin(), realized.end());

  std::vector<ExecOutcome> outcomes;
  outcomes.reserve(n);
  for (std::size_t oi = 0; oi < n; ++oi) {
    std::size_t i = order[oi];
    ExecAgent& ag = agents[i];
    Motion& m = motion[i];
    ExecOutcome out;
    out.agv = ag.spec.id;
    if (!ag.active) {
      out.pose = ag.pose;
      outcomes.push_back(out);
      continue;
    }
    if (m.frozen) {
      ag.plan->insert_wait_at(now);
      ++ag.involuntary_dwell;
      out.delayed = true;
    } else if (m.advancing) {
      ag.involuntary_dwell = 0;
      for (const auto& st : ag.plan->states) {
        if (st.step == now + 1) ag.pose = st.pose;
      }
    }
    out.pose = ag.pose;

    for (const auto& cor : corridors) {
      if (!cor.newly_active || cor.span.cause == ag.spec.id) continue;
      if (corridor_intersects(ag.plan ? &*ag.plan : nullptr, ag.pose, fp(i), cor.span, now + 1)) {
        out.reason = ReplanReason::CorridorIntersect;
        break;
      }
    }
    if (!out.reason && m.infeasible) out.reason = ReplanReason::Infeasible;
    if (!out.reason && ag.involuntary_dwell >= config.blocked_threshold) out.reason = ReplanReason::Blocked;
    if (out.reason) {
      out.kind = ExecOutcome::Kind::TriggerReplan;
      if (*out.reason == ReplanReason::Blocked) ag.involuntary_dwell = 0;
    }
    outcomes.push_back(out);
  }
  (void)layout;
  return outcomes;
}

}  // namespace warerover
