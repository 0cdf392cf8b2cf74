#include <algorithm>
#include <cassert>
#include <deque>
#include <limits>
#include <queue>
#include <set>
#include <tuple>

#include "warerover/planner.hpp"

namespace warerover {

void BlockSet::add(Cell c, int from, int until) {
  if (until <= from) return;
  windows_[c].push_back({from, until});
  last_active_ = std::max(last_active_, until - 1);
}

bool BlockSet::blocked(Cell c, int step) const {
  if (windows_.empty()) return false;
  auto it = windows_.find(c);
  if (it == windows_.end()) return false;
  for (const auto& w : it->second) {
    if (step >= w.from && step < w.until) return true;
  }
  return false;
}

CellSet BlockSet::cells_active_at(int step) const {
  CellSet out;
  for (const auto& [c, ws] : windows_) {
    for (const auto& w : ws) {
      if (step >= w.from && step < w.until) {
        out.insert(c);
        break;
      }
    }
  }
  return out;
}

ReservationTable::ReservationTable(const Layout& layout, int base_step) : layout_(&layout), base_(base_step) {
  layers_.emplace_back(static_cast<std::size_t>(layout.cell_count()), std::int16_t{-1});
}

void ReservationTable::ensure_layers(int last_step) {
  while (static_from() < last_step) layers_.push_back(layers_.back());
}

void ReservationTable::stamp(int agent_index, int from_step, int to_step) {
  const Entry& e = agents_[static_cast<std::size_t>(agent_index)];
  for (int s = from_step; s <= to_step; ++s) {
    auto& layer = layers_[static_cast<std::size_t>(s - base_)];
    for (Cell c : occupancy_at(e.path, e.footprint, s)) {
      if (!layout_->in_bounds(c)) continue;
      auto& slot = layer[static_cast<std::size_t>(layout_->index_of(c))];
      if (slot < 0) slot = static_cast<std::int16_t>(agent_index);
    }
  }
}

void ReservationTable::add(const TimedPath& path, int footprint) {
  agents_.push_back({path, footprint});
  ensure_layers(std::max(path.end_step(), base_));
  stamp(static_cast<int>(agents_.size()) - 1, base_, static_from());
}

int ReservationTable::occupant(Cell c, int step) const {
  int k = std::clamp(step - base_, 0, static_cast<int>(layers_.size()) - 1);
  return layers_[static_cast<std::size_t>(k)][static_cast<std::size_t>(layout_->index_of(c))];
}

std::optional<Heading> ReservationTable::direction(int agent_index, int step) const {
  return moving_direction_at(agents_[static_cast<std::size_t>(agent_index)].path, step);
}

namespace {

constexpr int kActionRankMove = 0;
constexpr int kActionRankRotate = 1;
constexpr int kActionRankWait = 2;

struct Node {
  Cell anchor;
  Heading heading;
  int t;
  int conflicts;  // soft conflicts with peers' current paths
  int rotations;
  bool escaped;
  int parent;
  Action action;
  int action_rank;
};

struct OpenEntry {
  int f;
  int conflicts;
  int rotations;
  int action_rank;
  int neg_t;
  int y;
  int x;
  int heading;
  int id;

  bool operator>(const OpenEntry& o) const {
    return std::tie(f, conflicts, rotations, action_rank, neg_t, y, x, heading, id) >
           std::tie(o.f, o.conflicts, o.rotations, o.action_rank, o.neg_t, o.y, o.x, o.heading, o.id);
  }
};

std::uint64_t pack_vertex(Cell c, int step) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(step)) << 32) |
         (static_cast<std::uint64_t>(static_cast<std::uint16_t>(c.x)) << 16) | static_cast<std::uint16_t>(c.y);
}

class Search {
 public:
  Search(const LowLevelQuery& q, const Layout& layout, const BlockSet& blocked, const ReservationTable* res,
         const ReservationTable* soft)
      : q_(q), layout_(layout), blocked_(blocked), res_(res), soft_(soft), fp_(q.spec.footprint) {}

  LowLevelResult run();

 private:
  bool anchor_ok(Cell a) const {
    return layout_.block_in_bounds(a, fp_) && static_ok_[static_cast<std::size_t>(layout_.index_of(a))];
  }
  bool cell_ok(Cell c, int s, bool escaped) const;
  bool occupancy_ok(Cell a, Cell b, bool two, int s, bool escaped) const;
  bool dynamic_crossing_ok(Cell a, Cell b, int s_enter, int s_leave, Heading dir) const {
    return crossing_ok(res_, a, b, s_enter, s_leave, dir);
  }
  bool crossing_ok(const ReservationTable* table, Cell a, Cell b, int s_enter, int s_leave, Heading dir) const;
  int soft_cost(Cell a, Cell b, int from, int to, std::optional<Heading> dir) const;
  bool touches_grace(Cell a) const;
  bool needs_grace(Cell a, int s) const;
  void push(const Node& n);
  TimedPath reconstruct(int id) const;

  const LowLevelQuery& q_;
  const Layout& layout_;
  const BlockSet& blocked_;
  const ReservationTable* res_;
  const ReservationTable* soft_;
  int fp_;

  std::vector<std::uint8_t> static_ok_;
  std::unordered_set<std::uint64_t> vertex_constraints_;
  std::set<std::tuple<int, int, int, int, int>> edge_constraints_;
  int static_from_ = 0;
  int goal_clear_after_ = std::numeric_limits<int>::min();

  std::vector<Node> nodes_;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open_;
  std::unordered_map<std::uint64_t, std::tuple<int, int, int>> best_;
};

bool Search::cell_ok(Cell c, int s, bool escaped) const {
  if (!blocked_.empty() && blocked_.blocked(c, s)) {
    if (escaped || s > q_.grace_until || !q_.grace.contains(c)) return false;
  }
  if (!vertex_constraints_.empty() && vertex_constraints_.contains(pack_vertex(c, s))) return false;
  if (res_ != nullptr && res_->occupant(c, s) >= 0) return false;
  return true;
}

bool Search::occupancy_ok(Cell a, Cell b, bool two, int s, bool escaped) const {
  for (int dy = 0; dy < fp_; ++dy) {
    for (int dx = 0; dx < fp_; ++dx) {
      if (!cell_ok({a.x + dx, a.y + dy}, s, escaped)) return false;
      if (two && !block_contains(a, fp_, {b.x + dx, b.y + dy}) && !cell_ok({b.x + dx, b.y + dy}, s, escaped))
        return false;
    }
  }
  return true;
}

// Entering cells of `b` at s_enter must not be vacated by a reserved agent
// travelling another way, and cells of `a` vacated at s_leave must not be
// entered by one.
bool Search::crossing_ok(const ReservationTable* table, Cell a, Cell b, int s_enter, int s_leave, Heading dir) const {
  if (table == nullptr) return true;
  for (Cell c : footprint_cells(b, fp_)) {
    if (block_contains(a, fp_, c)) continue;
    int x = table->occupant(c, s_enter - 1);
    if (x >= 0 && table->occupant(c, s_enter) != x && table->direction(x, s_enter - 1) != dir) return false;
  }
  for (Cell c : footprint_cells(a, fp_)) {
    if (block_contains(b, fp_, c)) continue;
    int x = table->occupant(c, s_leave);
    if (x >= 0 && table->occupant(c, s_leave - 1) != x && table->direction(x, s_leave - 1) != dir) return false;
  }
  return true;
}

// Number of (step, cell) overlaps with the soft table over steps from..to,
// plus one for a crossing it would create. Only used to break ties.
int Search::soft_cost(Cell a, Cell b, int from, int to, std::optional<Heading> dir) const {
  if (soft_ == nullptr) return 0;
  int n = 0;
  for (int s = from; s <= to; ++s) {
    bool two = dir.has_value() && s < to;
    for (int dy = 0; dy < fp_; ++dy) {
      for (int dx = 0; dx < fp_; ++dx) {
        if (soft_->occupant({b.x + dx, b.y + dy}, s) >= 0) ++n;
        if (two && !block_contains(b, fp_, {a.x + dx, a.y + dy}) && soft_->occupant({a.x + dx, a.y + dy}, s) >= 0) ++n;
      }
    }
  }
  if (dir && !crossing_ok(soft_, a, b, from, to, *dir)) ++n;
  return n;
}

bool Search::touches_grace(Cell a) const {
  if (q_.grace.empty()) return false;
  for (Cell c : footprint_cells(a, fp_)) {
    if (q_.grace.contains(c)) return true;
  }
  return false;
}

bool Search::needs_grace(Cell a, int s) const {
  if (blocked_.empty()) return false;
  for (Cell c : footprint_cells(a, fp_)) {
    if (blocked_.blocked(c, s)) return true;
  }
  return false;
}

void Search::push(const Node& n) {
  int tk = std::min(n.t, static_from_);
  std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(tk)) << 24) |
                      (static_cast<std::uint64_t>(layout_.index_of(n.anchor)) << 3) |
                      (static_cast<std::uint64_t>(q_.spec.turn_cost > 0 ? static_cast<int>(n.heading) : 0) << 1) |
                      (n.escaped ? 1u : 0u);
  auto it = best_.find(key);
  std::tuple<int, int, int> score{n.t, n.conflicts, n.rotations};
  if (it != best_.end() && it->second <= score) return;
  best_[key] = score;
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(n);
  int h = manhattan(n.anchor, q_.goal) * q_.spec.steps_per_cell;
  open_.push({n.t + h, n.conflicts, n.rotations, n.action_rank, -n.t, n.anchor.y, n.anchor.x, static_cast<int>(n.heading), id});
}

TimedPath Search::reconstruct(int id) const {
  std::vector<int> chain;
  for (int i = id; i >= 0; i = nodes_[static_cast<std::size_t>(i)].parent) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());
  TimedPath path;
  path.agv = q_.spec.id;
  const Node& first = nodes_[static_cast<std::size_t>(chain.front())];
  path.states.push_back({{first.anchor, first.heading}, first.t});
  for (std::size_t k = 1; k < chain.size(); ++k) {
    const Node& n = nodes_[static_cast<std::size_t>(chain[k])];
    path.actions.push_back(n.action);
    path.states.push_back({{n.anchor, n.heading}, n.t});
  }
  return path;
}

LowLevelResult Search::run() {
  LowLevelResult result;
  const int spc = q_.spec.steps_per_cell;
  const int tc = q_.spec.turn_cost;
  static const CellSet none;

  static_ok_.assign(static_cast<std::size_t>(layout_.cell_count()), 0);
  for (int i = 0; i < layout_.cell_count(); ++i) {
    Cell a = layout_.cell_at(i);
    static_ok_[static_cast<std::size_t>(i)] = is_traversable(layout_, a, fp_, q_.carrying, none, q_.carried) ? 1 : 0;
  }
  if (!layout_.block_in_bounds(q_.goal, fp_) || !anchor_ok(q_.goal)) return result;
  if (q_.start_step > q_.horizon) return result;
  {
    // Goal must be statically reachable; the start pose itself is taken as given.
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(layout_.cell_count()), 0);
    std::deque<Cell> queue{q_.start.anchor};
    seen[static_cast<std::size_t>(layout_.index_of(q_.start.anchor))] = 1;
    bool found = q_.start.anchor == q_.goal;
    while (!queue.empty() && !found) {
      Cell c = queue.front();
      queue.pop_front();
      for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
        Cell n = step_toward(c, h);
        if (!anchor_ok(n)) continue;
        auto idx = static_cast<std::size_t>(layout_.index_of(n));
        if (seen[idx]) continue;
        seen[idx] = 1;
        if (n == q_.goal) found = true;
        queue.push_back(n);
      }
    }
    if (!found) return result;
  }

  int max_constraint = q_.start_step;
  for (const auto& c : q_.constraints) {
    if (c.agv != q_.spec.id) continue;
    max_constraint = std::max(max_constraint, c.step + 1);
    if (c.kind == Constraint::Kind::Vertex)
      vertex_constraints_.insert(pack_vertex(c.cell, c.step));
    else
      edge_constraints_.insert({c.from_cell.x, c.from_cell.y, c.cell.x, c.cell.y, c.step});
  }
  static_from_ = std::max({q_.start_step, max_constraint, blocked_.last_active_step() + 1, q_.grace_until + 1,
                           res_ != nullptr ? res_->static_from() : 0});

  // Earliest step from which the agent may rest on the goal indefinitely.
  for (Cell c : footprint_cells(q_.goal, fp_)) {
    if (auto it = blocked_.windows().find(c); it != blocked_.windows().end()) {
      for (const auto& w : it->second) goal_clear_after_ = std::max(goal_clear_after_, w.until - 1);
    }
    for (const auto& con : q_.constraints) {
      if (con.agv == q_.spec.id && con.kind == Constraint::Kind::Vertex && con.cell == c)
        goal_clear_after_ = std::max(goal_clear_after_, con.step);
    }
    if (res_ != nullptr) {
      if (res_->occupant(c, res_->static_from()) >= 0) return result;  // parked on for good
      for (int s = std::max(q_.start_step, res_->base_step()); s < res_->static_from(); ++s) {
        if (res_->occupant(c, s) >= 0) goal_clear_after_ = std::max(goal_clear_after_, s);
      }
    }
  }

  bool start_escaped = !touches_grace(q_.start.anchor);
  push({q_.start.anchor, q_.start.heading, q_.start_step, 0, 0, start_escaped, -1, Action::wait(), kActionRankWait});

  while (!open_.empty()) {
    OpenEntry top = open_.top();
    open_.pop();
    const Node cur = nodes_[static_cast<std::size_t>(top.id)];
    {
      int tk = std::min(cur.t, static_from_);
      std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(tk)) << 24) |
                          (static_cast<std::uint64_t>(layout_.index_of(cur.anchor)) << 3) |
                          (static_cast<std::uint64_t>(tc > 0 ? static_cast<int>(cur.heading) : 0) << 1) |
                          (cur.escaped ? 1u : 0u);
      if (best_[key] < std::tuple{cur.t, cur.conflicts, cur.rotations}) continue;
    }
    ++result.expansions;

    if (cur.anchor == q_.goal && cur.t > goal_clear_after_ && cur.escaped) {
      result.path = reconstruct(top.id);
      return result;
    }

    // Move
    for (Heading dir : {Heading::N, Heading::E, Heading::S, Heading::W}) {
      if (tc > 0 && dir != cur.heading) continue;
      Cell next = step_toward(cur.anchor, dir);
      if (!anchor_ok(next)) continue;
      int arrive = cur.t + spc;
      if (arrive > q_.horizon) continue;
      if (!edge_constraints_.empty() &&
          edge_constraints_.contains({cur.anchor.x, cur.anchor.y, next.x, next.y, cur.t}))
        continue;
      bool ok = true;
      for (int s = cur.t + 1; s <= arrive && ok; ++s) ok = occupancy_ok(next, cur.anchor, s < arrive, s, cur.escaped);
      if (!ok || !dynamic_crossing_ok(cur.anchor, next, cur.t + 1, arrive, dir)) continue;
      int turns = tc > 0 ? 0 : quarter_turns_between(cur.heading, dir);
      bool escaped = cur.escaped || !touches_grace(next);
      int conflicts = cur.conflicts + soft_cost(cur.anchor, next, cur.t + 1, arrive, dir);
      push({next, dir, arrive, conflicts, cur.rotations + turns, escaped, top.id, Action::move(dir), kActionRankMove});
    }

    // Rotate
    if (tc > 0) {
      int done = cur.t + tc;
      if (done <= q_.horizon) {
        bool ok = true;
        for (int s = cur.t + 1; s <= done && ok; ++s) ok = occupancy_ok(cur.anchor, cur.anchor, false, s, cur.escaped);
        if (ok) {
          int conflicts = cur.conflicts + soft_cost(cur.anchor, cur.anchor, cur.t + 1, done, std::nullopt);
          push({cur.anchor, rotate_cw(cur.heading), done, conflicts, cur.rotations + 1, cur.escaped, top.id, Action::rotate(true),
                kActionRankRotate});
          push({cur.anchor, rotate_ccw(cur.heading), done, conflicts, cur.rotations + 1, cur.escaped, top.id,
                Action::rotate(false), kActionRankRotate});
        }
      }
    }

    // Wait (not while relying on the grace allowance)
    if (cur.t + 1 <= q_.horizon && !(!cur.escaped && needs_grace(cur.anchor, cur.t + 1)) &&
        occupancy_ok(cur.anchor, cur.anchor, false, cur.t + 1, cur.escaped)) {
      int conflicts = cur.conflicts + soft_cost(cur.anchor, cur.anchor, cur.t + 1, cur.t + 1, std::nullopt);
      push({cur.anchor, cur.heading, cur.t + 1, conflicts, cur.rotations, cur.escaped, top.id, Action::wait(), kActionRankWait});
    }
  }
  return result;
}

}  // namespace

LowLevelResult low_level_search(const LowLevelQuery& query, const Layout& layout, const BlockSet& blocked,
                                const ReservationTable* reservations, const ReservationTable* avoid) {
  Search search(query, layout, blocked, reservations, avoid);
  return search.run();
}

TimedPath wait_path(AgvId agv, Pose pose, int start_step, int steps) {
  TimedPath p = TimedPath::stationary(agv, pose, start_step);
  for (int i = 0; i < steps; ++i) p.append(Action::wait(), pose, 1);
  return p;
}

}  // namespace warerover
