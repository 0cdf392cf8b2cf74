#pragma once

// Reference implementations used only by the tests. They share no code with
// the library's planners: plain breadth-first / Dijkstra searches written for
// clarity over speed.

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <functional>
#include <optional>
#include <queue>
#include <set>
#include <tuple>
#include <vector>

namespace oracle {

struct Grid {
  int width = 0;
  int height = 0;
  std::vector<char> blocked;  // row-major, y * width + x

  Grid(int w, int h) : width(w), height(h), blocked(static_cast<std::size_t>(w * h), 0) {}
  bool free(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height && !blocked[idx(x, y)]; }
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y * width + x); }
  void block(int x, int y) { blocked[idx(x, y)] = 1; }
};

// Unit vectors in N, E, S, W order (heading 0..3).
inline constexpr std::array<std::pair<int, int>, 4> kDirs{{{0, 1}, {1, 0}, {0, -1}, {-1, 0}}};

// Earliest arrival for a single footprint-1 agent on a static grid. A move is
// only possible along the current heading when turn_cost > 0 (a quarter turn
// costs turn_cost); with turn_cost == 0 heading is irrelevant. Each move
// costs steps_per_cell. Returns nullopt when unreachable.
inline std::optional<int> single_agent_cost(const Grid& g, int sx, int sy, int heading, int gx, int gy,
                                            int steps_per_cell, int turn_cost) {
  if (!g.free(gx, gy) || !g.free(sx, sy)) return std::nullopt;
  const int H = turn_cost > 0 ? 4 : 1;
  std::vector<int> dist(static_cast<std::size_t>(g.width * g.height * H), INT_MAX);
  using Item = std::tuple<int, int, int, int>;  // cost, x, y, heading
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  auto at = [&](int x, int y, int h) -> int& { return dist[g.idx(x, y) * static_cast<std::size_t>(H) + static_cast<std::size_t>(h)]; };
  int h0 = turn_cost > 0 ? heading : 0;
  at(sx, sy, h0) = 0;
  pq.emplace(0, sx, sy, h0);
  while (!pq.empty()) {
    auto [d, x, y, h] = pq.top();
    pq.pop();
    if (d != at(x, y, h)) continue;
    if (x == gx && y == gy) return d;
    auto relax = [&](int nx, int ny, int nh, int nd) {
      if (nd < at(nx, ny, nh)) {
        at(nx, ny, nh) = nd;
        pq.emplace(nd, nx, ny, nh);
      }
    };
    if (turn_cost > 0) {
      relax(x, y, (h + 1) % 4, d + turn_cost);
      relax(x, y, (h + 3) % 4, d + turn_cost);
      auto [dx, dy] = kDirs[static_cast<std::size_t>(h)];
      if (g.free(x + dx, y + dy)) relax(x + dx, y + dy, h, d + steps_per_cell);
    } else {
      for (auto [dx, dy] : kDirs) {
        if (g.free(x + dx, y + dy)) relax(x + dx, y + dy, 0, d + steps_per_cell);
      }
    }
  }
  return std::nullopt;
}

// Optimal sum of costs for two footprint-1, one-cell-per-step agents. Each
// agent's cost is the step after which it rests on its goal for good. Joint
// moves are rejected when the agents land on the same cell, or when one
// enters the cell the other leaves while their travel directions differ (a
// swap is the head-on case). Same-direction following is allowed.
inline std::optional<int> joint_sum_of_costs(const Grid& g, std::pair<int, int> s0, std::pair<int, int> g0,
                                             std::pair<int, int> s1, std::pair<int, int> g1) {
  // State: both positions plus a "finished" bit per agent. A finished agent
  // sits on its goal forever and accrues no further cost.
  struct S {
    int a, b;
    bool fa, fb;
    auto operator<=>(const S&) const = default;
  };
  auto id = [&](int x, int y) { return y * g.width + x; };
  auto xy = [&](int c) { return std::pair{c % g.width, c / g.width}; };
  const int ga = id(g0.first, g0.second);
  const int gb = id(g1.first, g1.second);

  // Options for one agent: stay (-1 dir) or move in one of four directions.
  auto options = [&](int c) {
    std::vector<std::pair<int, int>> out{{c, -1}};
    auto [x, y] = xy(c);
    for (int d = 0; d < 4; ++d) {
      auto [dx, dy] = kDirs[static_cast<std::size_t>(d)];
      if (g.free(x + dx, y + dy)) out.emplace_back(id(x + dx, y + dy), d);
    }
    return out;
  };

  std::set<std::pair<int, S>> open;
  std::vector<std::pair<S, int>> best;
  auto lookup = [&](const S& s) -> int* {
    for (auto& [k, v] : best) {
      if (k == s) return &v;
    }
    return nullptr;
  };
  auto push = [&](const S& s, int d) {
    int* cur = lookup(s);
    if (cur && *cur <= d) return;
    if (cur) {
      open.erase({*cur, s});
      *cur = d;
    } else {
      best.emplace_back(s, d);
    }
    open.insert({d, s});
  };
  push({id(s0.first, s0.second), id(s1.first, s1.second), false, false}, 0);
  while (!open.empty()) {
    auto [d, s] = *open.begin();
    open.erase(open.begin());
    if (s.fa && s.fb) return d;
    // Finishing is free and only allowed on the goal.
    if (!s.fa && s.a == ga) push({s.a, s.b, true, s.fb}, d);
    if (!s.fb && s.b == gb) push({s.a, s.b, s.fa, true}, d);
    auto oa = s.fa ? std::vector<std::pair<int, int>>{{s.a, -1}} : options(s.a);
    auto ob = s.fb ? std::vector<std::pair<int, int>>{{s.b, -1}} : options(s.b);
    for (auto [na, da] : oa) {
      for (auto [nb, db] : ob) {
        if (na == nb) continue;
        if (na == s.b && nb != s.b && da != db) continue;
        if (nb == s.a && na != s.a && da != db) continue;
        int cost = d + (s.fa ? 0 : 1) + (s.fb ? 0 : 1);
        push({na, nb, s.fa, s.fb}, cost);
      }
    }
  }
  return std::nullopt;
}

// Distance from the cell set `region` to the nearest boundary cell of an
// open width x height grid, and the smallest (x, then y) boundary cell at that
// distance.
struct BoundaryAccess {
  int distance = 0;
  std::pair<int, int> cell;
};
inline BoundaryAccess nearest_boundary(int width, int height, const std::vector<std::pair<int, int>>& region) {
  BoundaryAccess best{INT_MAX, {INT_MAX, INT_MAX}};
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) {
      if (x != 0 && y != 0 && x != width - 1 && y != height - 1) continue;
      int d = INT_MAX;
      for (auto [rx, ry] : region) d = std::min(d, std::abs(rx - x) + std::abs(ry - y));
      if (d < best.distance || (d == best.distance && std::pair{x, y} < best.cell)) best = {d, {x, y}};
    }
  }
  return best;
}

// Binomial(n, p) mean and standard deviation.
inline std::pair<double, double> binomial_moments(double n, double p) { return {n * p, std::sqrt(n * p * (1.0 - p))}; }

// Two-sided sign test p-value: probability of a split at least as extreme as
// `wins` of `n` under a fair coin.
inline double sign_test_p(int wins, int n) {
  auto tail = [&](int k) {
    double sum = 0.0;
    for (int i = k; i <= n; ++i) sum += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
    return sum;
  };
  int k = std::max(wins, n - wins);
  return std::min(1.0, 2.0 * tail(k));
}

}  // namespace oracle
