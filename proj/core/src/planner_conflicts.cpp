#include <algorithm>
#include <limits>
#include <numeric>

#include "warerover/planner.hpp"

namespace warerover {

std::string_view to_string(ConflictKind k) {
  switch (k) {
    case ConflictKind::Vertex: return "vertex";
    case ConflictKind::Edge: return "edge";
    case ConflictKind::Corridor: return "corridor";
  }
  return "?";
}

namespace {

struct Track {
  const TimedPath* path;
  int footprint;
};

bool occ_contains(const Occupancy& o, int fp, Cell c) { return o.contains(c, fp); }

std::vector<Cell> occ_cells(const Occupancy& o, int fp) {
  auto cells = footprint_cells(o.a, fp);
  if (o.spans_two) {
    for (Cell c : footprint_cells(o.b, fp)) {
      if (!block_contains(o.a, fp, c)) cells.push_back(c);
    }
  }
  return cells;
}

std::optional<Cell> first_overlap(const Occupancy& x, int fx, const Occupancy& y, int fy) {
  for (Cell c : occ_cells(x, fx)) {
    if (occ_contains(y, fy, c)) return c;
  }
  return std::nullopt;
}

// Cell entered by `x` during [s, s+1] that `y` vacates while travelling in a
// different direction (a swap is the opposite-direction special case).
std::optional<Cell> crossing_entry(const Track& x, const Track& y, int s) {
  Occupancy x0 = occupancy_blocks_at(*x.path, s);
  Occupancy x1 = occupancy_blocks_at(*x.path, s + 1);
  Occupancy y0 = occupancy_blocks_at(*y.path, s);
  Occupancy y1 = occupancy_blocks_at(*y.path, s + 1);
  auto dx = moving_direction_at(*x.path, s);
  auto dy = moving_direction_at(*y.path, s);
  if (dx == dy) return std::nullopt;
  for (Cell c : occ_cells(x1, x.footprint)) {
    if (occ_contains(x0, x.footprint, c)) continue;
    if (occ_contains(y0, y.footprint, c) && !occ_contains(y1, y.footprint, c)) return c;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Conflict> detect_conflicts(const std::vector<TimedPath>& paths, const std::map<AgvId, int>& footprints,
                                         const std::vector<CorridorSpan>& corridors) {
  if (paths.empty()) return std::nullopt;
  std::vector<Track> tracks;
  for (const auto& p : paths) {
    auto it = footprints.find(p.agv);
    tracks.push_back({&p, it == footprints.end() ? 1 : it->second});
  }
  std::sort(tracks.begin(), tracks.end(), [](const Track& a, const Track& b) { return a.path->agv < b.path->agv; });

  int tmin = std::numeric_limits<int>::max();
  int tmax = std::numeric_limits<int>::min();
  for (const auto& t : tracks) {
    tmin = std::min(tmin, t.path->start_step());
    tmax = std::max(tmax, t.path->end_step());
  }
  for (const auto& c : corridors) tmax = std::max(tmax, c.from);

  const std::size_t n = tracks.size();
  std::vector<Occupancy> occ(n);
  for (int s = tmin; s <= tmax + 1; ++s) {
    for (std::size_t i = 0; i < n; ++i) occ[i] = occupancy_blocks_at(*tracks[i].path, s);

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (auto c = first_overlap(occ[i], tracks[i].footprint, occ[j], tracks[j].footprint))
          return Conflict{tracks[i].path->agv, tracks[j].path->agv, s, ConflictKind::Vertex, *c};
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      Occupancy prev = occupancy_blocks_at(*tracks[i].path, s - 1);
      for (const auto& corridor : corridors) {
        if (corridor.cause == tracks[i].path->agv || s < corridor.from || s >= corridor.until) continue;
        for (Cell c : occ_cells(occ[i], tracks[i].footprint)) {
          if (corridor.cells.contains(c) && !occ_contains(prev, tracks[i].footprint, c))
            return Conflict{tracks[i].path->agv, corridor.cause, s, ConflictKind::Corridor, c};
        }
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (auto c = crossing_entry(tracks[i], tracks[j], s))
          return Conflict{tracks[i].path->agv, tracks[j].path->agv, s, ConflictKind::Edge, *c};
        if (auto c = crossing_entry(tracks[j], tracks[i], s))
          return Conflict{tracks[i].path->agv, tracks[j].path->agv, s, ConflictKind::Edge, *c};
      }
    }
  }
  return std::nullopt;
}

}  // namespace warerover
