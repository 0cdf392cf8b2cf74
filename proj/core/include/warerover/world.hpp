#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "warerover/geometry.hpp"
#include "warerover/path.hpp"
#include "warerover/stage.hpp"

namespace warerover {

using CellSet = std::unordered_set<Cell>;

struct SkuCount {
  SkuId sku;
  int count = 0;

  bool operator==(const SkuCount&) const = default;
};

struct ShelfPod {
  ShelfId id;
  Cell home;
  std::vector<SkuCount> contents;
  int size = 1;

  bool operator==(const ShelfPod&) const = default;
};

struct Station {
  StationId id;
  Cell cell;
  int service_time = 1;

  bool operator==(const Station&) const = default;
};

struct AgvSpec {
  AgvId id;
  int footprint = 1;
  int steps_per_cell = 1;
  std::string kind = "carrier";
  int turn_cost = 0;

  bool operator==(const AgvSpec&) const = default;
};

struct AgvStart {
  AgvSpec spec;
  Pose pose;

  bool operator==(const AgvStart&) const = default;
};

// Static warehouse geometry. Immutable once built; call build_index() after
// editing the public fields so the cell lookups stay in sync.
class Layout {
 public:
  int width = 1;
  int height = 1;
  std::vector<ShelfPod> shelves;
  std::vector<Station> stations;
  std::vector<Cell> parking;
  std::vector<Cell> obstacles;
  std::vector<AgvStart> agvs;

  void build_index();

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool block_in_bounds(Cell anchor, int footprint) const {
    return anchor.x >= 0 && anchor.y >= 0 && anchor.x + footprint <= width && anchor.y + footprint <= height;
  }
  int cell_count() const { return width * height; }
  int index_of(Cell c) const { return c.y * width + c.x; }
  Cell cell_at(int index) const { return {index % width, index / width}; }

  bool is_obstacle(Cell c) const { return obstacle_[static_cast<std::size_t>(index_of(c))] != 0; }
  bool is_station(Cell c) const { return station_at_[static_cast<std::size_t>(index_of(c))] >= 0; }
  // Shelf whose home block covers `c`, if any.
  const ShelfPod* shelf_home_at(Cell c) const;

  const ShelfPod& shelf(ShelfId id) const;
  const Station& station(StationId id) const;
  const ShelfPod* find_shelf(ShelfId id) const;
  const Station* find_station(StationId id) const;

  bool operator==(const Layout& o) const;

 private:
  std::vector<std::uint8_t> obstacle_;
  std::vector<int> shelf_at_;
  std::vector<int> station_at_;
};

struct Health {
  enum class Kind : std::uint8_t { Active, Failed };
  Kind kind = Kind::Active;
  int remaining_down_steps = 0;

  bool active() const { return kind == Kind::Active; }
  static Health failed(int remaining) { return {Kind::Failed, remaining}; }
  bool operator==(const Health&) const = default;
};

struct AgvState {
  AgvSpec spec;
  Pose pose;
  std::optional<ShelfId> carrying;
  std::optional<TaskId> task;
  TaskStage stage = TaskStage::Done;
  Health health;
  std::optional<TimedPath> plan;
};

// Throws ValidationError naming the first violated invariant.
void validate_layout(const Layout& layout);

// Parses the JSON layout document and validates it. Throws ParseError or
// ValidationError.
Layout load_layout(std::string_view json_text);
Layout load_layout_file(const std::string& path);
std::string serialize_layout(const Layout& layout);

// Deterministic block layout: 2-row shelf blocks separated by 1-cell aisles,
// stations spread along the south boundary, parking along the north boundary.
// Throws InfeasibleDensityError when the entities do not fit.
Layout generate_layout(int width, int height, int shelf_count, int station_count,
                       const std::vector<AgvSpec>& agv_specs, std::uint64_t seed);

// A loaded AGV cannot enter any stored shelf's home cells except those of the
// shelf it carries (`carried`); an unloaded AGV drives underneath shelves.
bool is_traversable(const Layout& layout, Cell anchor, int footprint, bool carrying, const CellSet& dynamic_blocks,
                    ShelfId carried = ShelfId{});

// Static feasibility of a task for an AGV: the shelf fits, and both the shelf
// home and the station admit the AGV's footprint while loaded.
bool can_serve(const Layout& layout, const AgvSpec& spec, const ShelfPod& shelf, const Station& station);

// Cells reachable from `from` for the given footprint/load ignoring dynamic agents.
std::vector<std::uint8_t> static_reachability(const Layout& layout, Cell from, int footprint, bool carrying,
                                              ShelfId carried = ShelfId{});

}  // namespace warerover
