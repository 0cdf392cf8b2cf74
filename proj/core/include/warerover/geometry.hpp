#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string_view>
#include <vector>

namespace warerover {

// Integer identifier tagged by the entity it names, so an AgvId cannot be
// passed where a ShelfId is expected.
template <typename Tag>
struct Id {
  int value = -1;

  constexpr Id() = default;
  constexpr explicit Id(int v) : value(v) {}

  constexpr bool valid() const { return value >= 0; }
  constexpr auto operator<=>(const Id&) const = default;
};

template <typename Tag>
std::ostream& operator<<(std::ostream& os, Id<Tag> id) {
  return os << id.value;
}

using AgvId = Id<struct AgvTag>;
using ShelfId = Id<struct ShelfTag>;
using StationId = Id<struct StationTag>;
using SkuId = Id<struct SkuTag>;
using OrderId = Id<struct OrderTag>;
using TaskId = Id<struct TaskTag>;
using CorridorId = Id<struct CorridorTag>;
using FailureId = Id<struct FailureTag>;

// Grid cell. x grows east, y grows north; (0,0) is the south-west corner.
struct Cell {
  int x = 0;
  int y = 0;

  constexpr auto operator<=>(const Cell&) const = default;
};

std::ostream& operator<<(std::ostream& os, Cell c);

inline constexpr int manhattan(Cell a, Cell b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

enum class Heading : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

inline constexpr Heading rotate_cw(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }
inline constexpr Heading rotate_ccw(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }

inline constexpr Cell step_toward(Cell c, Heading h) {
  switch (h) {
    case Heading::N: return {c.x, c.y + 1};
    case Heading::E: return {c.x + 1, c.y};
    case Heading::S: return {c.x, c.y - 1};
    case Heading::W: return {c.x - 1, c.y};
  }
  return c;
}

// Number of 90 degree turns separating two headings (0, 1 or 2).
inline constexpr int quarter_turns_between(Heading a, Heading b) {
  int d = (static_cast<int>(b) - static_cast<int>(a) + 4) % 4;
  return d == 3 ? 1 : d;
}

std::string_view to_string(Heading h);
Heading heading_from_string(std::string_view s);

struct Pose {
  Cell anchor;
  Heading heading = Heading::N;

  constexpr auto operator<=>(const Pose&) const = default;
};

// The footprint x footprint block of cells whose minimum corner is `anchor`.
std::vector<Cell> footprint_cells(Cell anchor, int footprint);

// Axis-aligned block test without materializing the cells.
inline constexpr bool block_contains(Cell anchor, int footprint, Cell c) {
  return c.x >= anchor.x && c.x < anchor.x + footprint && c.y >= anchor.y && c.y < anchor.y + footprint;
}

inline constexpr bool blocks_overlap(Cell a, int fa, Cell b, int fb) {
  return a.x < b.x + fb && b.x < a.x + fa && a.y < b.y + fb && b.y < a.y + fa;
}

}  // namespace warerover

template <typename Tag>
struct std::hash<warerover::Id<Tag>> {
  std::size_t operator()(warerover::Id<Tag> id) const noexcept { return std::hash<int>{}(id.value); }
};

template <>
struct std::hash<warerover::Cell> {
  std::size_t operator()(warerover::Cell c) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
                                      static_cast<std::uint32_t>(c.y));
  }
};
