#include "warerover/geometry.hpp"

#include "warerover/errors.hpp"
#include "warerover/path.hpp"
#include "warerover/stage.hpp"

#include <string>

namespace warerover {

std::ostream& operator<<(std::ostream& os, Cell c) { return os << '(' << c.x << ',' << c.y << ')'; }

std::string_view to_string(Heading h) {
  switch (h) {
    case Heading::N: return "N";
    case Heading::E: return "E";
    case Heading::S: return "S";
    case Heading::W: return "W";
  }
  return "?";
}

Heading heading_from_string(std::string_view s) {
  if (s == "N") return Heading::N;
  if (s == "E") return Heading::E;
  if (s == "S") return Heading::S;
  if (s == "W") return Heading::W;
  throw ParseError("unknown heading '" + std::string(s) + "'");
}

std::vector<Cell> footprint_cells(Cell anchor, int footprint) {
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(footprint * footprint));
  for (int dy = 0; dy < footprint; ++dy) {
    for (int dx = 0; dx < footprint; ++dx) cells.push_back({anchor.x + dx, anchor.y + dy});
  }
  return cells;
}

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Move: return "move";
    case ActionKind::Rotate: return "rotate";
    case ActionKind::Wait: return "wait";
    case ActionKind::Lift: return "lift";
    case ActionKind::Drop: return "drop";
  }
  return "?";
}

std::string_view to_string(TaskStage s) {
  switch (s) {
    case TaskStage::GoToShelf: return "GoToShelf";
    case TaskStage::LiftShelf: return "LiftShelf";
    case TaskStage::CarryToStation: return "CarryToStation";
    case TaskStage::WaitService: return "WaitService";
    case TaskStage::ReturnShelf: return "ReturnShelf";
    case TaskStage::DropShelf: return "DropShelf";
    case TaskStage::Done: return "Done";
  }
  return "?";
}

}  // namespace warerover
