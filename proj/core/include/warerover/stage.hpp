#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace warerover {

enum class TaskStage : std::uint8_t {
  GoToShelf,
  LiftShelf,
  CarryToStation,
  WaitService,
  ReturnShelf,
  DropShelf,
  Done,
};

inline constexpr std::array kStageSequence = {
    TaskStage::GoToShelf,   TaskStage::LiftShelf, TaskStage::CarryToStation, TaskStage::WaitService,
    TaskStage::ReturnShelf, TaskStage::DropShelf, TaskStage::Done,
};

inline constexpr TaskStage next_stage(TaskStage s) {
  return s == TaskStage::Done ? TaskStage::Done : static_cast<TaskStage>(static_cast<int>(s) + 1);
}

// Stages in which the AGV has the shelf lifted.
inline constexpr bool is_carrying_stage(TaskStage s) {
  return s == TaskStage::CarryToStation || s == TaskStage::WaitService || s == TaskStage::ReturnShelf ||
         s == TaskStage::DropShelf;
}

std::string_view to_string(TaskStage s);

}  // namespace warerover
