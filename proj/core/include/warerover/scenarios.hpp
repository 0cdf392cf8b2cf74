#pragma once

#include <string_view>

#include "warerover/engine.hpp"

namespace warerover {

// Built-in experiment presets at warehouse scale (20x15, 9 AGVs, 32 shelves,
// 8 stations, 30 one-shot orders).
enum class Scenario : std::uint8_t { Homogeneous, Heterogeneous, Fault };

// Accepts homogeneous|heterogeneous|fault; throws ConfigError.
Scenario scenario_from_string(std::string_view name);
std::string_view env_label(Scenario s);  // Ho | He | FT

// Nine 1x1 AGVs on a generated block layout.
Layout homogeneous_layout();
// Six 1x1 fast AGVs and three 2x2 slow AGVs; 1x1 and 2x2 shelves in
// 2-cell-wide aisles.
Layout heterogeneous_layout();

ExperimentConfig scenario_config(Scenario s);

// os | wave | hotspot | burst | steady with preset parameters; throws ConfigError.
OrderPattern pattern_from_string(std::string_view name, int orders = 30);

}  // namespace warerover
