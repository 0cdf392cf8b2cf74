#include "warerover/scenarios.hpp"

#include "warerover/errors.hpp"

namespace warerover {

Scenario scenario_from_string(std::string_view name) {
  if (name == "homogeneous") return Scenario::Homogeneous;
  if (name == "heterogeneous") return Scenario::Heterogeneous;
  if (name == "fault") return Scenario::Fault;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::string_view env_label(Scenario s) {
  switch (s) {
    case Scenario::Homogeneous: return "Ho";
    case Scenario::Heterogeneous: return "He";
    case Scenario::Fault: return "FT";
  }
  return "?";
}

Layout homogeneous_layout() {
  std::vector<AgvSpec> specs;
  for (int i = 0; i < 9; ++i) specs.push_back({AgvId{i}, 1, 1, "carrier", 0});
  return generate_layout(20, 15, 32, 8, specs, 1);
}

Layout heterogeneous_layout() {
  Layout layout;
  layout.width = 20;
  layout.height = 15;
  for (int i = 0; i < 8; ++i) layout.stations.push_back({StationId{i}, {2 + 2 * i, 0}, 2});

  // Shelf bands on rows 3-4, 7-8 and 11-12; 4-wide segments at x 2-5, 8-11,
  // 14-17 leave 2-wide aisles for loaded 2x2 AGVs.
  std::vector<std::pair<Cell, int>> pods;
  for (int x0 : {2, 8, 14}) {
    pods.push_back({{x0, 11}, 2});
    pods.push_back({{x0 + 2, 11}, 2});
  }
  pods.push_back({{8, 7}, 2});
  pods.push_back({{10, 7}, 2});
  for (int x0 : {2, 14}) {
    for (int dx = 0; dx < 4; ++dx) pods.push_back({{x0 + dx, 7}, 1});
  }
  for (int y : {3, 4}) {
    for (int dx = 0; dx < 4; ++dx) pods.push_back({{2 + dx, y}, 1});
  }
  for (int x0 : {8, 14}) {
    for (int dx = 0; dx < 4; ++dx) pods.push_back({{x0 + dx, 4}, 1});
  }
  const int sku_types = 16;
  for (std::size_t i = 0; i < pods.size(); ++i) {
    ShelfPod pod;
    pod.id = ShelfId{static_cast<int>(i)};
    pod.home = pods[i].first;
    pod.size = pods[i].second;
    for (int k = 0; k < 3; ++k) pod.contents.push_back({SkuId{static_cast<int>((i + 5 * k) % sku_types)}, 20});
    std::sort(pod.contents.begin(), pod.contents.end(),
              [](const SkuCount& a, const SkuCount& b) { return a.sku < b.sku; });
    layout.shelves.push_back(std::move(pod));
  }

  int id = 0;
  for (int x : {0, 2, 7, 9, 13, 19}) {
    AgvSpec spec{AgvId{id++}, 1, 1, "carrier", 0};
    layout.parking.push_back({x, 14});
    layout.agvs.push_back({spec, {{x, 14}, Heading::S}});
  }
  for (int x : {4, 10, 16}) {
    AgvSpec spec{AgvId{id++}, 2, 2, "carrier", 1};
    layout.parking.push_back({x, 13});
    layout.agvs.push_back({spec, {{x, 13}, Heading::S}});
  }
  validate_layout(layout);
  layout.build_index();
  return layout;
}

ExperimentConfig scenario_config(Scenario s) {
  ExperimentConfig config;
  config.env = std::string(env_label(s));
  config.pattern = pattern::OneShot{30};
  config.horizon = 2000;
  switch (s) {
    case Scenario::Homogeneous: config.layout = std::make_shared<const Layout>(homogeneous_layout()); break;
    case Scenario::Heterogeneous: config.layout = std::make_shared<const Layout>(heterogeneous_layout()); break;
    case Scenario::Fault:
      config.layout = std::make_shared<const Layout>(homogeneous_layout());
      config.failures = {0.01, 40, true};
      break;
  }
  return config;
}

OrderPattern pattern_from_string(std::string_view name, int orders) {
  if (name == "os") return pattern::OneShot{orders};
  if (name == "wave") return pattern::Wave{3, (orders + 2) / 3, 100};
  if (name == "hotspot") return pattern::Hotspot{orders, 1.0};
  if (name == "burst") return pattern::Burst{0.02, 0.2, 100, 50, 600};
  if (name == "steady") return pattern::Steady{0.05, 600};
  throw ConfigError("unknown pattern '" + std::string(name) + "'");
}

}  // namespace warerover
