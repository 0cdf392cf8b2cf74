#include "warerover/world.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "warerover/errors.hpp"

namespace warerover {

using nlohmann::json;

namespace {

std::string cell_str(Cell c) {
  std::ostringstream os;
  os << c;
  return os.str();
}

[[noreturn]] void invalid(const std::string& what) { throw ValidationError("layout validation: " + what); }

}  // namespace

void Layout::build_index() {
  std::sort(obstacles.begin(), obstacles.end());
  obstacles.erase(std::unique(obstacles.begin(), obstacles.end()), obstacles.end());
  auto n = static_cast<std::size_t>(std::max(0, width * height));
  obstacle_.assign(n, 0);
  shelf_at_.assign(n, -1);
  station_at_.assign(n, -1);
  for (Cell c : obstacles) {
    if (in_bounds(c)) obstacle_[static_cast<std::size_t>(index_of(c))] = 1;
  }
  for (std::size_t i = 0; i < shelves.size(); ++i) {
    for (Cell c : footprint_cells(shelves[i].home, shelves[i].size)) {
      if (in_bounds(c)) shelf_at_[static_cast<std::size_t>(index_of(c))] = static_cast<int>(i);
    }
  }
  for (std::size_t i = 0; i < stations.size(); ++i) {
    if (in_bounds(stations[i].cell)) station_at_[static_cast<std::size_t>(index_of(stations[i].cell))] = static_cast<int>(i);
  }
}

const ShelfPod* Layout::shelf_home_at(Cell c) const {
  int i = shelf_at_[static_cast<std::size_t>(index_of(c))];
  return i < 0 ? nullptr : &shelves[static_cast<std::size_t>(i)];
}

const ShelfPod* Layout::find_shelf(ShelfId id) const {
  for (const auto& s : shelves) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const Station* Layout::find_station(StationId id) const {
  for (const auto& s : stations) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const ShelfPod& Layout::shelf(ShelfId id) const {
  if (const auto* s = find_shelf(id)) return *s;
  throw Error("unknown shelf id " + std::to_string(id.value));
}

const Station& Layout::station(StationId id) const {
  if (const auto* s = find_station(id)) return *s;
  throw Error("unknown station id " + std::to_string(id.value));
}

bool Layout::operator==(const Layout& o) const {
  return width == o.width && height == o.height && shelves == o.shelves && stations == o.stations &&
         parking == o.parking && obstacles == o.obstacles && agvs == o.agvs;
}

void validate_layout(const Layout& layout) {
  if (layout.width < 1 || layout.height < 1) invalid("width and height must be >= 1");

  // cell -> description of the static entity already occupying it
  std::unordered_map<Cell, std::string> occupied;
  auto claim = [&](Cell c, const std::string& who) {
    if (!layout.in_bounds(c)) invalid(who + " at " + cell_str(c) + " is out of bounds");
    auto [it, fresh] = occupied.emplace(c, who);
    if (!fresh) invalid(who + " overlaps " + it->second + " at cell " + cell_str(c));
  };

  std::set<int> ids;
  for (const auto& s : layout.shelves) {
    std::string who = "shelf " + std::to_string(s.id.value);
    if (!ids.insert(s.id.value).second) invalid("duplicate shelf id " + std::to_string(s.id.value));
    if (s.size != 1 && s.size != 2) invalid(who + " has size " + std::to_string(s.size) + " (must be 1 or 2)");
    for (const auto& sc : s.contents) {
      if (sc.count < 0) invalid(who + " has negative count for sku " + std::to_string(sc.sku.value));
    }
    for (Cell c : footprint_cells(s.home, s.size)) claim(c, who);
  }
  ids.clear();
  for (const auto& st : layout.stations) {
    std::string who = "station " + std::to_string(st.id.value);
    if (!ids.insert(st.id.value).second) invalid("duplicate station id " + std::to_string(st.id.value));
    if (st.service_time < 1) invalid(who + " has service_time < 1");
    claim(st.cell, who);
  }
  for (Cell c : layout.obstacles) claim(c, "obstacle");
  for (Cell c : layout.parking) {
    if (!layout.in_bounds(c)) invalid("parking cell " + cell_str(c) + " is out of bounds");
    if (auto it = occupied.find(c); it != occupied.end() && it->second == "obstacle")
      invalid("parking cell overlaps obstacle at cell " + cell_str(c));
  }

  ids.clear();
  std::unordered_map<Cell, int> agv_cells;
  for (const auto& a : layout.agvs) {
    std::string who = "agv " + std::to_string(a.spec.id.value);
    if (!ids.insert(a.spec.id.value).second) invalid("duplicate agv id " + std::to_string(a.spec.id.value));
    if (a.spec.footprint != 1 && a.spec.footprint != 2) invalid(who + " footprint must be 1 or 2");
    if (a.spec.steps_per_cell < 1) invalid(who + " steps_per_cell must be >= 1");
    if (a.spec.turn_cost < 0) invalid(who + " turn_cost must be >= 0");
    for (Cell c : footprint_cells(a.pose.anchor, a.spec.footprint)) {
      if (!layout.in_bounds(c)) invalid(who + " footprint cell " + cell_str(c) + " is out of bounds");
      if (auto it = occupied.find(c); it != occupied.end() && it->second.rfind("shelf", 0) != 0)
        invalid(who + " start overlaps " + it->second + " at cell " + cell_str(c));
      auto [it, fresh] = agv_cells.emplace(c, a.spec.id.value);
      if (!fresh) invalid(who + " start overlaps agv " + std::to_string(it->second) + " at cell " + cell_str(c));
    }
  }
}

namespace {

const std::set<std::string>& allowed_keys(std::string_view object) {
  static const std::set<std::string> top{"width", "height", "shelves", "stations", "parking", "obstacles", "agvs"};
  static const std::set<std::string> shelf{"id", "x", "y", "size", "contents"};
  static const std::set<std::string> content{"sku", "count"};
  static const std::set<std::string> station{"id", "x", "y", "service_time"};
  static const std::set<std::string> cell{"x", "y"};
  static const std::set<std::string> agv{"id", "x", "y", "heading", "footprint", "steps_per_cell", "turn_cost", "kind"};
  if (object == "top") return top;
  if (object == "shelf") return shelf;
  if (object == "content") return content;
  if (object == "station") return station;
  if (object == "agv") return agv;
  return cell;
}

void check_object(const json& j, std::string_view kind) {
  if (!j.is_object()) throw ParseError(std::string(kind) + " entry must be an object");
  const auto& keys = allowed_keys(kind);
  for (const auto& [key, _] : j.items()) {
    if (!keys.contains(key)) throw ParseError("unknown key '" + key + "' in " + std::string(kind));
  }
}

int get_int(const json& j, const char* key, std::string_view where, std::optional<int> fallback = std::nullopt) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ParseError("missing key '" + std::string(key) + "' in " + std::string(where));
  }
  if (!it->is_number_integer()) throw ParseError("key '" + std::string(key) + "' in " + std::string(where) + " must be an integer");
  return it->get<int>();
}

const json& get_array(const json& j, const char* key) {
  static const json empty = json::array();
  auto it = j.find(key);
  if (it == j.end()) return empty;
  if (!it->is_array()) throw ParseError("key '" + std::string(key) + "' must be an array");
  return *it;
}

}  // namespace

Layout load_layout(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed layout document: ") + e.what());
  }
  check_object(doc, "top");

  Layout layout;
  layout.width = get_int(doc, "width", "layout");
  layout.height = get_int(doc, "height", "layout");
  for (const auto& s : get_array(doc, "shelves")) {
    check_object(s, "shelf");
    ShelfPod pod;
    pod.id = ShelfId{get_int(s, "id", "shelf")};
    pod.home = {get_int(s, "x", "shelf"), get_int(s, "y", "shelf")};
    pod.size = get_int(s, "size", "shelf", 1);
    for (const auto& c : get_array(s, "contents")) {
      check_object(c, "content");
      pod.contents.push_back({SkuId{get_int(c, "sku", "contents")}, get_int(c, "count", "contents")});
    }
    layout.shelves.push_back(std::move(pod));
  }
  for (const auto& s : get_array(doc, "stations")) {
    check_object(s, "station");
    layout.stations.push_back({StationId{get_int(s, "id", "station")},
                               {get_int(s, "x", "station"), get_int(s, "y", "station")},
                               get_int(s, "service_time", "station", 1)});
  }
  for (const auto& c : get_array(doc, "parking")) {
    check_object(c, "cell");
    layout.parking.push_back({get_int(c, "x", "parking"), get_int(c, "y", "parking")});
  }
  for (const auto& c : get_array(doc, "obstacles")) {
    check_object(c, "cell");
    layout.obstacles.push_back({get_int(c, "x", "obstacle"), get_int(c, "y", "obstacle")});
  }
  for (const auto& a : get_array(doc, "agvs")) {
    check_object(a, "agv");
    AgvStart start;
    start.spec.id = AgvId{get_int(a, "id", "agv")};
    start.spec.footprint = get_int(a, "footprint", "agv", 1);
    start.spec.steps_per_cell = get_int(a, "steps_per_cell", "agv", 1);
    start.spec.turn_cost = get_int(a, "turn_cost", "agv", 0);
    if (auto it = a.find("kind"); it != a.end()) {
      if (!it->is_string()) throw ParseError("agv kind must be a string");
      start.spec.kind = it->get<std::string>();
    }
    start.pose.anchor = {get_int(a, "x", "agv"), get_int(a, "y", "agv")};
    if (auto it = a.find("heading"); it != a.end()) {
      if (!it->is_string()) throw ParseError("agv heading must be a string");
      start.pose.heading = heading_from_string(it->get<std::string>());
    }
    layout.agvs.push_back(std::move(start));
  }
  // Obstacle duplicates would be silently merged by build_index; reject them first.
  {
    std::set<Cell> seen;
    for (Cell c : layout.obstacles) {
      if (!seen.insert(c).second) throw ValidationError("layout validation: obstacle listed twice at cell " + cell_str(c));
    }
  }
  validate_layout(layout);
  layout.build_index();
  return layout;
}

Layout load_layout_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open layout file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_layout(buf.str());
}

std::string serialize_layout(const Layout& layout) {
  json doc;
  doc["width"] = layout.width;
  doc["height"] = layout.height;
  doc["shelves"] = json::array();
  for (const auto& s : layout.shelves) {
    json contents = json::array();
    for (const auto& c : s.contents) contents.push_back({{"sku", c.sku.value}, {"count", c.count}});
    doc["shelves"].push_back({{"id", s.id.value}, {"x", s.home.x}, {"y", s.home.y}, {"size", s.size}, {"contents", contents}});
  }
  doc["stations"] = json::array();
  for (const auto& s : layout.stations)
    doc["stations"].push_back({{"id", s.id.value}, {"x", s.cell.x}, {"y", s.cell.y}, {"service_time", s.service_time}});
  doc["parking"] = json::array();
  for (Cell c : layout.parking) doc["parking"].push_back({{"x", c.x}, {"y", c.y}});
  doc["obstacles"] = json::array();
  for (Cell c : layout.obstacles) doc["obstacles"].push_back({{"x", c.x}, {"y", c.y}});
  doc["agvs"] = json::array();
  for (const auto& a : layout.agvs) {
    doc["agvs"].push_back({{"id", a.spec.id.value},
                           {"x", a.pose.anchor.x},
                           {"y", a.pose.anchor.y},
                           {"heading", std::string(to_string(a.pose.heading))},
                           {"footprint", a.spec.footprint},
                           {"steps_per_cell", a.spec.steps_per_cell},
                           {"turn_cost", a.spec.turn_cost},
                           {"kind", a.spec.kind}});
  }
  return doc.dump(2);
}

Layout generate_layout(int width, int height, int shelf_count, int station_count,
                       const std::vector<AgvSpec>& agv_specs, std::uint64_t seed) {
  if (width < 1 || height < 1) throw InfeasibleDensityError("layout dimensions must be positive");
  if (shelf_count < 0 || station_count < 0) throw InfeasibleDensityError("entity counts must be non-negative");

  // Shelf slots: rows 2..height-3 in 2-row bands separated by 1-row aisles;
  // columns 1..width-2 in 4-wide runs separated by 1-column aisles.
  std::vector<Cell> slots;
  for (int band = 2; band + 1 <= height - 3; band += 3) {
    for (int y = band; y <= band + 1; ++y) {
      for (int x = 1; x <= width - 2; ++x) {
        if (x % 5 != 0) slots.push_back({x, y});
      }
    }
  }
  if (shelf_count > static_cast<int>(slots.size()))
    throw InfeasibleDensityError("cannot place " + std::to_string(shelf_count) + " shelves with aisles on a " +
                                 std::to_string(width) + "x" + std::to_string(height) + " grid (capacity " +
                                 std::to_string(slots.size()) + ")");
  if (station_count > width) throw InfeasibleDensityError("more stations than south-boundary cells");

  int footprint_sum = 0;
  for (const auto& s : agv_specs) {
    if (s.footprint != 1 && s.footprint != 2) throw InfeasibleDensityError("agv footprint must be 1 or 2");
    if (s.footprint > height) throw InfeasibleDensityError("agv footprint exceeds map height");
    footprint_sum += s.footprint;
  }
  if (footprint_sum > width) throw InfeasibleDensityError("parking row cannot hold every agv");

  std::mt19937_64 rng(seed);
  std::shuffle(slots.begin(), slots.end(), rng);
  slots.resize(static_cast<std::size_t>(shelf_count));
  std::sort(slots.begin(), slots.end(), [](Cell a, Cell b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });

  Layout layout;
  layout.width = width;
  layout.height = height;

  int sku_types = std::max(1, shelf_count / 2);
  int per_shelf = std::min(3, sku_types);
  for (int i = 0; i < shelf_count; ++i) {
    ShelfPod pod;
    pod.id = ShelfId{i};
    pod.home = slots[static_cast<std::size_t>(i)];
    std::set<int> skus{i % sku_types};
    std::uniform_int_distribution<int> pick(0, sku_types - 1);
    while (static_cast<int>(skus.size()) < per_shelf) skus.insert(pick(rng));
    for (int sku : skus) pod.contents.push_back({SkuId{sku}, 20});
    layout.shelves.push_back(std::move(pod));
  }

  for (int i = 0; i < station_count; ++i) {
    int x = static_cast<int>((i + 0.5) * width / station_count);
    layout.stations.push_back({StationId{i}, {x, 0}, 2});
  }

  int n = static_cast<int>(agv_specs.size());
  int extra = width - footprint_sum;
  int cursor = 0;
  for (int i = 0; i < n; ++i) {
    const auto& spec = agv_specs[static_cast<std::size_t>(i)];
    int x = cursor + extra * (i + 1) / (n + 1);
    cursor += spec.footprint;
    Cell anchor{x, height - spec.footprint};
    layout.parking.push_back(anchor);
    layout.agvs.push_back({spec, {anchor, Heading::S}});
  }

  try {
    validate_layout(layout);
  } catch (const ValidationError& e) {
    throw InfeasibleDensityError(std::string("generated entities collide: ") + e.what());
  }
  layout.build_index();
  return layout;
}

bool is_traversable(const Layout& layout, Cell anchor, int footprint, bool carrying, const CellSet& dynamic_blocks,
                    ShelfId carried) {
  if (!layout.block_in_bounds(anchor, footprint)) return false;
  for (int dy = 0; dy < footprint; ++dy) {
    for (int dx = 0; dx < footprint; ++dx) {
      Cell c{anchor.x + dx, anchor.y + dy};
      if (layout.is_obstacle(c)) return false;
      if (!dynamic_blocks.empty() && dynamic_blocks.contains(c)) return false;
      if (carrying) {
        const ShelfPod* s = layout.shelf_home_at(c);
        if (s != nullptr && s->id != carried) return false;
      }
    }
  }
  return true;
}

std::vector<std::uint8_t> static_reachability(const Layout& layout, Cell from, int footprint, bool carrying,
                                              ShelfId carried) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(layout.cell_count()), 0);
  static const CellSet none;
  if (!is_traversable(layout, from, footprint, carrying, none, carried)) return seen;
  std::deque<Cell> queue{from};
  seen[static_cast<std::size_t>(layout.index_of(from))] = 1;
  while (!queue.empty()) {
    Cell c = queue.front();
    queue.pop_front();
    for (Heading h : {Heading::N, Heading::E, Heading::S, Heading::W}) {
      Cell n = step_toward(c, h);
      if (!layout.block_in_bounds(n, footprint)) continue;
      auto idx = static_cast<std::size_t>(layout.index_of(n));
      if (seen[idx] || !is_traversable(layout, n, footprint, carrying, none, carried)) continue;
      seen[idx] = 1;
      queue.push_back(n);
    }
  }
  return seen;
}

bool can_serve(const Layout& layout, const AgvSpec& spec, const ShelfPod& shelf, const Station& station) {
  static const CellSet none;
  if (shelf.size > spec.footprint) return false;
  if (!is_traversable(layout, shelf.home, spec.footprint, true, none, shelf.id)) return false;
  if (!is_traversable(layout, station.cell, spec.footprint, true, none, shelf.id)) return false;
  auto reach = static_reachability(layout, shelf.home, spec.footprint, true, shelf.id);
  return reach[static_cast<std::size_t>(layout.index_of(station.cell))] != 0;
}

}  // namespace warerover
