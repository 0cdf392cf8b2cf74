#include "warerover/orders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include "warerover/errors.hpp"

namespace warerover {

std::string_view to_string(OrderStatus s) {
  switch (s) {
    case OrderStatus::Pending: return "Pending";
    case OrderStatus::Assigned: return "Assigned";
    case OrderStatus::Completed: return "Completed";
    case OrderStatus::Expired: return "Expired";
  }
  return "?";
}

std::string pattern_name(const OrderPattern& p) {
  struct {
    std::string operator()(const pattern::OneShot&) const { return "os"; }
    std::string operator()(const pattern::Wave&) const { return "wave"; }
    std::string operator()(const pattern::Hotspot&) const { return "hotspot"; }
    std::string operator()(const pattern::Burst&) const { return "burst"; }
    std::string operator()(const pattern::Steady&) const { return "steady"; }
  } visitor;
  return std::visit(visitor, p);
}

namespace {

struct Emitter {
  const std::vector<Sku>& skus;
  const std::vector<StationId>& stations;
  std::mt19937_64& rng;
  std::vector<Order>& out;

  void require_catalog() const {
    if (skus.empty() || stations.empty())
      throw EmptyCatalogError("order pattern emits orders but the SKU catalog or station list is empty");
  }

  StationId pick_station() {
    std::uniform_int_distribution<std::size_t> d(0, stations.size() - 1);
    return stations[d(rng)];
  }

  SkuId pick_uniform_sku() {
    std::uniform_int_distribution<std::size_t> d(0, skus.size() - 1);
    return skus[d(rng)].id;
  }

  void emit(int step, SkuId sku) {
    Order o;
    o.id = OrderId{static_cast<int>(out.size())};
    o.sku = sku;
    o.station = pick_station();
    o.release_step = step;
    out.push_back(o);
  }

  void emit_uniform(int step, int count) {
    if (count > 0) require_catalog();
    for (int i = 0; i < count; ++i) emit(step, pick_uniform_sku());
  }

  void poisson_stream(int from, int to, double rate) {
    if (rate <= 0.0) return;
    std::poisson_distribution<int> d(rate);
    for (int t = from; t < to; ++t) emit_uniform(t, d(rng));
  }
};

void check_non_negative(double v, const char* what) {
  if (v < 0.0 || std::isnan(v)) throw ConfigError(std::string("order pattern: ") + what + " must be >= 0");
}

}  // namespace

std::vector<Order> generate_orders(const OrderPattern& pattern, const std::vector<Sku>& skus,
                                   const std::vector<StationId>& stations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Order> orders;
  Emitter e{skus, stations, rng, orders};

  if (const auto* p = std::get_if<pattern::OneShot>(&pattern)) {
    check_non_negative(p->n, "n");
    e.emit_uniform(0, p->n);
  } else if (const auto* p = std::get_if<pattern::Wave>(&pattern)) {
    check_non_negative(p->waves, "waves");
    check_non_negative(p->per_wave, "per_wave");
    check_non_negative(p->interval, "interval");
    for (int w = 0; w < p->waves; ++w) e.emit_uniform(w * p->interval, p->per_wave);
  } else if (const auto* p = std::get_if<pattern::Hotspot>(&pattern)) {
    check_non_negative(p->n, "n");
    if (!(p->zipf_s > 0.0)) throw ConfigError("order pattern: zipf_s must be > 0");
    if (p->n > 0) {
      e.require_catalog();
      std::vector<double> weights;
      weights.reserve(skus.size());
      for (std::size_t k = 1; k <= skus.size(); ++k) weights.push_back(std::pow(static_cast<double>(k), -p->zipf_s));
      std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());
      for (int i = 0; i < p->n; ++i) e.emit(0, skus[zipf(rng)].id);
    }
  } else if (const auto* p = std::get_if<pattern::Burst>(&pattern)) {
    check_non_negative(p->base_rate, "base_rate");
    check_non_negative(p->burst_rate, "burst_rate");
    check_non_negative(p->burst_start, "burst_start");
    check_non_negative(p->burst_len, "burst_len");
    std::poisson_distribution<int> base(std::max(p->base_rate, 1e-300));
    std::poisson_distribution<int> burst(std::max(p->burst_rate, 1e-300));
    for (int t = 0; t < p->horizon; ++t) {
      bool in_burst = t >= p->burst_start && t < p->burst_start + p->burst_len;
      double rate = in_burst ? p->burst_rate : p->base_rate;
      if (rate <= 0.0) continue;
      e.emit_uniform(t, in_burst ? burst(rng) : base(rng));
    }
  } else if (const auto* p = std::get_if<pattern::Steady>(&pattern)) {
    check_non_negative(p->rate, "rate");
    e.poisson_stream(0, p->horizon, p->rate);
  }
  return orders;
}

std::vector<Sku> sku_catalog(const Layout& layout) {
  std::map<SkuId, int> sizes;
  for (const auto& s : layout.shelves) {
    for (const auto& c : s.contents) {
      auto [it, fresh] = sizes.emplace(c.sku, s.size);
      if (!fresh) it->second = std::max(it->second, s.size);
    }
  }
  std::vector<Sku> out;
  for (auto [id, size] : sizes) out.push_back({id, size});
  return out;
}

Inventory::Inventory(const Layout& layout) {
  for (const auto& s : layout.shelves) {
    auto& m = counts_[s.id];
    for (const auto& c : s.contents) m[c.sku] += c.count;
  }
}

int Inventory::count(ShelfId shelf, SkuId sku) const {
  auto it = counts_.find(shelf);
  if (it == counts_.end()) return 0;
  auto jt = it->second.find(sku);
  return jt == it->second.end() ? 0 : jt->second;
}

int Inventory::reserved(ShelfId shelf, SkuId sku) const {
  auto it = reserved_.find(shelf);
  if (it == reserved_.end()) return 0;
  auto jt = it->second.find(sku);
  return jt == it->second.end() ? 0 : jt->second;
}

long Inventory::total() const {
  long sum = 0;
  for (const auto& [_, m] : counts_) {
    for (const auto& [__, n] : m) sum += n;
  }
  return sum;
}

void Inventory::reserve(ShelfId shelf, SkuId sku, int qty) {
  if (available(shelf, sku) < qty) throw OutOfStockError("reservation exceeds available stock");
  reserved_[shelf][sku] += qty;
}

void Inventory::pick(ShelfId shelf, SkuId sku, int qty) {
  int& have = counts_[shelf][sku];
  if (have < qty) throw std::logic_error("inventory pick exceeds stock");
  have -= qty;
  int& res = reserved_[shelf][sku];
  res = std::max(0, res - qty);
}

std::vector<ShelfId> Inventory::shelves() const {
  std::vector<ShelfId> out;
  for (const auto& [id, _] : counts_) out.push_back(id);
  return out;
}

Task decompose_order(const Order& order, const Layout& layout, Inventory& inventory, TaskId task_id) {
  const Station& station = layout.station(order.station);
  const ShelfPod* best = nullptr;
  int best_distance = std::numeric_limits<int>::max();
  for (const auto& shelf : layout.shelves) {
    if (inventory.available(shelf.id, order.sku) < order.quantity) continue;
    int d = manhattan(shelf.home, station.cell);
    if (d < best_distance || (d == best_distance && shelf.id < best->id)) {
      best = &shelf;
      best_distance = d;
    }
  }
  if (best == nullptr)
    throw OutOfStockError("no shelf holds " + std::to_string(order.quantity) + " of sku " +
                          std::to_string(order.sku.value) + " for order " + std::to_string(order.id.value));
  inventory.reserve(best->id, order.sku, order.quantity);
  Task t;
  t.id = task_id;
  t.order = order.id;
  t.shelf = best->id;
  t.station = order.station;
  t.stage = TaskStage::GoToShelf;
  t.quantity = order.quantity;
  t.sku = order.sku;
  return t;
}

bool stage_complete(const Task& task, const AgvState& agv, int clock, const Layout& layout) {
  switch (task.stage) {
    case TaskStage::GoToShelf:
    case TaskStage::ReturnShelf: return agv.pose.anchor == layout.shelf(task.shelf).home;
    case TaskStage::LiftShelf:
    case TaskStage::DropShelf: return clock - task.stage_entered >= 1;
    case TaskStage::CarryToStation: return agv.pose.anchor == layout.station(task.station).cell;
    case TaskStage::WaitService: return clock - task.stage_entered >= layout.station(task.station).service_time;
    case TaskStage::Done: return false;
  }
  return false;
}

void advance_stage(Task& task, AgvState& agv, int clock, const Layout& layout, Inventory& inventory, Order& order) {
  if (!stage_complete(task, agv, clock, layout))
    throw std::logic_error("advance_stage called before stage " + std::string(to_string(task.stage)) + " completed");
  switch (task.stage) {
    case TaskStage::LiftShelf: agv.carrying = task.shelf; break;
    case TaskStage::WaitService:
      inventory.pick(task.shelf, task.sku, task.quantity);
      order.status = OrderStatus::Completed;
      order.completed_step = clock;
      break;
    case TaskStage::DropShelf: agv.carrying.reset(); break;
    default: break;
  }
  task.stage = next_stage(task.stage);
  task.stage_entered = clock;
  agv.stage = task.stage;
}

void write_order_trace(std::ostream& out, const std::vector<Order>& orders) {
  out << "order_id,sku,station,release_step,completed_step,status\n";
  for (const auto& o : orders) {
    out << o.id.value << ',' << o.sku.value << ',' << o.station.value << ',' << o.release_step << ',';
    if (o.completed_step) out << *o.completed_step;
    out << ',' << to_string(o.status) << '\n';
  }
}

}  // namespace warerover
