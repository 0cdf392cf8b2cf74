#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "warerover/geometry.hpp"
#include "warerover/stage.hpp"
#include "warerover/world.hpp"

namespace warerover {

struct Sku {
  SkuId id;
  int size_class = 1;

  bool operator==(const Sku&) const = default;
};

enum class OrderStatus : std::uint8_t { Pending, Assigned, Completed, Expired };
std::string_view to_string(OrderStatus s);

struct Order {
  OrderId id;
  SkuId sku;
  int quantity = 1;
  StationId station;
  int release_step = 0;
  OrderStatus status = OrderStatus::Pending;
  std::optional<int> completed_step;

  bool operator==(const Order&) const = default;
};

struct Task {
  TaskId id;
  OrderId order;
  ShelfId shelf;
  StationId station;
  TaskStage stage = TaskStage::GoToShelf;
  std::optional<AgvId> assigned_agv;
  int stage_entered = 0;
  int quantity = 1;
  SkuId sku;

  bool operator==(const Task&) const = default;
};

namespace pattern {
struct OneShot {
  int n = 0;
};
struct Wave {
  int waves = 0;
  int per_wave = 0;
  int interval = 1;
};
// SKU popularity follows Zipf(zipf_s) over the catalog order; all orders are
// released at step 0 like OneShot.
struct Hotspot {
  int n = 0;
  double zipf_s = 1.0;
};
struct Burst {
  double base_rate = 0.0;
  double burst_rate = 0.0;
  int burst_start = 0;
  int burst_len = 0;
  int horizon = 0;
};
struct Steady {
  double rate = 0.0;
  int horizon = 0;
};
}  // namespace pattern

using OrderPattern = std::variant<pattern::OneShot, pattern::Wave, pattern::Hotspot, pattern::Burst, pattern::Steady>;

std::string pattern_name(const OrderPattern& p);

// Sorted by release step, ids assigned 0..n-1 in that order.
std::vector<Order> generate_orders(const OrderPattern& pattern, const std::vector<Sku>& skus,
                                   const std::vector<StationId>& stations, std::uint64_t seed);

// Distinct SKUs stocked in the layout, size class taken from the holding shelf.
std::vector<Sku> sku_catalog(const Layout& layout);

// Live shelf contents plus the quantities already promised to open tasks.
class Inventory {
 public:
  Inventory() = default;
  explicit Inventory(const Layout& layout);

  int count(ShelfId shelf, SkuId sku) const;
  int available(ShelfId shelf, SkuId sku) const { return count(shelf, sku) - reserved(shelf, sku); }
  int reserved(ShelfId shelf, SkuId sku) const;
  long total() const;

  void reserve(ShelfId shelf, SkuId sku, int qty);
  // Removes picked items and releases the matching reservation.
  void pick(ShelfId shelf, SkuId sku, int qty);

  std::vector<ShelfId> shelves() const;

 private:
  std::map<ShelfId, std::map<SkuId, int>> counts_;
  std::map<ShelfId, std::map<SkuId, int>> reserved_;
};

// Picks the shelf with enough unreserved stock nearest (Manhattan) to the
// order's station and reserves the quantity. Throws OutOfStockError.
Task decompose_order(const Order& order, const Layout& layout, Inventory& inventory, TaskId task_id);

// Whether the current stage's completion condition holds.
bool stage_complete(const Task& task, const AgvState& agv, int clock, const Layout& layout);

// Moves the task to its successor stage and applies the stage's side effects.
// Calling it before stage_complete() holds is a contract violation.
void advance_stage(Task& task, AgvState& agv, int clock, const Layout& layout, Inventory& inventory, Order& order);

void write_order_trace(std::ostream& out, const std::vector<Order>& orders);

}  // namespace warerover
