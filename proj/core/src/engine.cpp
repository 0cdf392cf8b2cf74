#include "warerover/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <thread>

#include "warerover/errors.hpp"

namespace warerover {

using nlohmann::json;

namespace {

json cell_json(Cell c) { return json::array({c.x, c.y}); }

bool is_dwell_stage(TaskStage s) {
  return s == TaskStage::LiftShelf || s == TaskStage::WaitService || s == TaskStage::DropShelf;
}

Occupancy occupancy_now(const AgvState& agv, int step) {
  if (agv.plan && agv.health.active()) return occupancy_blocks_at(*agv.plan, step);
  return {agv.pose.anchor, {}, false};
}

bool touches(const Occupancy& occ, int footprint, const CellSet& cells) {
  for (Cell c : cells) {
    if (occ.contains(c, footprint)) return true;
  }
  return false;
}

json metrics_json(const Metrics& m) {
  return {{"sr", m.sr},       {"ct", m.ct},
          {"tp", m.tp},       {"makespan", m.makespan},
          {"generated", m.generated}, {"completed", m.completed},
          {"planner_calls", m.planner_calls}};
}

}  // namespace

Metrics compute_metrics(int generated, int completed, int last_completion, bool all_done, int horizon,
                        double total_cost, long calls) {
  Metrics m;
  m.generated = generated;
  m.completed = completed;
  m.planner_calls = calls;
  m.sr = generated == 0 ? 100.0 : 100.0 * completed / generated;
  m.makespan = generated == 0 ? 0 : (all_done ? last_completion : horizon);
  m.tp = m.makespan > 0 ? static_cast<double>(completed) / m.makespan : 0.0;
  m.ct = calls > 0 ? total_cost / static_cast<double>(calls) : 0.0;
  return m;
}

void validate(const ExperimentConfig& config) {
  if (!config.layout) throw ConfigError("experiment needs a layout");
  if (config.horizon < 1) throw ConfigError("horizon must be at least 1");
  if (config.repeats < 1) throw ConfigError("repeats must be at least 1");
  if (config.node_budget < 1) throw ConfigError("node budget must be at least 1");
  if (config.planning_horizon < 1) throw ConfigError("planning horizon must be at least 1");
  validate(config.failures);
}

Simulation::Simulation(ExperimentConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed), compatibility_((validate(config_), *config_.layout)) {
  const Layout& layout = *config_.layout;
  state_.layout = config_.layout;
  std::vector<AgvStart> starts = layout.agvs;
  std::sort(starts.begin(), starts.end(), [](const AgvStart& a, const AgvStart& b) { return a.spec.id < b.spec.id; });
  for (const auto& s : starts) {
    AgvState agv;
    agv.spec = s.spec;
    agv.pose = s.pose;
    state_.agvs.push_back(agv);
    AgentRuntime rt;
    rt.parking = s.pose;
    state_.runtime.push_back(rt);
  }
  state_.inventory = Inventory(layout);
  state_.initial_stock = state_.inventory.total();
  state_.scheduler_rng = make_stream(seed, StreamPurpose::Scheduler);
  state_.failure_rng = make_stream(seed, StreamPurpose::Failures);

  std::vector<StationId> stations;
  for (const auto& st : layout.stations) stations.push_back(st.id);
  std::sort(stations.begin(), stations.end());
  state_.orders = generate_orders(config_.pattern, sku_catalog(layout), stations, derive_seed(seed, StreamPurpose::Orders));

  planner_ = make_planner(config_.planner);
  if (config_.scheduler.starts_with("external:"))
    external_scheduler_ = make_external_scheduler(config_.scheduler.substr(9));
  else
    scheduler_kind_ = scheduler_from_string(config_.scheduler);

  log("run_start", json{{"env", config_.env},
                        {"scheduler", config_.scheduler},
                        {"planner", config_.planner},
                        {"pattern", pattern_name(config_.pattern)},
                        {"seed", seed},
                        {"horizon", config_.horizon},
                        {"deterministic_ct", config_.deterministic_ct},
                        {"orders", state_.orders.size()},
                        {"agvs", state_.agvs.size()},
                        {"failures", {{"enabled", config_.failures.enabled},
                                      {"probability", config_.failures.per_step_probability},
                                      {"down_steps", config_.failures.down_steps}}}}
                       .dump());
}

void Simulation::log(std::string kind, std::string payload) {
  state_.events.push_back({state_.clock, std::move(kind), std::move(payload)});
}

std::size_t Simulation::index_of(AgvId id) const {
  for (std::size_t i = 0; i < state_.agvs.size(); ++i) {
    if (state_.agvs[i].spec.id == id) return i;
  }
  return state_.agvs.size();
}

void Simulation::queue_injection(AgvId agv, std::uint64_t token) { injections_.emplace_back(agv, token); }

bool Simulation::finished() const { return done_; }

void Simulation::step() {
  if (done_) return;
  applied_.clear();
  release_orders();
  handle_failures();
  schedule();
  plan();
  execute();
  advance_stages();
  finish_step();
}

// Phase 1: release due orders and decompose them into tasks.
void Simulation::release_orders() {
  const Layout& layout = *state_.layout;
  while (next_release_ < state_.orders.size() && state_.orders[next_release_].release_step <= state_.clock) {
    Order& order = state_.orders[next_release_++];
    log("release", json{{"order", order.id.value}, {"sku", order.sku.value}, {"station", order.station.value}}.dump());
    try {
      Task task = decompose_order(order, layout, state_.inventory, TaskId{static_cast<int>(state_.tasks.size())});
      task.stage_entered = state_.clock;
      log("task", json{{"task", task.id.value}, {"order", order.id.value}, {"shelf", task.shelf.value}}.dump());
      state_.tasks.push_back(task);
    } catch (const OutOfStockError&) {
      order.status = OrderStatus::Expired;
      log("expired", json{{"order", order.id.value}, {"reason", "out_of_stock"}}.dump());
    }
  }
}

// Phase 2: recoveries, then on-demand, scripted and random failures.
void Simulation::handle_failures() {
  const int now = state_.clock;
  auto rec = apply_recovery(state_.failures, state_.corridors, state_.agvs, now);
  for (AgvId id : rec.recovered) {
    std::size_t i = index_of(id);
    AgvState& agv = state_.agvs[i];
    AgentRuntime& rt = state_.runtime[i];
    rt.needs_plan = true;
    rt.involuntary_dwell = 0;
    if (agv.task) {
      Task& task = state_.tasks[static_cast<std::size_t>(agv.task->value)];
      if (is_dwell_stage(task.stage)) task.stage_entered = now;  // the interrupted dwell restarts
      rt.trigger = ReplanReason::IdleWithTask;
    }
    log("recovery", json{{"agv", id.value}, {"x", agv.pose.anchor.x}, {"y", agv.pose.anchor.y}}.dump());
  }
  for (CorridorId id : rec.expired) {
    std::erase_if(state_.corridors, [&](const SafetyCorridor& c) { return c.id == id; });
    for (auto& rt : state_.runtime) rt.exempt.erase(id);
    log("corridor_expired", json{{"corridor", id.value}}.dump());
  }

  for (auto [agv_id, token] : injections_) {
    AppliedCommand applied{token, now, std::nullopt};
    std::size_t i = index_of(agv_id);
    try {
      if (i == state_.agvs.size()) throw NotActiveError("unknown agv " + std::to_string(agv_id.value));
      fail_agent(inject_failure(state_.agvs[i], now, config_.failures));
    } catch (const NotActiveError& e) {
      applied.error = e.what();
      log("command_rejected", json{{"agv", agv_id.value}, {"error", e.what()}}.dump());
    }
    applied_.push_back(applied);
  }
  injections_.clear();

  while (next_script_ < config_.scripted_failures.size() && config_.scripted_failures[next_script_].step <= now) {
    const auto& sf = config_.scripted_failures[next_script_++];
    std::size_t i = index_of(sf.agv);
    if (sf.step == now && i < state_.agvs.size() && state_.agvs[i].health.active())
      fail_agent(inject_failure(state_.agvs[i], now, config_.failures));
    else
      log("script_skipped", json{{"agv", sf.agv.value}, {"step", sf.step}}.dump());
  }

  for (auto& event : sample_failures(config_.failures, state_.agvs, state_.failure_rng, now)) fail_agent(event);
}

void Simulation::fail_agent(FailureEvent event) {
  const Layout& layout = *state_.layout;
  const int now = state_.clock;
  event.id = FailureId{next_failure_id_++};
  std::size_t i = index_of(event.agv);
  AgvState& agv = state_.agvs[i];
  AgentRuntime& rt = state_.runtime[i];
  // A failure part-way through an action holds the AGV at that action's end
  // pose, whose cells it already occupies.
  if (agv.plan) {
    if (auto k = agv.plan->action_index_at(now); k && agv.plan->states[*k].step != now)
      agv.pose = agv.plan->states[*k + 1].pose;
  }
  agv.health = Health::failed(event.recovery_at - event.at);
  agv.plan.reset();
  rt.trigger.reset();
  rt.needs_plan = false;
  rt.involuntary_dwell = 0;
  state_.failures.push_back(event);
  log("failure", json{{"failure", event.id.value},
                      {"agv", event.agv.value},
                      {"at", event.at},
                      {"recovery_at", event.recovery_at},
                      {"source", to_string(event.source)},
                      {"x", agv.pose.anchor.x},
                      {"y", agv.pose.anchor.y}}
                     .dump());

  SafetyCorridor corridor =
      build_corridor(event, agv.pose, agv.spec.footprint, layout, CorridorId{next_corridor_id_++});
  std::vector<Cell> cells(corridor.cells.begin(), corridor.cells.end());
  std::sort(cells.begin(), cells.end());
  json jcells = json::array();
  for (Cell c : cells) jcells.push_back(cell_json(c));
  log("corridor", json{{"corridor", corridor.id.value},
                       {"cause", event.agv.value},
                       {"from", corridor.active_from},
                       {"until", corridor.active_until},
                       {"cells", jcells},
                       {"degenerate", corridor.degenerate}}
                      .dump());

  const CorridorSpan span = corridor.span();
  for (std::size_t j = 0; j < state_.agvs.size(); ++j) {
    AgvState& other = state_.agvs[j];
    if (j == i) continue;
    AgentRuntime& ort = state_.runtime[j];
    const int fp = other.spec.footprint;
    bool down = !other.health.active();
    bool dwelling = other.task && is_dwell_stage(state_.tasks[static_cast<std::size_t>(other.task->value)].stage);
    if (touches(occupancy_now(other, now), fp, corridor.cells)) {
      // Caught inside: allowed to stay or leave, never to go deeper after leaving.
      ort.exempt.insert(corridor.id);
      if (dwelling && !down) continue;
      for (Cell c : corridor.cells) ort.grace.insert(c);
      ort.grace_until = std::max(ort.grace_until, corridor.active_until);
      if (!down) ort.trigger = ReplanReason::CorridorIntersect;
      continue;
    }
    if (down) continue;
    if (!dwelling && corridor_intersects(other.plan ? &*other.plan : nullptr, other.pose, fp, span, now))
      ort.trigger = ReplanReason::CorridorIntersect;
  }
  state_.corridors.push_back(std::move(corridor));
}

// Phase 3: assign pending tasks to idle AGVs.
void Simulation::schedule() {
  std::vector<AgvState> idle;
  for (const auto& agv : state_.agvs) {
    if (agv.health.active() && !agv.task) idle.push_back(agv);
  }
  if (idle.empty()) return;
  std::set<ShelfId> claimed;
  for (const auto& t : state_.tasks) {
    if (t.assigned_agv && t.stage != TaskStage::Done) claimed.insert(t.shelf);
  }
  std::vector<Task> pending;
  for (const auto& t : state_.tasks) {
    if (t.assigned_agv || t.stage != TaskStage::GoToShelf) continue;
    if (!claimed.insert(t.shelf).second) continue;  // one open task per shelf at a time
    pending.push_back(t);
  }
  if (pending.empty()) return;

  std::vector<Assignment> assignments;
  if (scheduler_kind_) {
    assignments = schedule_step(*scheduler_kind_, pending, idle, *state_.layout, state_.scheduler_rng, state_.clock,
                                &compatibility_);
  } else {
    ScheduleInput input{pending, idle, *state_.layout, state_.clock, state_.agvs};
    assignments = external_scheduler_->schedule(input, state_.scheduler_rng, compatibility_);
  }
  for (const auto& a : assignments) {
    if (a.task.value < 0 || a.task.value >= static_cast<int>(state_.tasks.size()))
      throw Error("scheduler assigned unknown task " + std::to_string(a.task.value));
    Task& task = state_.tasks[static_cast<std::size_t>(a.task.value)];
    std::size_t i = index_of(a.agv);
    if (i == state_.agvs.size() || task.assigned_agv || state_.agvs[i].task || !state_.agvs[i].health.active())
      throw Error("scheduler produced an invalid assignment");
    AgvState& agv = state_.agvs[i];
    task.assigned_agv = a.agv;
    task.stage_entered = state_.clock;
    state_.orders[static_cast<std::size_t>(task.order.value)].status = OrderStatus::Assigned;
    agv.task = task.id;
    agv.stage = TaskStage::GoToShelf;
    state_.runtime[i].needs_plan = true;
    log("assignment", json{{"task", task.id.value},
                           {"order", task.order.value},
                           {"agv", a.agv.value},
                           {"shelf", task.shelf.value},
                           {"station", task.station.value}}
                          .dump());
  }
}

std::optional<Cell> Simulation::movement_goal(std::size_t i) const {
  const AgvState& agv = state_.agvs[i];
  if (!agv.task) return state_.runtime[i].parking.anchor;
  const Task& task = state_.tasks[static_cast<std::size_t>(agv.task->value)];
  switch (task.stage) {
    case TaskStage::GoToShelf:
    case TaskStage::ReturnShelf: return state_.layout->shelf(task.shelf).home;
    case TaskStage::CarryToStation: return state_.layout->station(task.station).cell;
    default: return std::nullopt;
  }
}

TimedPath Simulation::dwell_plan(std::size_t i) const {
  const AgvState& agv = state_.agvs[i];
  const Task& task = state_.tasks[static_cast<std::size_t>(agv.task->value)];
  TimedPath p = TimedPath::stationary(agv.spec.id, agv.pose, state_.clock);
  switch (task.stage) {
    case TaskStage::LiftShelf: p.append(Action::lift(), agv.pose, 1); break;
    case TaskStage::DropShelf: p.append(Action::drop(), agv.pose, 1); break;
    case TaskStage::WaitService:
      for (int k = 0; k < state_.layout->station(task.station).service_time; ++k) p.append(Action::wait(), agv.pose, 1);
      break;
    default: break;
  }
  return p;
}

BlockSet Simulation::corridor_blocks() const {
  BlockSet blocked;
  for (const auto& c : state_.corridors) {
    for (Cell cell : c.cells) blocked.add(cell, c.active_from, c.active_until);
  }
  return blocked;
}

// Phase 4: plan newly assigned agents and every agent with a pending trigger.
void Simulation::plan() {
  const int now = state_.clock;
  const std::size_t n = state_.agvs.size();
  std::vector<bool> needs(n, false);
  std::vector<bool> moving(n, false);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    AgvState& agv = state_.agvs[i];
    AgentRuntime& rt = state_.runtime[i];
    if (!agv.health.active()) continue;
    auto goal = movement_goal(i);
    if (!goal) {
      if (rt.needs_plan) {
        agv.plan = dwell_plan(i);
        rt.needs_plan = false;
        log("dwell", json{{"agv", agv.spec.id.value}, {"until", agv.plan->end_step()}}.dump());
      }
      rt.trigger.reset();
      continue;
    }
    bool at_rest = !agv.plan || agv.plan->end_step() <= now;
    if (at_rest && agv.pose.anchor != *goal && !rt.trigger && agv.task) rt.trigger = ReplanReason::IdleWithTask;
    needs[i] = rt.needs_plan || rt.trigger.has_value() || (at_rest && agv.pose.anchor != *goal);
    moving[i] = !at_rest;
    any = any || needs[i];
  }
  if (!any) return;

  std::vector<bool> in_batch = needs;
  if (planner_->replans_jointly()) {
    for (std::size_t i = 0; i < n; ++i) in_batch[i] = in_batch[i] || moving[i];
  }

  const Layout& layout = *state_.layout;
  BlockSet blocked = corridor_blocks();
  std::vector<PlanRequest> requests;
  PlanningContext ctx{layout, blocked, now, {}, config_.planning_horizon, config_.node_budget, 5};
  json batch = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const AgvState& agv = state_.agvs[i];
    if (!in_batch[i]) {
      if (agv.plan && agv.health.active())
        ctx.fixed.emplace_back(*agv.plan, agv.spec.footprint);
      else
        ctx.fixed.emplace_back(TimedPath::stationary(agv.spec.id, agv.pose, now), agv.spec.footprint);
      continue;
    }
    const AgentRuntime& rt = state_.runtime[i];
    PlanRequest r;
    r.spec = agv.spec;
    r.start = agv.pose;
    r.start_step = now;
    r.goal = *movement_goal(i);
    r.carrying = agv.carrying.has_value();
    r.carried = agv.carrying.value_or(ShelfId{});
    r.grace = rt.grace;
    r.grace_until = rt.grace_until;
    if (agv.plan) {
      // Motion already under way is committed to the end of its action.
      if (auto k = agv.plan->action_index_at(now); k && agv.plan->states[*k].step < now) {
        TimedPath prefix;
        prefix.agv = agv.spec.id;
        prefix.states = {agv.plan->states[*k], agv.plan->states[*k + 1]};
        prefix.actions = {agv.plan->actions[*k]};
        r.start = prefix.final_pose();
        r.start_step = prefix.end_step();
        r.prefix = std::move(prefix);
      }
    }
    std::string reason = rt.trigger ? std::string(to_string(*rt.trigger)) : (needs[i] ? "goal" : "joint");
    batch.push_back({{"agv", agv.spec.id.value}, {"reason", reason}, {"goal", cell_json(r.goal)}});
    requests.push_back(std::move(r));
  }

  auto t0 = std::chrono::steady_clock::now();
  PlanResult result = planner_->plan(requests, ctx);
  auto t1 = std::chrono::steady_clock::now();
  double cost = config_.deterministic_ct ? static_cast<double>(result.expansions)
                                         : std::chrono::duration<double, std::milli>(t1 - t0).count();
  state_.plan_cost += cost;
  ++state_.plan_calls;

  json failed = json::array();
  for (AgvId id : result.failures) failed.push_back(id.value);
  for (const auto& r : requests) {
    std::size_t i = index_of(r.spec.id);
    auto it = result.paths.find(r.spec.id);
    if (it == result.paths.end()) throw Error("planner returned no path for agv " + std::to_string(r.spec.id.value));
    state_.agvs[i].plan = it->second;
    state_.runtime[i].needs_plan = false;
    state_.runtime[i].trigger.reset();
    state_.runtime[i].involuntary_dwell = 0;
  }
  log("plan", json{{"planner", planner_->name()},
                   {"agents", batch},
                   {"cost", cost},
                   {"expansions", result.expansions},
                   {"ct_nodes", result.ct_nodes},
                   {"failed", failed},
                   {"suboptimal", result.suboptimal}}
                  .dump());
}

// Phase 5: advance every trajectory by one step.
void Simulation::execute() {
  const int now = state_.clock;
  std::vector<ExecCorridor> corridors;
  for (const auto& c : state_.corridors) corridors.push_back({c.span(), false});
  std::vector<ExecAgent> agents;
  for (std::size_t i = 0; i < state_.agvs.size(); ++i) {
    const AgvState& agv = state_.agvs[i];
    ExecAgent ea;
    ea.spec = agv.spec;
    ea.active = agv.health.active();
    ea.pose = agv.pose;
    ea.plan = agv.plan;
    ea.involuntary_dwell = state_.runtime[i].involuntary_dwell;
    ea.carrying = agv.carrying;
    for (std::size_t k = 0; k < state_.corridors.size(); ++k) {
      if (state_.runtime[i].exempt.contains(state_.corridors[k].id)) ea.exempt_corridors.insert(k);
    }
    agents.push_back(std::move(ea));
  }
  std::vector<CollisionEvent> collisions;
  auto outcomes = step_execute(agents, now, corridors, *state_.layout, config_.exec, &collisions);
  for (std::size_t i = 0; i < state_.agvs.size(); ++i) {
    AgvState& agv = state_.agvs[i];
    AgentRuntime& rt = state_.runtime[i];
    agv.pose = agents[i].pose;
    agv.plan = std::move(agents[i].plan);
    rt.involuntary_dwell = agents[i].involuntary_dwell;
  }
  for (const auto& out : outcomes) {
    if (out.kind != ExecOutcome::Kind::TriggerReplan) continue;
    std::size_t i = index_of(out.agv);
    state_.runtime[i].trigger = out.reason;
    log("trigger", json{{"agv", out.agv.value}, {"reason", to_string(*out.reason)}}.dump());
  }
  for (const auto& c : collisions) {
    ++state_.collisions;
    log("collision", json{{"kind", to_string(c.kind)}, {"a", c.a.value}, {"b", c.b.value}, {"time", c.time}}.dump());
  }
}

// Phase 6: advance task stages whose completion condition holds.
void Simulation::advance_stages() {
  const int now = state_.clock + 1;
  const Layout& layout = *state_.layout;
  for (std::size_t i = 0; i < state_.agvs.size(); ++i) {
    AgvState& agv = state_.agvs[i];
    if (!agv.health.active() || !agv.task) continue;
    Task& task = state_.tasks[static_cast<std::size_t>(agv.task->value)];
    bool at_rest = !agv.plan || agv.plan->end_step() <= now;
    if (!is_dwell_stage(task.stage) && !at_rest) continue;
    if (!stage_complete(task, agv, now, layout)) continue;
    Order& order = state_.orders[static_cast<std::size_t>(task.order.value)];
    advance_stage(task, agv, now, layout, state_.inventory, order);
    state_.runtime[i].needs_plan = true;
    state_.runtime[i].trigger.reset();
    log("stage", json{{"agv", agv.spec.id.value}, {"task", task.id.value}, {"stage", to_string(task.stage)}}.dump());
    if (order.status == OrderStatus::Completed && order.completed_step == now) {
      state_.last_completion = std::max(state_.last_completion, now);
      log("completion", json{{"order", order.id.value}, {"agv", agv.spec.id.value}, {"at", now}}.dump());
    }
    if (task.stage == TaskStage::Done) {
      agv.task.reset();
      agv.stage = TaskStage::Done;
    }
  }
}

// Phase 7: safety bookkeeping, clock advance, termination.
void Simulation::finish_step() {
  const int next = state_.clock + 1;
  for (std::size_t i = 0; i < state_.agvs.size(); ++i) {
    const AgvState& agv = state_.agvs[i];
    AgentRuntime& rt = state_.runtime[i];
    if (!agv.health.active()) continue;
    Occupancy occ = occupancy_now(agv, next);
    for (const auto& c : state_.corridors) {
      if (c.cause_agv == agv.spec.id || !c.active_at(next)) continue;
      bool inside = touches(occ, agv.spec.footprint, c.cells);
      if (rt.exempt.contains(c.id)) {
        if (!inside) rt.exempt.erase(c.id);
      } else if (inside) {
        ++state_.intrusions;
        log("intrusion", json{{"agv", agv.spec.id.value}, {"corridor", c.id.value}}.dump());
      }
    }
    if (rt.exempt.empty()) {
      rt.grace.clear();
      rt.grace_until = -1;
    }
  }

  state_.clock = next;
  bool all_released = next_release_ == state_.orders.size();
  bool open = std::any_of(state_.orders.begin(), state_.orders.end(), [](const Order& o) {
    return o.status == OrderStatus::Pending || o.status == OrderStatus::Assigned;
  });
  if (all_released && !open) {
    done_ = true;
  } else if (state_.clock >= config_.horizon) {
    for (auto& o : state_.orders) {
      if (o.status == OrderStatus::Pending || o.status == OrderStatus::Assigned) {
        o.status = OrderStatus::Expired;
        log("expired", json{{"order", o.id.value}, {"reason", "horizon"}}.dump());
      }
    }
    done_ = true;
  }
  if (done_) {
    RunResult r = result();
    log("run_end", json{{"metrics", metrics_json(r.metrics)},
                        {"clock", state_.clock},
                        {"failures", r.failures},
                        {"collisions", r.collisions},
                        {"intrusions", r.corridor_intrusions}}
                       .dump());
  }
}

void Simulation::check_conservation() const {
  std::size_t by_status[4] = {0, 0, 0, 0};
  long picked = 0;
  for (const auto& o : state_.orders) {
    ++by_status[static_cast<std::size_t>(o.status)];
    if (o.status == OrderStatus::Completed) {
      if (!o.completed_step) throw Error("completed order " + std::to_string(o.id.value) + " has no completion step");
      picked += o.quantity;
    }
  }
  if (by_status[0] + by_status[1] + by_status[2] + by_status[3] != state_.orders.size())
    throw Error("order status conservation broken");
  if (state_.inventory.total() + picked != state_.initial_stock)
    throw Error("inventory conservation broken: " + std::to_string(state_.inventory.total()) + " + " +
                std::to_string(picked) + " != " + std::to_string(state_.initial_stock));
  for (ShelfId s : state_.inventory.shelves()) {
    for (const auto& sc : state_.layout->shelf(s).contents) {
      if (state_.inventory.count(s, sc.sku) < 0 || state_.inventory.available(s, sc.sku) < 0)
        throw Error("negative stock on shelf " + std::to_string(s.value));
    }
  }
}

RunResult Simulation::result() const {
  RunResult r;
  r.seed = seed_;
  int completed = 0;
  for (const auto& o : state_.orders) completed += o.status == OrderStatus::Completed ? 1 : 0;
  int generated = static_cast<int>(state_.orders.size());
  r.completed = completed == generated;
  r.metrics = compute_metrics(generated, completed, state_.last_completion, r.completed, config_.horizon,
                              state_.plan_cost, state_.plan_calls);
  r.orders = state_.orders;
  r.events = state_.events;
  r.failures = static_cast<int>(state_.failures.size());
  r.collisions = state_.collisions;
  r.corridor_intrusions = state_.intrusions;
  return r;
}

RunResult run(const ExperimentConfig& config, std::uint64_t seed) {
  Simulation sim(config, seed);
  while (!sim.finished()) sim.step();
  return sim.result();
}

namespace {

MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  validate(config);
  ExperimentResult out;
  out.runs.resize(static_cast<std::size_t>(config.repeats));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < config.repeats; k = next++) {
      std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(k);
      RunResult& slot = out.runs[static_cast<std::size_t>(k)];
      try {
        slot = run(config, seed);
      } catch (const std::exception& e) {
        slot = RunResult{};
        slot.seed = seed;
        slot.error = e.what();
      }
    }
  };
  threads = std::max(1u, std::min(threads, static_cast<unsigned>(config.repeats)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<double> sr, ct, tp, ms;
  for (const auto& r : out.runs) {
    if (r.error) {
      ++out.failed_runs;
      continue;
    }
    sr.push_back(r.metrics.sr);
    ct.push_back(r.metrics.ct);
    tp.push_back(r.metrics.tp);
    ms.push_back(r.metrics.makespan);
  }
  out.sr = summarize(sr);
  out.ct = summarize(ct);
  out.tp = summarize(tp);
  out.makespan = summarize(ms);
  return out;
}

void write_results_header(std::ostream& out) { out << kResultsHeader << '\n'; }

void write_results_row(std::ostream& out, const ExperimentConfig& config, const RunResult& run) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.4f,%.6f,%.6f,%d,%d,%d", run.metrics.sr, run.metrics.ct, run.metrics.tp,
                run.metrics.makespan, run.failures, run.collisions);
  out << config.env << ',' << config.scheduler << ',' << config.planner << ',' << pattern_name(config.pattern) << ','
      << run.seed << ',' << buf << '\n';
}

void write_event_log(std::ostream& out, const std::vector<LogEvent>& events) {
  for (const auto& e : events)
    out << "{\"step\":" << e.step << ",\"kind\":" << json(e.kind).dump() << ",\"payload\":" << e.payload << "}\n";
}

std::vector<LogEvent> read_event_log(std::istream& in) {
  std::vector<LogEvent> events;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      events.push_back({j.at("step").get<int>(), j.at("kind").get<std::string>(), j.at("payload").dump()});
    } catch (const json::exception& e) {
      throw ParseError("event log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

ReplayResult replay_event_log(const std::vector<LogEvent>& events) {
  ReplayResult out;
  int generated = -1;
  int horizon = 0;
  int completed = 0;
  int last = 0;
  double cost = 0.0;
  long calls = 0;
  try {
    for (const auto& e : events) {
      json p = json::parse(e.payload);
      if (e.kind == "run_start") {
        generated = p.at("orders").get<int>();
        horizon = p.at("horizon").get<int>();
      } else if (e.kind == "completion") {
        ++completed;
        last = std::max(last, p.at("at").get<int>());
      } else if (e.kind == "plan") {
        cost += p.at("cost").get<double>();
        ++calls;
      } else if (e.kind == "run_end") {
        const json& m = p.at("metrics");
        Metrics rec;
        rec.sr = m.at("sr").get<double>();
        rec.ct = m.at("ct").get<double>();
        rec.tp = m.at("tp").get<double>();
        rec.makespan = m.at("makespan").get<int>();
        rec.generated = m.at("generated").get<int>();
        rec.completed = m.at("completed").get<int>();
        rec.planner_calls = m.at("planner_calls").get<long>();
        out.recorded = rec;
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("event log: ") + e.what());
  }
  if (generated < 0) throw ParseError("event log has no run_start record");
  out.recomputed = compute_metrics(generated, completed, last, completed == generated, horizon, cost, calls);
  return out;
}

}  // namespace warerover
