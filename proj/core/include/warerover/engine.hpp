#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "warerover/executor.hpp"
#include "warerover/failures.hpp"
#include "warerover/orders.hpp"
#include "warerover/planner.hpp"
#include "warerover/random.hpp"
#include "warerover/scheduler.hpp"
#include "warerover/world.hpp"

namespace warerover {

struct Metrics {
  double sr = 100.0;  // percent of generated orders completed
  double ct = 0.0;    // mean cost per planner invocation (ms, or expansions in deterministic mode)
  double tp = 0.0;    // completed orders per step
  int makespan = 0;
  int generated = 0;
  int completed = 0;
  long planner_calls = 0;

  bool operator==(const Metrics&) const = default;
};

// Metric formulas shared by the engine and log replay.
Metrics compute_metrics(int generated, int completed, int last_completion, bool all_done, int horizon,
                        double total_cost, long calls);

struct ExperimentConfig {
  std::string env = "custom";
  std::shared_ptr<const Layout> layout;
  OrderPattern pattern = pattern::OneShot{30};
  std::string scheduler = "ta";  // ta | rd | external:<name>
  std::string planner = "astar";  // astar | cbs | external:<name>
  FailureConfig failures;
  std::vector<ScriptedFailure> scripted_failures;
  int horizon = 2000;
  int repeats = 1;
  std::uint64_t base_seed = 0;
  bool deterministic_ct = false;
  ExecConfig exec;
  int node_budget = 1000;
  int planning_horizon = 512;
};

// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& config);

struct LogEvent {
  int step = 0;
  std::string kind;
  std::string payload;  // serialized JSON object

  bool operator==(const LogEvent&) const = default;
};

struct RunResult {
  std::uint64_t seed = 0;
  Metrics metrics;
  std::vector<Order> orders;
  std::vector<LogEvent> events;
  bool completed = false;  // every order finished before the horizon
  int failures = 0;
  int collisions = 0;
  int corridor_intrusions = 0;
  std::optional<std::string> error;
};

// Per-agent bookkeeping the engine keeps next to AgvState.
struct AgentRuntime {
  int involuntary_dwell = 0;
  std::optional<ReplanReason> trigger;
  bool needs_plan = false;
  std::set<CorridorId> exempt;  // corridors it was inside when they formed
  CellSet grace;
  int grace_until = -1;
  Pose parking;
};

struct SimState {
  int clock = 0;
  std::shared_ptr<const Layout> layout;
  std::vector<AgvState> agvs;  // sorted by id
  std::vector<AgentRuntime> runtime;
  std::vector<Order> orders;
  std::vector<Task> tasks;
  Inventory inventory;
  long initial_stock = 0;
  std::vector<FailureEvent> failures;
  std::vector<SafetyCorridor> corridors;  // active only
  Rng scheduler_rng;
  Rng failure_rng;
  std::vector<LogEvent> events;

  // Counters behind the metrics.
  double plan_cost = 0.0;
  long plan_calls = 0;
  int last_completion = 0;
  int collisions = 0;
  int intrusions = 0;
};

struct AppliedCommand {
  std::uint64_t token = 0;
  int step = 0;
  std::optional<std::string> error;
};

class Simulation {
 public:
  Simulation(ExperimentConfig config, std::uint64_t seed);

  // One step through the fixed phase order.
  void step();
  bool finished() const;
  RunResult result() const;

  const SimState& state() const { return state_; }
  const ExperimentConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

  // Queues an on-demand failure for the next step boundary.
  void queue_injection(AgvId agv, std::uint64_t token = 0);
  // Commands applied during the last step().
  const std::vector<AppliedCommand>& last_applied() const { return applied_; }

  // Throws Error when order-status or inventory conservation is broken.
  void check_conservation() const;

 private:
  void log(std::string kind, std::string payload);
  void release_orders();
  void handle_failures();
  void fail_agent(FailureEvent event);
  void schedule();
  void plan();
  void execute();
  void advance_stages();
  void finish_step();

  std::optional<Cell> movement_goal(std::size_t i) const;
  TimedPath dwell_plan(std::size_t i) const;
  BlockSet corridor_blocks() const;
  std::size_t index_of(AgvId id) const;

  ExperimentConfig config_;
  std::uint64_t seed_;
  SimState state_;
  std::unique_ptr<Planner> planner_;
  std::unique_ptr<SchedulerPolicy> external_scheduler_;
  std::optional<SchedulerKind> scheduler_kind_;
  Compatibility compatibility_;
  std::size_t next_release_ = 0;
  int next_failure_id_ = 0;
  int next_corridor_id_ = 0;
  std::size_t next_script_ = 0;
  std::vector<std::pair<AgvId, std::uint64_t>> injections_;
  std::vector<AppliedCommand> applied_;
  bool done_ = false;
};

RunResult run(const ExperimentConfig& config, std::uint64_t seed);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ExperimentResult {
  std::vector<RunResult> runs;  // seed order
  MetricSummary sr;
  MetricSummary ct;
  MetricSummary tp;
  MetricSummary makespan;
  int failed_runs = 0;
};

// Seeds base_seed .. base_seed+repeats-1, spread over `threads` workers;
// aggregation is independent of execution order.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 1);

inline constexpr const char* kResultsHeader = "env,scheduler,planner,pattern,seed,sr,ct_ms,tp,makespan,failures,collisions";
void write_results_header(std::ostream& out);
void write_results_row(std::ostream& out, const ExperimentConfig& config, const RunResult& run);

// Newline-delimited JSON: {"step":N,"kind":"...","payload":{...}}.
void write_event_log(std::ostream& out, const std::vector<LogEvent>& events);
std::vector<LogEvent> read_event_log(std::istream& in);

struct ReplayResult {
  Metrics recomputed;
  std::optional<Metrics> recorded;
};
// Recomputes the final metrics from an event log. Throws ParseError.
ReplayResult replay_event_log(const std::vector<LogEvent>& events);

}  // namespace warerover
