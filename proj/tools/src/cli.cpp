#include "warerover/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "warerover/engine.hpp"
#include "warerover/errors.hpp"
#include "warerover/report.hpp"
#include "warerover/scenarios.hpp"
#include "warerover/server.hpp"
#include "warerover/telemetry.hpp"

namespace warerover {

namespace {

// A flag value that parsed but cannot be used; exits 2 like a CLI11 error.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunFlags {
  std::string layout;
  std::string scenario = "homogeneous";
  std::string scheduler = "ta";
  std::string planner = "astar";
  std::string pattern = "os";
  int orders = 30;
  std::uint64_t seed = 0;
  std::optional<int> horizon;
  bool deterministic_ct = false;
  std::optional<std::string> failures;
  std::string failure_script;
  std::optional<double> failure_prob;
  std::optional<int> down_steps;
  std::optional<int> node_budget;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  auto* layout = app->add_option("--layout", f.layout, "Layout JSON file (instead of a scenario preset)")
                     ->check(CLI::ExistingFile);
  app->add_option("--scenario", f.scenario, "Built-in preset")
      ->check(CLI::IsMember({"homogeneous", "heterogeneous", "fault"}))
      ->excludes(layout);
  app->add_option("--scheduler", f.scheduler, "Task allocation policy")->check(CLI::IsMember({"ta", "rd"}));
  app->add_option("--planner", f.planner, "Path planner")->check(CLI::IsMember({"astar", "cbs"}));
  app->add_option("--pattern", f.pattern, "Order arrival pattern")
      ->check(CLI::IsMember({"os", "wave", "hotspot", "burst", "steady"}));
  app->add_option("--orders", f.orders, "Order count for os/wave/hotspot")->check(CLI::NonNegativeNumber);
  app->add_option("--seed", f.seed, "Run seed (first seed for experiments)");
  app->add_option("--horizon", f.horizon, "Maximum steps per run")->check(CLI::PositiveNumber);
  app->add_flag("--deterministic-ct", f.deterministic_ct, "Report planner node expansions instead of milliseconds");
  app->add_option("--failures", f.failures, "Failure source")->check(CLI::IsMember({"off", "random", "scripted"}));
  app->add_option("--failure-script", f.failure_script, "CSV of step,agv_id rows for --failures scripted")
      ->check(CLI::ExistingFile);
  app->add_option("--failure-prob", f.failure_prob, "Per-step failure probability per AGV")->check(CLI::Range(0.0, 1.0));
  app->add_option("--down-steps", f.down_steps, "Steps a failed AGV stays down")->check(CLI::PositiveNumber);
  app->add_option("--node-budget", f.node_budget, "CBS constraint-tree node budget")->check(CLI::PositiveNumber);
}

ExperimentConfig build_config(const RunFlags& f) {
  ExperimentConfig config;
  if (!f.layout.empty()) {
    config.layout = std::make_shared<const Layout>(load_layout_file(f.layout));
    config.env = "custom";
  } else {
    config = scenario_config(scenario_from_string(f.scenario));
  }
  config.scheduler = f.scheduler;
  config.planner = f.planner;
  config.pattern = pattern_from_string(f.pattern, f.orders);
  config.base_seed = f.seed;
  config.deterministic_ct = f.deterministic_ct;
  if (f.horizon) config.horizon = *f.horizon;
  if (f.node_budget) config.node_budget = *f.node_budget;
  if (f.failures) {
    config.failures.enabled = *f.failures == "random";
    config.scripted_failures.clear();
    if (*f.failures == "scripted") {
      if (f.failure_script.empty()) throw UsageError("--failure-script: required with --failures scripted");
      config.scripted_failures = load_failure_script(f.failure_script);
    }
  } else if (!f.failure_script.empty()) {
    throw UsageError("--failure-script: only valid with --failures scripted");
  }
  if (f.failure_prob) config.failures.per_step_probability = *f.failure_prob;
  if (f.down_steps) config.failures.down_steps = *f.down_steps;
  validate(config);
  return config;
}

void print_metrics(std::ostream& out, const ExperimentConfig& config, const RunResult& r) {
  const auto& m = r.metrics;
  out << "env " << config.env << " scheduler " << config.scheduler << " planner " << config.planner << " pattern "
      << pattern_name(config.pattern) << " seed " << r.seed << '\n';
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "sr %.4f\nct %.6f %s\ntp %.6f\nmakespan %d\ncompleted %d/%d\nfailures %d\ncollisions %d\n"
                "corridor_intrusions %d\n",
                m.sr, m.ct, config.deterministic_ct ? "expansions" : "ms", m.tp, m.makespan, m.completed, m.generated,
                r.failures, r.collisions, r.corridor_intrusions);
  out << buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  return f;
}

int cmd_run(const RunFlags& flags, const std::string& out_path, const std::string& events_path, std::ostream& out) {
  auto config = build_config(flags);
  spdlog::info("run: env {} scheduler {} planner {} seed {}", config.env, config.scheduler, config.planner, flags.seed);
  RunResult r = run(config, flags.seed);
  print_metrics(out, config, r);
  if (!out_path.empty()) {
    auto f = open_out(out_path);
    write_results_header(f);
    write_results_row(f, config, r);
  }
  if (!events_path.empty()) {
    auto f = open_out(events_path);
    write_event_log(f, r.events);
  }
  return kExitOk;
}

int cmd_experiment(const RunFlags& flags, int repeats, unsigned threads, const std::string& out_path,
                   std::ostream& out) {
  auto config = build_config(flags);
  config.repeats = repeats;
  validate(config);
  spdlog::info("experiment: env {} scheduler {} planner {} seeds {}..{} on {} threads", config.env, config.scheduler,
               config.planner, config.base_seed, config.base_seed + static_cast<std::uint64_t>(repeats) - 1, threads);
  auto result = run_experiment(config, threads);
  if (!out_path.empty()) {
    auto f = open_out(out_path);
    write_results_header(f);
    for (const auto& r : result.runs) {
      if (!r.error) write_results_row(f, config, r);
    }
  }
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "env %s scheduler %s planner %s pattern %s repeats %d\n"
                "sr %.4f +- %.4f\nct %.6f +- %.6f %s\ntp %.6f +- %.6f\nmakespan %.2f +- %.2f\nfailed_runs %d\n",
                config.env.c_str(), config.scheduler.c_str(), config.planner.c_str(),
                pattern_name(config.pattern).c_str(), repeats, result.sr.mean, result.sr.stddev, result.ct.mean,
                result.ct.stddev, config.deterministic_ct ? "expansions" : "ms", result.tp.mean, result.tp.stddev,
                result.makespan.mean, result.makespan.stddev, result.failed_runs);
  out << buf;
  for (const auto& r : result.runs) {
    if (r.error) out << "seed " << r.seed << " failed: " << *r.error << '\n';
  }
  return result.failed_runs == 0 ? kExitOk : kExitRuntime;
}

std::atomic<bool> g_stop{false};

int cmd_serve(const RunFlags& flags, std::uint16_t port, double speed, std::ostream& out) {
  auto config = build_config(flags);
  Simulation sim(config, flags.seed);
  telemetry::Controller controller(sim, speed);
  TelemetryServer server(controller, port);
  out << "serving telemetry on ws://0.0.0.0:" << server.port() << "/\n" << std::flush;
  g_stop = false;
  auto previous_int = std::signal(SIGINT, [](int) { g_stop = true; });
  auto previous_term = std::signal(SIGTERM, [](int) { g_stop = true; });
  server.run(g_stop);
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  return kExitOk;
}

int cmd_replay(const std::string& path, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  auto events = read_event_log(in);
  std::map<std::string, int> kinds;
  for (const auto& e : events) ++kinds[e.kind];
  out << "events " << events.size() << '\n';
  for (const auto& [k, n] : kinds) out << "  " << k << ' ' << n << '\n';
  auto replay = replay_event_log(events);
  auto show = [&](const char* label, const Metrics& m) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s sr %.4f ct %.6f tp %.6f makespan %d completed %d/%d\n", label, m.sr, m.ct, m.tp,
                  m.makespan, m.completed, m.generated);
    out << buf;
  };
  show("recomputed", replay.recomputed);
  if (!replay.recorded) {
    out << "recorded metrics absent (log has no run_end)\n";
    return kExitOk;
  }
  show("recorded  ", *replay.recorded);
  if (!(replay.recomputed == *replay.recorded)) throw Error("replayed metrics differ from the recorded ones");
  out << "match\n";
  return kExitOk;
}

int cmd_report(const std::string& path, const std::string& out_path, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string table = emit_report(in);
  if (out_path.empty()) {
    out << table;
  } else {
    open_out(out_path) << table;
  }
  return kExitOk;
}

struct GenFlags {
  int width = 20;
  int height = 15;
  int shelves = 32;
  int stations = 8;
  int agvs = 9;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen_layout(const GenFlags& g, std::ostream& out) {
  std::vector<AgvSpec> specs;
  for (int i = 0; i < g.agvs; ++i) specs.push_back({AgvId{i}, 1, 1, "carrier", 0});
  Layout layout = generate_layout(g.width, g.height, g.shelves, g.stations, specs, g.seed);
  std::string text = serialize_layout(layout);
  if (g.out.empty()) {
    out << text << '\n';
  } else {
    open_out(g.out) << text << '\n';
  }
  return kExitOk;
}

int cmd_validate_layout(const std::string& path, std::ostream& out) {
  Layout layout = load_layout_file(path);
  out << "valid: " << layout.width << 'x' << layout.height << ", " << layout.shelves.size() << " shelves, "
      << layout.stations.size() << " stations, " << layout.agvs.size() << " agvs, " << layout.parking.size()
      << " parking cells\n";
  return kExitOk;
}

void setup_logging() {
  auto logger = spdlog::get("warerover");
  if (!logger) logger = spdlog::stderr_color_mt("warerover");
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("WAREROVER_LOG"); env != nullptr && *env != '\0') {
    std::string v(env);
    if (v == "error")
      level = spdlog::level::err;
    else if (v == "info")
      level = spdlog::level::info;
    else if (v == "debug")
      level = spdlog::level::debug;
    else
      throw UsageError("WAREROVER_LOG: expected error, info or debug, got '" + v + "'");
  }
  spdlog::set_level(level);
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Warehouse AGV fleet simulator: scheduling, multi-agent path planning and failure handling"};
  app.name("warerover");
  app.require_subcommand(1, 1);

  RunFlags flags;
  std::string out_path;
  std::string events_path;
  auto* run_cmd = app.add_subcommand("run", "Run one seeded simulation and print its metrics");
  add_run_flags(run_cmd, flags);
  run_cmd->add_option("--out", out_path, "Write the results CSV row here");
  run_cmd->add_option("--events", events_path, "Write the event log (JSON lines) here");

  int repeats = 100;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* exp_cmd = app.add_subcommand("experiment", "Run seeds seed..seed+repeats-1 and aggregate");
  add_run_flags(exp_cmd, flags);
  exp_cmd->add_option("--repeats", repeats, "Number of seeds")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  exp_cmd->add_option("--out", out_path, "Write one results CSV row per run here");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-layout", "Generate a block layout document");
  gen_cmd->add_option("--width", gen.width)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--height", gen.height)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--shelves", gen.shelves)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--stations", gen.stations)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--agvs", gen.agvs, "Number of 1x1 AGVs")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out, "Output path (default: standard output)");

  std::string path;
  auto* val_cmd = app.add_subcommand("validate-layout", "Check a layout document");
  val_cmd->add_option("layout", path, "Layout JSON file")->required()->check(CLI::ExistingFile);

  int port = 8765;
  double speed = 10.0;
  auto* serve_cmd = app.add_subcommand("serve", "Run a simulation behind the WebSocket telemetry service");
  add_run_flags(serve_cmd, flags);
  serve_cmd->add_option("--serve-port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--speed", speed, "Initial steps per second")->check(CLI::PositiveNumber);

  auto* replay_cmd = app.add_subcommand("replay", "Summarize an event log and recompute its metrics");
  replay_cmd->add_option("events", path, "Event log (JSON lines)")->required()->check(CLI::ExistingFile);

  auto* report_cmd = app.add_subcommand("report", "Aggregate a results CSV into an Env x Method table");
  report_cmd->add_option("results", path, "Results CSV")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", out_path, "Write the table here (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    setup_logging();
    if (run_cmd->parsed()) return cmd_run(flags, out_path, events_path, out);
    if (exp_cmd->parsed()) return cmd_experiment(flags, repeats, threads, out_path, out);
    if (gen_cmd->parsed()) return cmd_gen_layout(gen, out);
    if (val_cmd->parsed()) return cmd_validate_layout(path, out);
    if (serve_cmd->parsed()) return cmd_serve(flags, static_cast<std::uint16_t>(port), speed, out);
    if (replay_cmd->parsed()) return cmd_replay(path, out);
    if (report_cmd->parsed()) return cmd_report(path, out_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace warerover
