#include "warerover/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "warerover/errors.hpp"
#include "warerover/executor.hpp"

namespace warerover::telemetry {

using nlohmann::json;

namespace {

constexpr std::pair<Command::Kind, std::string_view> kKinds[] = {
    {Command::Kind::Pause, "pause"},
    {Command::Kind::Resume, "resume"},
    {Command::Kind::SetSpeed, "set_speed"},
    {Command::Kind::InjectFailure, "inject_failure"},
    {Command::Kind::StepOnce, "step_once"},
};

json metrics_json(const SimState& s) {
  int completed = 0;
  for (const auto& o : s.orders) completed += o.status == OrderStatus::Completed ? 1 : 0;
  int generated = static_cast<int>(s.orders.size());
  Metrics m = compute_metrics(generated, completed, s.last_completion, completed == generated, std::max(s.clock, 1),
                              s.plan_cost, s.plan_calls);
  return {{"sr", m.sr}, {"tp", m.tp}, {"ct", m.ct}, {"completed", completed}, {"generated", generated},
          {"planner_calls", m.planner_calls}, {"collisions", s.collisions}, {"intrusions", s.intrusions}};
}

}  // namespace

std::string_view to_string(Command::Kind k) {
  for (auto [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "?";
}

Command parse_command(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("command is not valid JSON");
  if (!doc.is_object()) throw ParseError("command must be a JSON object");
  auto type = doc.find("type");
  if (type == doc.end() || !type->is_string()) throw ParseError("command needs a string \"type\"");

  Command cmd;
  const auto name = type->get<std::string>();
  auto known = std::find_if(std::begin(kKinds), std::end(kKinds), [&](const auto& k) { return k.second == name; });
  if (known == std::end(kKinds)) throw ParseError("unknown command type \"" + name + "\"");
  cmd.kind = known->first;

  if (auto id = doc.find("id"); id != doc.end()) {
    if (!id->is_number_integer()) throw ParseError("\"id\" must be an integer");
    cmd.id = id->get<std::int64_t>();
  }
  if (cmd.kind == Command::Kind::SetSpeed) {
    auto v = doc.find("value");
    if (v == doc.end() || !v->is_number()) throw ParseError("set_speed needs a numeric \"value\"");
    cmd.value = v->get<double>();
    if (!(cmd.value > 0.0) || !std::isfinite(cmd.value)) throw ParseError("set_speed value must be positive");
  }
  if (cmd.kind == Command::Kind::InjectFailure) {
    auto a = doc.find("agv");
    if (a == doc.end() || !a->is_number_integer() || a->get<std::int64_t>() < 0)
      throw ParseError("inject_failure needs a non-negative integer \"agv\"");
    cmd.agv = AgvId{a->get<int>()};
  }
  return cmd;
}

std::string encode_command(const Command& command) {
  json doc{{"type", to_string(command.kind)}};
  if (command.kind == Command::Kind::SetSpeed) doc["value"] = command.value;
  if (command.kind == Command::Kind::InjectFailure) doc["agv"] = command.agv.value;
  if (command.id) doc["id"] = *command.id;
  return doc.dump();
}

std::string snapshot_frame(const Simulation& sim, std::size_t events_from) {
  const SimState& s = sim.state();
  const Layout& layout = *s.layout;

  json agvs = json::array();
  std::map<ShelfId, const AgvState*> carriers;
  for (const auto& agv : s.agvs) {
    ContinuousPose p{static_cast<double>(agv.pose.anchor.x), static_cast<double>(agv.pose.anchor.y),
                     static_cast<double>(static_cast<int>(agv.pose.heading))};
    if (agv.health.active() && agv.plan && !agv.plan->empty()) p = realize_plan(*agv.plan, agv.spec).pose_at(s.clock);
    if (agv.carrying) carriers[*agv.carrying] = &agv;
    agvs.push_back({{"id", agv.spec.id.value},
                    {"x", p.x},
                    {"y", p.y},
                    {"heading", to_string(agv.pose.heading)},
                    {"footprint", agv.spec.footprint},
                    {"health", agv.health.active() ? "active" : "failed"},
                    {"carrying", agv.carrying ? json(agv.carrying->value) : json(nullptr)},
                    {"stage", to_string(agv.stage)}});
  }

  json shelves = json::array();
  for (const auto& shelf : layout.shelves) {
    json j{{"id", shelf.id.value}, {"x", shelf.home.x}, {"y", shelf.home.y}, {"size", shelf.size}, {"carried_by", nullptr}};
    if (auto it = carriers.find(shelf.id); it != carriers.end()) {
      j["x"] = it->second->pose.anchor.x;
      j["y"] = it->second->pose.anchor.y;
      j["carried_by"] = it->second->spec.id.value;
    }
    shelves.push_back(std::move(j));
  }

  json corridors = json::array();
  for (const auto& c : s.corridors) {
    std::vector<Cell> cells(c.cells.begin(), c.cells.end());
    std::sort(cells.begin(), cells.end());
    json jc = json::array();
    for (Cell cell : cells) jc.push_back({cell.x, cell.y});
    corridors.push_back({{"id", c.id.value}, {"cause_agv", c.cause_agv.value}, {"until", c.active_until}, {"cells", jc}});
  }

  json events = json::array();
  for (std::size_t i = events_from; i < s.events.size(); ++i) {
    const auto& e = s.events[i];
    events.push_back({{"step", e.step}, {"kind", e.kind}, {"payload", json::parse(e.payload)}});
  }

  json frame{{"type", "snapshot"},
             {"proto", kProtocolVersion},
             {"step", s.clock},
             {"finished", sim.finished()},
             {"width", layout.width},
             {"height", layout.height},
             {"agvs", std::move(agvs)},
             {"shelves", std::move(shelves)},
             {"corridors", std::move(corridors)},
             {"metrics", metrics_json(s)},
             {"events", std::move(events)}};
  return frame.dump();
}

std::string ack_message(const Command& command, int applied_step) {
  json doc{{"type", "ack"}, {"proto", kProtocolVersion}, {"command", to_string(command.kind)}, {"applied_step", applied_step}};
  if (command.id) doc["id"] = *command.id;
  return doc.dump();
}

std::string error_message(std::string_view reason, std::optional<std::int64_t> id) {
  json doc{{"type", "error"}, {"proto", kProtocolVersion}, {"message", reason}};
  if (id) doc["id"] = *id;
  return doc.dump();
}

int frame_stride(double steps_per_second) {
  if (steps_per_second <= kMaxFramesPerSecond) return 1;
  return static_cast<int>(std::ceil(steps_per_second / kMaxFramesPerSecond));
}

Controller::Controller(Simulation& sim, double steps_per_second) : sim_(sim), speed_(steps_per_second) {
  events_sent_ = sim_.state().events.size();
  latest_ = snapshot_frame(sim_, events_sent_);
}

void Controller::submit(ClientId client, std::string_view text) {
  std::lock_guard lock(mutex_);
  try {
    queue_.push_back({client, parse_command(text)});
  } catch (const ParseError& e) {
    parse_errors_.push_back({client, error_message(e.what())});
  }
}

std::vector<Outgoing> Controller::tick() {
  std::vector<Outgoing> out;
  std::deque<Pending> commands;
  {
    std::lock_guard lock(mutex_);
    commands.swap(queue_);
    out = std::move(parse_errors_);
    parse_errors_.clear();
  }

  const int boundary = sim_.state().clock;
  for (auto& p : commands) {
    switch (p.command.kind) {
      case Command::Kind::Pause: paused_ = true; break;
      case Command::Kind::Resume: paused_ = false; break;
      case Command::Kind::SetSpeed: speed_ = p.command.value; break;
      case Command::Kind::StepOnce: step_once_ = true; break;
      case Command::Kind::InjectFailure: {
        std::uint64_t token = next_token_++;
        sim_.queue_injection(p.command.agv, token);
        injections_.emplace_back(token, p);
        continue;  // acknowledged once the step applying it has run
      }
    }
    out.push_back({p.client, ack_message(p.command, boundary)});
  }

  bool advanced = false;
  if ((!paused_ || step_once_) && !sim_.finished()) {
    sim_.step();
    step_once_ = false;
    advanced = true;
    for (const auto& applied : sim_.last_applied()) {
      auto it = std::find_if(injections_.begin(), injections_.end(), [&](const auto& e) { return e.first == applied.token; });
      if (it == injections_.end()) continue;
      const Pending& p = it->second;
      if (applied.error)
        out.push_back({p.client, error_message(*applied.error, p.command.id)});
      else
        out.push_back({p.client, ack_message(p.command, applied.step)});
      injections_.erase(it);
    }
  }

  // Every step up to 20 steps/s, decimated above that; a paused or finished
  // run keeps re-sending its current frame.
  if (advanced) ++since_frame_;
  if (!advanced || since_frame_ >= frame_stride(speed_) || sim_.finished()) {
    out.push_back({std::nullopt, snapshot_frame(sim_, events_sent_)});
    events_sent_ = sim_.state().events.size();
    since_frame_ = 0;
  }
  std::string latest = snapshot_frame(sim_, sim_.state().events.size());
  std::lock_guard lock(mutex_);
  latest_ = std::move(latest);
  return out;
}

std::string Controller::full_frame() const {
  std::lock_guard lock(mutex_);
  return latest_;
}

}  // namespace warerover::telemetry
