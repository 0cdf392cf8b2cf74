#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "warerover/engine.hpp"

namespace warerover::telemetry {

inline constexpr int kProtocolVersion = 1;
inline constexpr double kMaxFramesPerSecond = 20.0;

struct Command {
  enum class Kind : std::uint8_t { Pause, Resume, SetSpeed, InjectFailure, StepOnce };
  Kind kind = Kind::Pause;
  double value = 0.0;  // SetSpeed: steps per wall-second
  AgvId agv;           // InjectFailure
  std::optional<std::int64_t> id;  // optional client tag echoed in the reply

  bool operator==(const Command&) const = default;
};
std::string_view to_string(Command::Kind k);

// `{"type":"pause"|"resume"|"set_speed"|"inject_failure"|"step_once", ...}`.
// Throws ParseError describing what is wrong.
Command parse_command(std::string_view text);
std::string encode_command(const Command& command);

// Full frame built from the step-boundary state. `events_from` is the index of
// the first event log entry not yet sent.
std::string snapshot_frame(const Simulation& sim, std::size_t events_from);
std::string ack_message(const Command& command, int applied_step);
std::string error_message(std::string_view reason, std::optional<std::int64_t> id = std::nullopt);

// Steps advanced between frames at a given speed so frames stay at or below
// 20 per second.
int frame_stride(double steps_per_second);

using ClientId = std::uint64_t;

struct Outgoing {
  std::optional<ClientId> to;  // nullopt: every client
  std::string text;
};

// Engine-side half of the service: commands arrive from any thread, and are
// applied only between steps by whoever drives tick().
class Controller {
 public:
  explicit Controller(Simulation& sim, double steps_per_second = 10.0);

  // Thread-safe. Malformed text produces an error reply for that client only.
  void submit(ClientId client, std::string_view text);

  // One step boundary: apply queued commands, advance the simulation unless
  // paused, and return the replies and frames to deliver.
  std::vector<Outgoing> tick();

  // Thread-safe: the most recent step-boundary frame, for a client that just
  // connected.
  std::string full_frame() const;

  bool paused() const { return paused_; }
  double speed() const { return speed_; }
  const Simulation& simulation() const { return sim_; }

 private:
  struct Pending {
    ClientId client;
    Command command;
  };

  Simulation& sim_;
  double speed_;
  bool paused_ = false;
  bool step_once_ = false;
  int since_frame_ = 0;
  std::size_t events_sent_ = 0;
  std::uint64_t next_token_ = 1;
  std::vector<std::pair<std::uint64_t, Pending>> injections_;  // awaiting the step that applies them

  mutable std::mutex mutex_;
  std::deque<Pending> queue_;
  std::vector<Outgoing> parse_errors_;
  std::string latest_;
};

}  // namespace warerover::telemetry
