#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

#include "warerover/telemetry.hpp"

namespace warerover {

// WebSocket front end for a telemetry Controller. Network I/O runs on its own
// thread; the simulation is only ever touched by the thread calling run().
class TelemetryServer {
 public:
  // Port 0 binds an ephemeral port; see port().
  TelemetryServer(telemetry::Controller& controller, std::uint16_t port);
  ~TelemetryServer();
  TelemetryServer(const TelemetryServer&) = delete;
  TelemetryServer& operator=(const TelemetryServer&) = delete;

  std::uint16_t port() const;
  std::size_t client_count() const;

  // Ticks the controller at its configured speed until `stop` becomes true.
  void run(const std::atomic<bool>& stop);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace warerover
