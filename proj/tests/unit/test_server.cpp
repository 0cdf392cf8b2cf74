#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "warerover/scenarios.hpp"
#include "warerover/server.hpp"

using namespace warerover;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;
using nlohmann::json;

namespace {

class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(io_) {
    tcp::resolver resolver(io_);
    boost::asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }
  ~Client() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  // Next message of the given type, skipping frames and replies of other kinds.
  json read_type(const std::string& type) {
    for (;;) {
      json j = read();
      if (j["type"] == type) return j;
    }
  }
  void send(const std::string& text) { ws_.write(boost::asio::buffer(text)); }

 private:
  boost::asio::io_context io_;
  websocket::stream<tcp::socket> ws_;
};

}  // namespace

TEST_CASE("a WebSocket client gets frames and acknowledgements") {
  auto config = scenario_config(Scenario::Homogeneous);
  config.pattern = pattern::Steady{0.05, 2000};
  config.deterministic_ct = true;
  Simulation sim(config, 1);
  telemetry::Controller controller(sim, 50);
  TelemetryServer server(controller, 0);
  REQUIRE(server.port() != 0);

  std::atomic<bool> stop{false};
  std::thread driver([&] { server.run(stop); });
  {
    Client client(server.port());
    json first = client.read();
    CHECK(first["type"] == "snapshot");
    CHECK(first["proto"] == telemetry::kProtocolVersion);

    client.send(R"({"type":"pause","id":1})");
    json ack = client.read_type("ack");
    CHECK(ack["command"] == "pause");
    CHECK(ack["id"] == 1);
    const int paused_at = ack["applied_step"];
    json frame = client.read_type("snapshot");
    frame = client.read_type("snapshot");
    CHECK(frame["step"] == paused_at);

    client.send(R"({"type":"inject_failure","agv":2,"id":2})");
    client.send(R"({"type":"step_once"})");
    ack = client.read_type("ack");
    CHECK(ack["command"] == "step_once");
    ack = client.read_type("ack");
    CHECK(ack["command"] == "inject_failure");
    CHECK(ack["applied_step"] == paused_at);

    client.send("{nope");
    json err = client.read_type("error");
    CHECK(err.contains("message"));

    Client late(server.port());
    json joined = late.read();
    CHECK(joined["type"] == "snapshot");
    CHECK(joined["step"] == paused_at + 1);
  }
  stop = true;
  driver.join();
  CHECK(sim.state().failures.size() >= 1);
}
