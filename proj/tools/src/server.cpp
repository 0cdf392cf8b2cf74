#include "warerover/server.hpp"

#include <chrono>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

namespace warerover {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  using OnMessage = std::function<void(telemetry::ClientId, std::string)>;
  using OnClose = std::function<void(telemetry::ClientId)>;

  Session(tcp::socket socket, telemetry::ClientId id, OnMessage on_message, OnClose on_close)
      : ws_(std::move(socket)), id_(id), on_message_(std::move(on_message)), on_close_(std::move(on_close)) {}

  // `first` is queued as soon as the handshake completes.
  void start(std::function<std::string()> first) {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this(), first = std::move(first)](beast::error_code ec) {
      if (ec) return self->close();
      self->send(first());
      self->read();
    });
  }

  // Must run on the I/O thread.
  void send(std::string text) {
    if (closed_) return;
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write();
  }

  telemetry::ClientId id() const { return id_; }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->on_message_(self->id_, beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write() {
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) self->write();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    outbox_.clear();
    on_close_(id_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  telemetry::ClientId id_;
  OnMessage on_message_;
  OnClose on_close_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  bool closed_ = false;
};

}  // namespace

struct TelemetryServer::Impl {
  telemetry::Controller& controller;
  net::io_context io;
  tcp::acceptor acceptor;
  std::map<telemetry::ClientId, std::shared_ptr<Session>> sessions;  // I/O thread only
  std::atomic<std::size_t> clients{0};
  telemetry::ClientId next_id = 1;
  std::thread thread;

  Impl(telemetry::Controller& c, std::uint16_t port) : controller(c), acceptor(io, tcp::endpoint(tcp::v4(), port)) {}

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto id = next_id++;
      auto session = std::make_shared<Session>(
          std::move(socket), id, [this](telemetry::ClientId from, std::string text) { controller.submit(from, text); },
          [this](telemetry::ClientId gone) {
            net::post(io, [this, gone] {
              if (sessions.erase(gone) != 0) clients = sessions.size();
              spdlog::debug("telemetry client {} disconnected", gone);
            });
          });
      sessions[id] = session;
      clients = sessions.size();
      spdlog::debug("telemetry client {} connected", id);
      session->start([this] { return controller.full_frame(); });
      accept();
    });
  }

  void deliver(std::vector<telemetry::Outgoing> messages) {
    net::post(io, [this, messages = std::move(messages)] {
      for (const auto& m : messages) {
        if (m.to) {
          if (auto it = sessions.find(*m.to); it != sessions.end()) it->second->send(m.text);
        } else {
          for (auto& [id, s] : sessions) s->send(m.text);
        }
      }
    });
  }
};

TelemetryServer::TelemetryServer(telemetry::Controller& controller, std::uint16_t port)
    : impl_(std::make_unique<Impl>(controller, port)) {
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

TelemetryServer::~TelemetryServer() {
  net::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    impl_->sessions.clear();
  });
  impl_->io.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::uint16_t TelemetryServer::port() const { return impl_->acceptor.local_endpoint().port(); }

std::size_t TelemetryServer::client_count() const { return impl_->clients; }

void TelemetryServer::run(const std::atomic<bool>& stop) {
  using clock = std::chrono::steady_clock;
  auto next = clock::now();
  while (!stop) {
    impl_->deliver(impl_->controller.tick());
    const bool idle = impl_->controller.paused() || impl_->controller.simulation().finished();
    const double rate = idle ? telemetry::kMaxFramesPerSecond : impl_->controller.speed();
    next += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / rate));
    auto now = clock::now();
    if (next < now) next = now;
    std::this_thread::sleep_until(next);
  }
}

}  // namespace warerover
