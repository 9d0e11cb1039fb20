#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "qube/protocol.hpp"

namespace qube {

// TCP transport for the line protocol. Every connection gets its own
// session; commands are read between ticks, so they never interleave with
// a step.
class LineServer {
 public:
  using SessionFactory = std::function<Session()>;

  // Port 0 binds an ephemeral port; see port().
  LineServer(int port, SessionFactory factory, bool loopback_only = false)
      : factory_(std::move(factory)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(ErrorCode::io_error, "cannot create socket");
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
        ::listen(listen_fd_, 16) < 0) {
      ::close(listen_fd_);
      throw Error(ErrorCode::io_error, "cannot listen on port " + std::to_string(port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  ~LineServer() {
    stop();
    for (auto& t : workers_) {
      if (t.joinable()) t.join();
    }
    ::close(listen_fd_);
  }

  int port() const { return port_; }

  // Accept loop; returns after stop().
  void run() {
    while (!stopping_) {
      pollfd p{listen_fd_, POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      std::lock_guard lock(mutex_);
      workers_.emplace_back([this, fd] { serve(fd); });
    }
  }

  void stop() { stopping_ = true; }

 private:
  static bool send_line(int fd, const std::string& line) {
    std::string data = line + "\n";
    std::size_t sent = 0;
    while (sent < data.size()) {
      const auto n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  void serve(int fd) {
    using clock = std::chrono::steady_clock;
    std::optional<protocol::Endpoint> endpoint;
    try {
      endpoint.emplace(factory_());
    } catch (const Error& e) {
      send_line(fd, protocol::Endpoint::error_json(nullptr, e.code(), e.what()).dump());
      ::close(fd);
      return;
    }
    std::string inbox;
    auto next_tick = clock::now();
    bool open = true;
    while (open && !stopping_) {
      const Session& session = endpoint->session();
      const bool running = endpoint->handshaken() && session.mode() == Mode::Running;
      const bool unpaced = session.speed() == kMaxSpeed;
      int timeout_ms = 100;
      if (running) {
        const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(
                              next_tick - clock::now()).count();
        timeout_ms = unpaced ? 0 : static_cast<int>(std::clamp<long long>(wait, 0, 100));
      }
      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, timeout_ms) > 0) {
        char buf[4096];
        const auto n = ::recv(fd, buf, sizeof buf, 0);
        if (n <= 0) break;
        inbox.append(buf, static_cast<std::size_t>(n));
        for (auto nl = inbox.find('\n'); nl != std::string::npos; nl = inbox.find('\n')) {
          std::string line = inbox.substr(0, nl);
          inbox.erase(0, nl + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.empty()) continue;
          for (const auto& reply : endpoint->on_line(line)) open = open && send_line(fd, reply);
        }
        continue;
      }
      if (!running) continue;
      if (unpaced) {
        // Decimated: run to the next episode boundary, one frame per episode.
        const long budget = session.options().training.step_limit + 1;
        for (long i = 0; i < budget && endpoint->session().mode() == Mode::Running; ++i) {
          if (auto frame = endpoint->pump()) {
            open = send_line(fd, *frame);
            break;
          }
        }
        continue;
      }
      const auto now = clock::now();
      if (now < next_tick) continue;
      if (auto frame = endpoint->pump()) open = send_line(fd, *frame);
      next_tick = std::max(next_tick + std::chrono::milliseconds(1000 / session.speed()),
                           now - std::chrono::milliseconds(1000));
    }
    ::close(fd);
  }

  SessionFactory factory_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex mutex_;
  std::vector<std::thread> workers_;
};

}  // namespace qube
