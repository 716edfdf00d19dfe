// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal MQTT 3.1.1 broker for tests: QoS 0/1 fan-out, no retained
// messages, no persistent sessions.

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace aquafeed::testing {

class MiniBroker {
 public:
  // Listens on 127.0.0.1; port 0 picks a free port.
  explicit MiniBroker(std::uint16_t port = 0);
  ~MiniBroker();
  MiniBroker(const MiniBroker&) = delete;
  MiniBroker& operator=(const MiniBroker&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::string url() const { return "mqtt://127.0.0.1:" + std::to_string(port_); }

  // Closes every client connection (clients may reconnect).
  void drop_connections();
  std::size_t connections() const;
  std::uint64_t publishes_received() const noexcept { return publishes_.load(); }
  void stop();

 private:
  struct Session;
  void accept_loop();
  void serve(std::shared_ptr<Session> s);
  void route(const std::string& topic, const std::string& payload, std::uint8_t qos);

  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> publishes_{0};
  std::thread acceptor_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Session>> sessions_;
  std::vector<std::thread> workers_;
};

}  // namespace aquafeed::testing
