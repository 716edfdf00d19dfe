// SPDX-License-Identifier: Apache-2.0
#pragma once

// MQTT 3.1.1 wire codec and a small blocking-socket client implementing
// MessageBus. QoS 0 and 1 only; QoS 1 publishes are retransmitted with DUP
// after a reconnect until the broker acknowledges them.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "aquafeed/bus.hpp"

namespace aquafeed::mqtt {

struct Connect {
  std::string client_id;
  std::uint16_t keepalive_s = 30;
  bool clean_session = true;
  bool operator==(const Connect&) const = default;
};

struct Connack {
  bool session_present = false;
  std::uint8_t return_code = 0;
  bool operator==(const Connack&) const = default;
};

struct Publish {
  std::string topic;
  std::string payload;
  std::uint8_t qos = 0;
  bool retain = false;
  bool dup = false;
  std::uint16_t packet_id = 0;  // only when qos > 0
  bool operator==(const Publish&) const = default;
};

struct Puback {
  std::uint16_t packet_id = 0;
  bool operator==(const Puback&) const = default;
};

struct Subscribe {
  std::uint16_t packet_id = 0;
  std::vector<std::pair<std::string, std::uint8_t>> filters;
  bool operator==(const Subscribe&) const = default;
};

struct Suback {
  std::uint16_t packet_id = 0;
  std::vector<std::uint8_t> return_codes;
  bool operator==(const Suback&) const = default;
};

struct Pingreq {
  bool operator==(const Pingreq&) const = default;
};
struct Pingresp {
  bool operator==(const Pingresp&) const = default;
};
struct Disconnect {
  bool operator==(const Disconnect&) const = default;
};

using Packet = std::variant<Connect, Connack, Publish, Puback, Subscribe, Suback, Pingreq,
                            Pingresp, Disconnect>;

std::string encode(const Packet& packet);

// Decodes one packet from the front of `buffer`. Returns nullopt when more
// bytes are needed; throws Protocol on malformed input.
std::optional<std::pair<Packet, std::size_t>> try_decode(std::string_view buffer);

struct BrokerUrl {
  std::string host;
  std::uint16_t port = 1883;
};

// Accepts mqtt://host[:port], tcp://host[:port] or host[:port].
BrokerUrl parse_broker_url(std::string_view url);

// Thin RAII wrapper over a connected TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept;
  ~Socket();

  static Socket connect_to(const BrokerUrl& url, std::chrono::milliseconds timeout);

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  bool send_all(std::string_view data) const;
  // Blocking read of at most `max` bytes; 0 on orderly shutdown or error.
  std::size_t read_some(char* buf, std::size_t max) const;
  void shutdown() const;

 private:
  int fd_ = -1;
};

struct ClientOptions {
  std::string client_id = "aquafeed";
  std::uint16_t keepalive_s = 30;
  std::chrono::milliseconds connect_timeout{3000};
  bool reconnect = true;
  std::chrono::milliseconds max_backoff{5000};
};

class Client final : public MessageBus {
 public:
  // Connects synchronously; throws Io when the broker is unreachable or
  // refuses the session.
  Client(const BrokerUrl& url, ClientOptions options);
  ~Client() override;

  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  void publish(const std::string& topic, std::string payload, Qos qos) override;
  void subscribe(const std::string& filter, Handler handler) override;

  bool connected() const noexcept { return connected_.load(); }
  std::size_t inflight() const;
  // Blocks until every QoS 1 publish has been acknowledged or the timeout passes.
  bool flush(std::chrono::milliseconds timeout);
  void close();

 private:
  void open_session();
  void send_packet(const Packet& p);
  void reader_loop();
  void keepalive_loop();
  bool reconnect_with_backoff();
  std::uint16_t next_packet_id();

  BrokerUrl url_;
  ClientOptions options_;
  Socket sock_;
  std::mutex write_mu_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::pair<std::string, Handler>> handlers_;
  std::map<std::uint16_t, Publish> inflight_;
  std::map<std::uint16_t, bool> pending_subacks_;
  std::uint16_t last_packet_id_ = 0;

  std::atomic<bool> connected_{false};
  std::atomic<bool> stopping_{false};
  std::thread reader_;
  std::thread pinger_;
};

}  // namespace aquafeed::mqtt
