// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/mqtt.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "aquafeed/error.hpp"

namespace aquafeed::mqtt {

namespace {

enum Type : std::uint8_t {
  kConnect = 1,
  kConnack = 2,
  kPublish = 3,
  kPuback = 4,
  kSubscribe = 8,
  kSuback = 9,
  kPingreq = 12,
  kPingresp = 13,
  kDisconnect = 14,
};

constexpr std::uint32_t kMaxRemaining = 268'435'455;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_str(std::string& out, std::string_view s) {
  if (s.size() > 0xffff) throw Error(ErrorKind::Encode, "mqtt", "string longer than 65535 bytes");
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out.append(s);
}

std::string frame(std::uint8_t first, const std::string& body) {
  if (body.size() > kMaxRemaining) throw Error(ErrorKind::Encode, "mqtt", "packet too large");
  std::string out;
  out.push_back(static_cast<char>(first));
  auto len = static_cast<std::uint32_t>(body.size());
  do {
    std::uint8_t b = len % 128;
    len /= 128;
    if (len > 0) b |= 0x80;
    out.push_back(static_cast<char>(b));
  } while (len > 0);
  out += body;
  return out;
}

[[noreturn]] void malformed(const std::string& msg) { throw Error(ErrorKind::Protocol, "mqtt", msg); }

class BodyReader {
 public:
  explicit BodyReader(std::string_view body) : body_(body) {}

  std::uint8_t u8() {
    if (pos_ + 1 > body_.size()) malformed("truncated packet");
    return static_cast<std::uint8_t>(body_[pos_++]);
  }
  std::uint16_t u16() {
    const std::uint16_t hi = u8();
    return static_cast<std::uint16_t>((hi << 8) | u8());
  }
  std::string str() {
    const std::uint16_t n = u16();
    if (pos_ + n > body_.size()) malformed("truncated string");
    std::string s(body_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string rest() {
    std::string s(body_.substr(pos_));
    pos_ = body_.size();
    return s;
  }
  bool done() const { return pos_ == body_.size(); }

 private:
  std::string_view body_;
  std::size_t pos_ = 0;
};

bool has_wildcard(std::string_view s) {
  return s.find('+') != std::string_view::npos || s.find('#') != std::string_view::npos;
}

}  // namespace

std::string encode(const Packet& packet) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        std::string body;
        if constexpr (std::is_same_v<T, Connect>) {
          put_str(body, "MQTT");
          body.push_back(4);  // protocol level 3.1.1
          body.push_back(p.clean_session ? 0x02 : 0x00);
          put_u16(body, p.keepalive_s);
          put_str(body, p.client_id);
          return frame(kConnect << 4, body);
        } else if constexpr (std::is_same_v<T, Connack>) {
          body.push_back(p.session_present ? 1 : 0);
          body.push_back(static_cast<char>(p.return_code));
          return frame(kConnack << 4, body);
        } else if constexpr (std::is_same_v<T, Publish>) {
          if (p.qos > 1) throw Error(ErrorKind::Encode, "mqtt", "only QoS 0 and 1 are supported");
          if (p.topic.empty() || has_wildcard(p.topic)) {
            throw Error(ErrorKind::Encode, "mqtt", "invalid publish topic");
          }
          put_str(body, p.topic);
          if (p.qos > 0) put_u16(body, p.packet_id);
          body += p.payload;
          const std::uint8_t flags = static_cast<std::uint8_t>((p.dup ? 0x08 : 0) | (p.qos << 1) |
                                                               (p.retain ? 0x01 : 0));
          return frame(static_cast<std::uint8_t>(kPublish << 4 | flags), body);
        } else if constexpr (std::is_same_v<T, Puback>) {
          put_u16(body, p.packet_id);
          return frame(kPuback << 4, body);
        } else if constexpr (std::is_same_v<T, Subscribe>) {
          put_u16(body, p.packet_id);
          for (const auto& [filter, qos] : p.filters) {
            put_str(body, filter);
            body.push_back(static_cast<char>(qos));
          }
          return frame(kSubscribe << 4 | 0x02, body);
        } else if constexpr (std::is_same_v<T, Suback>) {
          put_u16(body, p.packet_id);
          for (auto rc : p.return_codes) body.push_back(static_cast<char>(rc));
          return frame(kSuback << 4, body);
        } else if constexpr (std::is_same_v<T, Pingreq>) {
          return frame(kPingreq << 4, body);
        } else if constexpr (std::is_same_v<T, Pingresp>) {
          return frame(kPingresp << 4, body);
        } else {
          return frame(kDisconnect << 4, body);
        }
      },
      packet);
}

std::optional<std::pair<Packet, std::size_t>> try_decode(std::string_view buffer) {
  if (buffer.size() < 2) return std::nullopt;
  const auto first = static_cast<std::uint8_t>(buffer[0]);
  const std::uint8_t type = first >> 4;
  const std::uint8_t flags = first & 0x0f;

  std::uint32_t remaining = 0;
  std::size_t pos = 1;
  for (int shift = 0;; shift += 7) {
    if (pos >= buffer.size()) return std::nullopt;
    if (shift > 21) malformed("remaining length exceeds four bytes");
    const auto b = static_cast<std::uint8_t>(buffer[pos++]);
    remaining |= static_cast<std::uint32_t>(b & 0x7f) << shift;
    if ((b & 0x80) == 0) break;
  }
  if (buffer.size() - pos < remaining) return std::nullopt;
  const std::size_t total = pos + remaining;
  BodyReader r(buffer.substr(pos, remaining));

  auto expect_flags = [&](std::uint8_t want) {
    if (flags != want) malformed("reserved flag bits set");
  };
  auto expect_done = [&] {
    if (!r.done()) malformed("trailing bytes in packet");
  };

  Packet out;
  switch (type) {
    case kConnect: {
      expect_flags(0);
      if (r.str() != "MQTT") malformed("unsupported protocol name");
      if (r.u8() != 4) malformed("unsupported protocol level");
      const std::uint8_t cflags = r.u8();
      if (cflags & 0x01) malformed("reserved connect flag set");
      Connect c;
      c.clean_session = (cflags & 0x02) != 0;
      c.keepalive_s = r.u16();
      c.client_id = r.str();
      // Will, username and password are accepted and ignored.
      if (cflags & 0x04) {
        r.str();
        r.str();
      }
      if (cflags & 0x80) r.str();
      if (cflags & 0x40) r.str();
      expect_done();
      out = c;
      break;
    }
    case kConnack: {
      expect_flags(0);
      Connack c;
      const std::uint8_t ack = r.u8();
      if (ack & 0xfe) malformed("reserved connack flag set");
      c.session_present = ack & 0x01;
      c.return_code = r.u8();
      expect_done();
      out = c;
      break;
    }
    case kPublish: {
      Publish p;
      p.dup = flags & 0x08;
      p.qos = (flags >> 1) & 0x03;
      p.retain = flags & 0x01;
      if (p.qos > 1) malformed("QoS 2 is not supported");
      p.topic = r.str();
      if (p.topic.empty() || has_wildcard(p.topic)) malformed("invalid publish topic");
      if (p.qos > 0) {
        p.packet_id = r.u16();
        if (p.packet_id == 0) malformed("packet id must be non-zero");
      }
      p.payload = r.rest();
      out = std::move(p);
      break;
    }
    case kPuback: {
      expect_flags(0);
      out = Puback{r.u16()};
      expect_done();
      break;
    }
    case kSubscribe: {
      expect_flags(0x02);
      Subscribe s;
      s.packet_id = r.u16();
      if (s.packet_id == 0) malformed("packet id must be non-zero");
      while (!r.done()) {
        std::string filter = r.str();
        const std::uint8_t qos = r.u8();
        if (filter.empty() || qos > 2) malformed("invalid subscription");
        s.filters.emplace_back(std::move(filter), qos);
      }
      if (s.filters.empty()) malformed("subscribe without filters");
      out = std::move(s);
      break;
    }
    case kSuback: {
      expect_flags(0);
      Suback s;
      s.packet_id = r.u16();
      while (!r.done()) s.return_codes.push_back(r.u8());
      out = std::move(s);
      break;
    }
    case kPingreq:
      expect_flags(0);
      expect_done();
      out = Pingreq{};
      break;
    case kPingresp:
      expect_flags(0);
      expect_done();
      out = Pingresp{};
      break;
    case kDisconnect:
      expect_flags(0);
      expect_done();
      out = Disconnect{};
      break;
    default:
      malformed("unsupported packet type " + std::to_string(type));
  }
  return std::make_pair(std::move(out), total);
}

BrokerUrl parse_broker_url(std::string_view url) {
  std::string_view rest = url;
  for (std::string_view scheme : {"mqtt://", "tcp://"}) {
    if (rest.substr(0, scheme.size()) == scheme) {
      rest.remove_prefix(scheme.size());
      break;
    }
  }
  if (rest.find("://") != std::string_view::npos) {
    throw Error(ErrorKind::InvalidInput, "broker-url", "unsupported scheme in \"" + std::string(url) + "\"");
  }
  while (!rest.empty() && rest.back() == '/') rest.remove_suffix(1);
  BrokerUrl out;
  const auto colon = rest.rfind(':');
  if (colon != std::string_view::npos) {
    const std::string_view port = rest.substr(colon + 1);
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc{} || ptr != port.data() + port.size() || value == 0 || value > 65535) {
      throw Error(ErrorKind::InvalidInput, "broker-url", "bad port in \"" + std::string(url) + "\"");
    }
    out.port = static_cast<std::uint16_t>(value);
    rest = rest.substr(0, colon);
  }
  if (rest.empty()) throw Error(ErrorKind::InvalidInput, "broker-url", "missing host");
  out.host = std::string(rest);
  return out;
}

// ---- socket ----------------------------------------------------------------

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(o.fd_, -1);
  }
  return *this;
}

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket Socket::connect_to(const BrokerUrl& url, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(url.port);
  if (int rc = ::getaddrinfo(url.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorKind::Io, url.host, std::string("cannot resolve: ") + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) continue;
    const int fl = ::fcntl(s.fd(), F_GETFL, 0);
    ::fcntl(s.fd(), F_SETFL, fl | O_NONBLOCK);
    int rc = ::connect(s.fd(), ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd pfd{s.fd(), POLLOUT, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (ready == 1) {
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        rc = -1;
        if (ready == 0) errno = ETIMEDOUT;
      }
    }
    if (rc == 0) {
      ::fcntl(s.fd(), F_SETFL, fl);
      int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      ::freeaddrinfo(res);
      return s;
    }
    last_error = std::strerror(errno);
  }
  ::freeaddrinfo(res);
  throw Error(ErrorKind::Io, url.host + ":" + port, "connect failed: " + last_error);
}

bool Socket::send_all(std::string_view data) const {
  while (!data.empty()) {
    const ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

std::size_t Socket::read_some(char* buf, std::size_t max) const {
  while (true) {
    const ssize_t n = ::recv(fd_, buf, max, 0);
    if (n < 0 && errno == EINTR) continue;
    return n > 0 ? static_cast<std::size_t>(n) : 0;
  }
}

void Socket::shutdown() const {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

// ---- client ----------------------------------------------------------------

Client::Client(const BrokerUrl& url, ClientOptions options) : url_(url), options_(std::move(options)) {
  open_session();
  reader_ = std::thread([this] { reader_loop(); });
  if (options_.keepalive_s > 0) pinger_ = std::thread([this] { keepalive_loop(); });
}

Client::~Client() { close(); }

void Client::open_session() {
  Socket s = Socket::connect_to(url_, options_.connect_timeout);
  if (!s.send_all(encode(Connect{options_.client_id, options_.keepalive_s, true}))) {
    throw Error(ErrorKind::Io, url_.host, "failed to send CONNECT");
  }
  std::string buf;
  char chunk[256];
  const auto deadline = std::chrono::steady_clock::now() + options_.connect_timeout;
  while (true) {
    if (auto decoded = try_decode(buf)) {
      const auto* ack = std::get_if<Connack>(&decoded->first);
      if (!ack) throw Error(ErrorKind::Protocol, "mqtt", "expected CONNACK");
      if (ack->return_code != 0) {
        throw Error(ErrorKind::Io, url_.host,
                    "broker refused connection, code " + std::to_string(ack->return_code));
      }
      break;
    }
    pollfd pfd{s.fd(), POLLIN, 0};
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0 || ::poll(&pfd, 1, static_cast<int>(left.count())) != 1) {
      throw Error(ErrorKind::Io, url_.host, "timed out waiting for CONNACK");
    }
    const std::size_t n = s.read_some(chunk, sizeof(chunk));
    if (n == 0) throw Error(ErrorKind::Io, url_.host, "connection closed before CONNACK");
    buf.append(chunk, n);
  }

  std::vector<std::string> filters;
  std::vector<Publish> resend;
  {
    std::lock_guard lock(mu_);
    for (const auto& [f, h] : handlers_) filters.push_back(f);
    for (auto& [id, p] : inflight_) {
      p.dup = true;
      resend.push_back(p);
    }
  }
  {
    std::lock_guard lock(write_mu_);
    sock_ = std::move(s);
  }
  connected_ = true;
  // Session is clean, so subscriptions are restored after a reconnect.
  for (const auto& f : filters) send_packet(Subscribe{next_packet_id(), {{f, 1}}});
  for (const auto& p : resend) send_packet(p);
}

void Client::send_packet(const Packet& p) {
  const std::string bytes = encode(p);
  std::lock_guard lock(write_mu_);
  if (!sock_.valid() || !sock_.send_all(bytes)) connected_ = false;
}

std::uint16_t Client::next_packet_id() {
  std::lock_guard lock(mu_);
  do {
    ++last_packet_id_;
  } while (last_packet_id_ == 0 || inflight_.count(last_packet_id_));
  return last_packet_id_;
}

void Client::publish(const std::string& topic, std::string payload, Qos qos) {
  Publish p{topic, std::move(payload), static_cast<std::uint8_t>(qos), false, false, 0};
  if (qos == Qos::AtLeastOnce) {
    p.packet_id = next_packet_id();
    std::lock_guard lock(mu_);
    inflight_[p.packet_id] = p;
  }
  send_packet(p);
}

void Client::subscribe(const std::string& filter, Handler handler) {
  const std::uint16_t id = next_packet_id();
  {
    std::lock_guard lock(mu_);
    handlers_.emplace_back(filter, std::move(handler));
    pending_subacks_[id] = false;
  }
  send_packet(Subscribe{id, {{filter, 1}}});
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, options_.connect_timeout,
               [&] { return pending_subacks_[id] || stopping_.load(); });
  const bool acked = pending_subacks_[id];
  pending_subacks_.erase(id);
  if (!acked && !stopping_) throw Error(ErrorKind::Io, url_.host, "no SUBACK for " + filter);
}

std::size_t Client::inflight() const {
  std::lock_guard lock(mu_);
  return inflight_.size();
}

bool Client::flush(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return inflight_.empty(); });
}

void Client::reader_loop() {
  std::string buf;
  char chunk[16384];
  while (!stopping_) {
    const std::size_t n = sock_.read_some(chunk, sizeof(chunk));
    if (n == 0) {
      connected_ = false;
      if (stopping_ || !options_.reconnect || !reconnect_with_backoff()) break;
      buf.clear();
      continue;
    }
    buf.append(chunk, n);
    try {
      while (auto decoded = try_decode(buf)) {
        buf.erase(0, decoded->second);
        Packet& pkt = decoded->first;
        if (auto* pub = std::get_if<Publish>(&pkt)) {
          if (pub->qos == 1) send_packet(Puback{pub->packet_id});
          std::vector<Handler> targets;
          {
            std::lock_guard lock(mu_);
            for (const auto& [f, h] : handlers_) {
              if (topic_matches(f, pub->topic)) targets.push_back(h);
            }
          }
          for (const auto& h : targets) {
            try {
              h(pub->topic, pub->payload);
            } catch (...) {
              // A failing subscriber must not take the connection down.
            }
          }
        } else if (auto* ack = std::get_if<Puback>(&pkt)) {
          std::lock_guard lock(mu_);
          inflight_.erase(ack->packet_id);
          cv_.notify_all();
        } else if (auto* sub = std::get_if<Suback>(&pkt)) {
          std::lock_guard lock(mu_);
          if (auto it = pending_subacks_.find(sub->packet_id); it != pending_subacks_.end()) {
            it->second = true;
          }
          cv_.notify_all();
        }
      }
    } catch (const Error&) {
      // Malformed stream from the broker: drop the connection and start over.
      sock_.shutdown();
      buf.clear();
    }
  }
}

bool Client::reconnect_with_backoff() {
  auto backoff = std::chrono::milliseconds(100);
  while (!stopping_) {
    try {
      open_session();
      return true;
    } catch (const Error&) {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, backoff, [&] { return stopping_.load(); });
      backoff = std::min(backoff * 2, options_.max_backoff);
    }
  }
  return false;
}

void Client::keepalive_loop() {
  const auto period = std::chrono::milliseconds(options_.keepalive_s * 500);
  std::unique_lock lock(mu_);
  while (!stopping_) {
    cv_.wait_for(lock, period, [&] { return stopping_.load(); });
    if (stopping_) break;
    lock.unlock();
    if (connected_) send_packet(Pingreq{});
    lock.lock();
  }
}

void Client::close() {
  if (stopping_.exchange(true)) return;
  if (connected_) send_packet(Disconnect{});
  {
    std::lock_guard lock(mu_);
    cv_.notify_all();
  }
  {
    std::lock_guard lock(write_mu_);
    sock_.shutdown();
  }
  if (reader_.joinable()) reader_.join();
  if (pinger_.joinable()) pinger_.join();
  connected_ = false;
}

}  // namespace aquafeed::mqtt
