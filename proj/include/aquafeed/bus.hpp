// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aquafeed {

enum class Qos { AtMostOnce = 0, AtLeastOnce = 1 };

// MQTT-style filter match with '+' (one level) and '#' (remaining levels).
bool topic_matches(std::string_view filter, std::string_view topic);

// Publish/subscribe transport between the control service and the tank side.
class MessageBus {
 public:
  using Handler = std::function<void(const std::string& topic, const std::string& payload)>;

  virtual ~MessageBus() = default;
  virtual void publish(const std::string& topic, std::string payload, Qos qos) = 0;
  virtual void subscribe(const std::string& filter, Handler handler) = 0;
};

// Single-process bus with FIFO delivery. Publishing from inside a handler
// enqueues; the outermost publish call drains the queue, so handlers never
// re-enter each other and delivery order is deterministic.
class InProcessBus final : public MessageBus {
 public:
  void publish(const std::string& topic, std::string payload, Qos qos) override;
  void subscribe(const std::string& filter, Handler handler) override;

  // Optional tap that sees every message in delivery order.
  void set_observer(Handler observer);
  std::size_t delivered() const;

 private:
  void drain();

  mutable std::mutex mu_;
  std::vector<std::pair<std::string, Handler>> subs_;
  std::deque<std::pair<std::string, std::string>> queue_;
  Handler observer_;
  bool dispatching_ = false;
  std::size_t delivered_ = 0;
};

}  // namespace aquafeed
