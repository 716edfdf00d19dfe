// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/bus.hpp"

namespace aquafeed {

bool topic_matches(std::string_view filter, std::string_view topic) {
  std::size_t f = 0;
  std::size_t t = 0;
  while (true) {
    const std::size_t f_end = std::min(filter.find('/', f), filter.size());
    const std::string_view level = filter.substr(f, f_end - f);
    if (level == "#") return true;
    if (t > topic.size()) return false;
    const std::size_t t_end = std::min(topic.find('/', t), topic.size());
    if (level != "+" && level != topic.substr(t, t_end - t)) return false;
    const bool filter_done = f_end == filter.size();
    const bool topic_done = t_end == topic.size();
    if (filter_done || topic_done) {
      if (filter_done && topic_done) return true;
      // "a/#" also matches "a".
      return topic_done && filter.substr(f_end) == "/#";
    }
    f = f_end + 1;
    t = t_end + 1;
  }
}

void InProcessBus::publish(const std::string& topic, std::string payload, Qos) {
  {
    std::lock_guard lock(mu_);
    queue_.emplace_back(topic, std::move(payload));
    if (dispatching_) return;
    dispatching_ = true;
  }
  drain();
}

void InProcessBus::subscribe(const std::string& filter, Handler handler) {
  std::lock_guard lock(mu_);
  subs_.emplace_back(filter, std::move(handler));
}

void InProcessBus::set_observer(Handler observer) {
  std::lock_guard lock(mu_);
  observer_ = std::move(observer);
}

std::size_t InProcessBus::delivered() const {
  std::lock_guard lock(mu_);
  return delivered_;
}

void InProcessBus::drain() {
  while (true) {
    std::pair<std::string, std::string> msg;
    std::vector<Handler> targets;
    Handler observer;
    {
      std::lock_guard lock(mu_);
      if (queue_.empty()) {
        dispatching_ = false;
        return;
      }
      msg = std::move(queue_.front());
      queue_.pop_front();
      for (const auto& [filter, h] : subs_) {
        if (topic_matches(filter, msg.first)) targets.push_back(h);
      }
      observer = observer_;
      ++delivered_;
    }
    try {
      if (observer) observer(msg.first, msg.second);
      for (const auto& h : targets) h(msg.first, msg.second);
    } catch (...) {
      std::lock_guard lock(mu_);
      dispatching_ = false;
      throw;
    }
  }
}

}  // namespace aquafeed
