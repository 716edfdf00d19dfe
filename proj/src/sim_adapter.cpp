// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/sim_adapter.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "aquafeed/codec.hpp"
#include "aquafeed/error.hpp"
#include "json_util.hpp"

namespace aquafeed::sim {

namespace {

constexpr std::int64_t kMaxStepMs = 60'000;

}  // namespace

ScenarioControl parse_scenario_control(std::string_view text) {
  using namespace json_util;
  const json doc = parse_document(text);
  const std::string action = get_string(doc, "action", "");
  ScenarioControl c;
  if (action == "pause") {
    c.action = ScenarioControl::Action::Pause;
  } else if (action == "resume") {
    c.action = ScenarioControl::Action::Resume;
  } else if (action == "refill") {
    c.action = ScenarioControl::Action::Refill;
    c.value = get_double(doc, "grams", "");
    if (!(c.value > 0.0)) throw Error(ErrorKind::Validation, "grams", "must be > 0");
  } else if (action == "set_speed") {
    c.action = ScenarioControl::Action::SetSpeed;
    c.value = get_double(doc, "speed", "");
    if (!(c.value > 0.0)) throw Error(ErrorKind::Validation, "speed", "must be > 0");
  } else if (action == "disturb_ph") {
    c.action = ScenarioControl::Action::DisturbPh;
    c.value = get_double(doc, "delta", "");
  } else {
    throw Error(ErrorKind::Validation, "action", "unknown action '" + action + "'");
  }
  return c;
}

SimAdapter::SimAdapter(TankSim& sim, MessageBus& bus) : sim_(sim), bus_(bus) {}

void SimAdapter::start() {
  const std::string& tank = sim_.config().tank_id;
  auto handler = [this](const std::string& topic, const std::string& payload) {
    on_message(topic, payload);
  };
  bus_.subscribe("aqua/" + tank + "/cmd/+", handler);
  bus_.subscribe(sim_control_topic(tank), handler);
}

void SimAdapter::on_message(const std::string& topic, const std::string& payload) {
  try {
    const Topic t = parse_topic(topic);
    std::variant<CommandMessage, ScenarioControl> item;
    if (t.channel == Channel::SimControl) {
      item = parse_scenario_control(payload);
    } else {
      item = std::get<CommandMessage>(decode_payload(topic, payload));
    }
    std::lock_guard lock(mu_);
    inbox_.push_back(std::move(item));
  } catch (const std::exception&) {
    std::lock_guard lock(mu_);
    ++stats_.malformed;
  }
}

void SimAdapter::publish(const Emission& e) {
  if (log_ != nullptr) *log_ << sim_.now_ms() << '\t' << e.topic << '\t' << e.payload << '\n';
  bus_.publish(e.topic, e.payload, Qos::AtLeastOnce);
  std::lock_guard lock(mu_);
  ++stats_.published;
}

void SimAdapter::apply_control(const ScenarioControl& c) {
  switch (c.action) {
    case ScenarioControl::Action::Pause: paused_ = true; break;
    case ScenarioControl::Action::Resume: paused_ = false; break;
    case ScenarioControl::Action::Refill: sim_.refill_hopper(c.value); break;
    case ScenarioControl::Action::SetSpeed: speed_ = c.value; break;
    case ScenarioControl::Action::DisturbPh: sim_.disturb_ph(c.value); break;
  }
}

std::size_t SimAdapter::pump() {
  std::size_t ran = 0;
  for (;;) {
    std::variant<CommandMessage, ScenarioControl> item;
    {
      std::lock_guard lock(mu_);
      if (inbox_.empty()) break;
      item = std::move(inbox_.front());
      inbox_.pop_front();
    }
    ++ran;
    if (const auto* c = std::get_if<ScenarioControl>(&item)) {
      apply_control(*c);
      continue;
    }
    std::vector<Emission> acks;
    try {
      acks = sim_.handle_command(std::get<CommandMessage>(item));
    } catch (const Error&) {
      std::lock_guard lock(mu_);
      ++stats_.malformed;
      continue;
    }
    {
      std::lock_guard lock(mu_);
      ++stats_.commands_executed;
    }
    for (const auto& e : acks) publish(e);
  }
  return ran;
}

void SimAdapter::advance(std::int64_t dt_ms) {
  for (const auto& e : sim_.step(dt_ms)) {
    publish(e);
    pump();
  }
  pump();
}

void SimAdapter::run_for(std::int64_t duration_ms, std::int64_t step_ms) {
  if (step_ms <= 0) throw Error(ErrorKind::InvalidInput, "step_ms", "must be > 0");
  const std::int64_t end = sim_.now_ms() + duration_ms;
  pump();
  while (sim_.now_ms() < end) advance(std::min(step_ms, end - sim_.now_ms()));
}

void SimAdapter::run_realtime(double speed, std::int64_t duration_ms, const std::atomic<bool>& stop,
                              std::chrono::milliseconds grace) {
  if (!(speed > 0.0) || !std::isfinite(speed)) {
    throw Error(ErrorKind::InvalidInput, "speed", "must be finite and > 0");
  }
  speed_ = speed;
  using Clock = std::chrono::steady_clock;
  const std::int64_t end = duration_ms > 0 ? sim_.now_ms() + duration_ms : INT64_MAX;
  auto last = Clock::now();
  double carry_ms = 0.0;
  pump();
  while (!stop.load() && sim_.now_ms() < end) {
    const auto now = Clock::now();
    const double wall_ms = std::chrono::duration<double, std::milli>(now - last).count();
    last = now;
    if (!paused_) carry_ms += wall_ms * speed_.load();
    while (carry_ms >= 1.0 && sim_.now_ms() < end && !stop.load()) {
      const auto dt = static_cast<std::int64_t>(
          std::min<double>({carry_ms, static_cast<double>(kMaxStepMs), static_cast<double>(end - sim_.now_ms())}));
      advance(dt);
      carry_ms -= static_cast<double>(dt);
      if (paused_) {
        carry_ms = 0.0;
        break;
      }
    }
    pump();
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  const auto deadline = Clock::now() + grace;
  while (Clock::now() < deadline && !stop.load()) {
    pump();
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  pump();
}

AdapterStats SimAdapter::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace aquafeed::sim
