// SPDX-License-Identifier: Apache-2.0
#pragma once

// Connects a TankSim to a MessageBus: publishes its emissions, executes the
// commands it receives and applies scenario control messages.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <mutex>
#include <ostream>
#include <string>
#include <variant>

#include "aquafeed/bus.hpp"
#include "aquafeed/tanksim.hpp"

namespace aquafeed::sim {

// Scenario control document on aqua/{tank}/sim/control:
//   {"action": "pause" | "resume"}
//   {"action": "refill", "grams": g}
//   {"action": "set_speed", "speed": s}
//   {"action": "disturb_ph", "delta": d}
struct ScenarioControl {
  enum class Action { Pause, Resume, Refill, SetSpeed, DisturbPh };
  Action action = Action::Pause;
  double value = 0.0;
};

ScenarioControl parse_scenario_control(std::string_view json);

struct AdapterStats {
  std::uint64_t published = 0;
  std::uint64_t commands_executed = 0;
  std::uint64_t malformed = 0;
};

class SimAdapter {
 public:
  SimAdapter(TankSim& sim, MessageBus& bus);

  // Subscribes to the tank's command and scenario-control topics.
  void start();

  // Steps the simulator, publishes what became due, then runs queued commands.
  void advance(std::int64_t dt_ms);
  // Executes queued commands and control messages; returns how many ran.
  std::size_t pump();

  // Drives the simulator as fast as possible in steps of step_ms.
  void run_for(std::int64_t duration_ms, std::int64_t step_ms);

  // Drives the simulator against the wall clock: sim time advances at
  // `speed` times real time. Stops after duration_ms of sim time (0 = no
  // limit) or when `stop` is set. Late commands are drained for `grace`
  // after the end.
  void run_realtime(double speed, std::int64_t duration_ms, const std::atomic<bool>& stop,
                    std::chrono::milliseconds grace = std::chrono::milliseconds(500));

  // Every published message is also written here as "ts_ms\ttopic\tpayload".
  void set_emission_log(std::ostream* out) { log_ = out; }

  bool paused() const noexcept { return paused_.load(); }
  double speed() const noexcept { return speed_.load(); }
  AdapterStats stats() const;

 private:
  void on_message(const std::string& topic, const std::string& payload);
  void publish(const Emission& e);
  void apply_control(const ScenarioControl& c);

  TankSim& sim_;
  MessageBus& bus_;
  std::ostream* log_ = nullptr;

  mutable std::mutex mu_;
  std::deque<std::variant<CommandMessage, ScenarioControl>> inbox_;
  AdapterStats stats_;
  std::atomic<bool> paused_{false};
  std::atomic<double> speed_{1.0};
};

}  // namespace aquafeed::sim
