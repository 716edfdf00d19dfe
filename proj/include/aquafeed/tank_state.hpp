// SPDX-License-Identifier: Apache-2.0
#pragma once

// Control-side tank state and the events that mutate it. All mutation goes
// through apply(), so replaying the event log reproduces the live state.

#include <climits>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aquafeed/biometrics.hpp"
#include "aquafeed/detection.hpp"
#include "aquafeed/messages.hpp"

namespace aquafeed {

enum class AlertAction { Notify, ActuatePh };

std::string_view to_string(AlertAction a);
std::optional<AlertAction> alert_action_from_string(std::string_view s);

// Raised when the value leaves [low, high]; cleared once it is back inside
// [low + hysteresis, high - hysteresis].
struct AlertRule {
  ReadingKind kind = ReadingKind::Ph;
  double low = 0.0;
  double high = 0.0;
  double hysteresis = 0.0;
  AlertAction action = AlertAction::Notify;

  void validate() const;
  bool operator==(const AlertRule&) const = default;
};

// pH [6.5, 8.5] with dosing, DO floor 4 mg/L, temperature [20, 34] C.
std::vector<AlertRule> default_alert_rules();

struct AlertState {
  bool active = false;
  std::int64_t since_ms = 0;
  double value = 0.0;
  std::string side;  // "low" or "high" while active

  bool operator==(const AlertState&) const = default;
};

enum class FeedTrigger { Scheduled, Manual };

std::string_view to_string(FeedTrigger t);

struct FeedDecision {
  std::int64_t decision_id = 0;
  FeedTrigger trigger = FeedTrigger::Scheduled;
  std::int64_t decided_ts_ms = 0;
  FusedObservation observation;
  RationPlan plan;
  // Share of the daily total dispensed by this feeding.
  double window_fraction = 1.0;
  CommandMessage command;
  std::optional<AckMessage> outcome;
  bool timed_out = false;
  bool capped = false;

  double commanded_grams() const { return std::get<FeedPayload>(command.payload).grams; }
  bool resolved() const noexcept { return outcome.has_value() || timed_out; }
  bool operator==(const FeedDecision&) const = default;
};

struct PendingCommand {
  CommandMessage command;
  bool accepted = false;
  std::optional<std::size_t> decision_index;

  bool operator==(const PendingCommand&) const = default;
};

struct ActuatorStates {
  std::optional<std::string> feeder_command;  // command in progress
  std::optional<std::string> ph_pump_command;
  double dispensed_total_g = 0.0;             // sum of measured grams from acks

  bool operator==(const ActuatorStates&) const = default;
};

struct ManualRequest {
  std::string request_id;
  std::optional<double> grams;
  std::int64_t requested_ts_ms = 0;

  bool operator==(const ManualRequest&) const = default;
};

struct TankState {
  std::string tank_id;
  std::map<ReadingKind, TelemetryReading> latest;
  std::optional<FusedObservation> last_observation;
  std::optional<RationPlan> last_plan;
  std::int64_t last_plan_ts_ms = 0;
  std::optional<AckMessage> last_feed_ack;
  ActuatorStates actuators;
  std::map<ReadingKind, AlertState> alerts;
  std::vector<AlertRule> rules;
  std::vector<FeedDecision> decisions;
  std::map<std::string, PendingCommand> pending;
  std::optional<ManualRequest> pending_manual;
  std::int64_t last_served_window_ms = INT64_MIN;
  std::int64_t last_ph_command_ts_ms = INT64_MIN;
  std::int64_t commands_issued = 0;
  std::int64_t no_fish_events = 0;
  std::int64_t degraded_observations = 0;
  std::int64_t rejected_fish = 0;
  std::uint64_t last_seq = 0;
  std::int64_t last_ts_ms = 0;

  static TankState initial(std::string tank_id, std::vector<AlertRule> rules = default_alert_rules());

  const FeedDecision* find_decision(std::string_view command_id) const;
  bool operator==(const TankState&) const = default;
};

// ---- events ----------------------------------------------------------------

struct TelemetryObserved {
  TelemetryReading reading;
  bool operator==(const TelemetryObserved&) const = default;
};

struct ObservationRecorded {
  FusedObservation observation;
  std::optional<RationPlan> plan;  // absent when no fish could be measured
  int rejected_fish = 0;
  bool no_fish = false;
  bool operator==(const ObservationRecorded&) const = default;
};

struct AlertChanged {
  ReadingKind kind = ReadingKind::Ph;
  bool active = false;
  double value = 0.0;
  std::string side;
  bool operator==(const AlertChanged&) const = default;
};

struct CommandIssued {
  CommandMessage command;
  std::optional<FeedDecision> decision;
  std::optional<std::int64_t> served_window_ms;
  bool operator==(const CommandIssued&) const = default;
};

struct AckReceived {
  AckMessage ack;
  bool operator==(const AckReceived&) const = default;
};

struct CommandTimedOut {
  std::string command_id;
  bool operator==(const CommandTimedOut&) const = default;
};

struct RulesUpdated {
  std::vector<AlertRule> rules;
  bool operator==(const RulesUpdated&) const = default;
};

struct ManualFeedRequested {
  ManualRequest request;
  bool operator==(const ManualFeedRequested&) const = default;
};

struct ManualFeedRejected {
  std::string request_id;
  std::string reason;
  bool operator==(const ManualFeedRejected&) const = default;
};

using EventBody = std::variant<TelemetryObserved, ObservationRecorded, AlertChanged, CommandIssued,
                               AckReceived, CommandTimedOut, RulesUpdated, ManualFeedRequested,
                               ManualFeedRejected>;

std::string_view event_type_name(const EventBody& body);

struct Event {
  std::uint64_t seq = 0;
  std::int64_t ts_ms = 0;
  EventBody body;
  bool operator==(const Event&) const = default;
};

// The only state transition function.
void apply(TankState& state, const Event& event);

// JSON forms used by the event log and the HTTP API.
std::string tank_state_to_json(const TankState& state);
TankState tank_state_from_json(std::string_view text);
std::string event_to_json(const Event& event);
Event event_from_json(std::string_view text);
std::string feed_decision_to_json(const FeedDecision& decision);
std::string alert_rules_to_json(const std::vector<AlertRule>& rules);
std::vector<AlertRule> alert_rules_from_json(std::string_view text);

}  // namespace aquafeed
