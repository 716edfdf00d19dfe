// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "aquafeed/error.hpp"
#include "aquafeed/tank_state.hpp"
#include "json.hpp"

namespace aquafeed {
namespace {

FeedDecision sample_decision() {
  FeedDecision d;
  d.decision_id = 1;
  d.decided_ts_ms = 1704088800000;
  d.observation = {1704088800000, 13, {{10.0000452, LengthMethod::WorldEuclidean}}, 12, 13, false};
  d.plan = {{{14.66, 2, 5.0, 0.733}}, 0.733, 13, 9.529, false};
  d.window_fraction = 1.0 / 3.0;
  d.command = {"t1", "t1-feed-1", FeedPayload{3.1763333333333335}, 1704088800000};
  return d;
}

std::vector<Event> sample_events() {
  std::vector<Event> ev;
  std::uint64_t seq = 0;
  auto add = [&](std::int64_t ts, EventBody b) { ev.push_back({++seq, ts, std::move(b)}); };
  add(1, TelemetryObserved{{"t1", "t1-ph", 1, 0, ReadingKind::Ph, 6.0, ReadingUnit::Ph}});
  add(1, AlertChanged{ReadingKind::Ph, true, 6.0, "low"});
  add(1, CommandIssued{{"t1", "t1-ph-1", PhPumpPayload{PumpDirection::Raise, 5.0}, 1}, std::nullopt, std::nullopt});
  add(2, AckReceived{{"t1-ph-1", AckStatus::Completed, "ph-adjusted", std::nullopt}});
  const FeedDecision d = sample_decision();
  add(3, ObservationRecorded{d.observation, d.plan, 1, false});
  add(3, CommandIssued{d.command, d, 1704088800000 - 3});
  add(4, AckReceived{{"t1-feed-1", AckStatus::Accepted, "", std::nullopt}});
  add(5, AckReceived{{"t1-feed-1", AckStatus::Completed, "dispensed", 3.2}});
  add(6, ManualFeedRequested{{"m1", 2.5, 6}});
  add(7, ManualFeedRejected{"m1", "exceeds per-feeding cap"});
  add(8, RulesUpdated{{{ReadingKind::Ph, 6.0, 9.0, 0.0, AlertAction::Notify}}});
  add(9, CommandTimedOut{"nope"});
  add(10, ObservationRecorded{{10, 0, {}, 0, std::nullopt, true}, std::nullopt, 0, true});
  return ev;
}

TEST(Rules, Validation) {
  EXPECT_NO_THROW(AlertRule({ReadingKind::Ph, 6.5, 8.5, 0.1, AlertAction::ActuatePh}).validate());
  EXPECT_THROW(AlertRule({ReadingKind::Ph, 8.5, 6.5, 0.1, AlertAction::Notify}).validate(), Error);
  EXPECT_THROW(AlertRule({ReadingKind::Ph, 6.5, 8.5, -0.1, AlertAction::Notify}).validate(), Error);
  EXPECT_THROW(AlertRule({ReadingKind::Ph, 6.5, 8.5, 1.0, AlertAction::Notify}).validate(), Error);
  EXPECT_THROW(AlertRule({ReadingKind::Temperature, 20, 30, 0.1, AlertAction::ActuatePh}).validate(), Error);
}

TEST(Rules, JsonRoundTripAndPaths) {
  const auto rules = default_alert_rules();
  EXPECT_EQ(alert_rules_from_json(alert_rules_to_json(rules)), rules);
  EXPECT_EQ(alert_rules_from_json(R"({"rules": )" + alert_rules_to_json(rules) + "}"), rules);
  try {
    alert_rules_from_json(R"([{"kind":"ph","low":7,"high":6,"hysteresis":0,"action":"notify"}])");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
    EXPECT_EQ(e.field(), "rules[0].high");
  }
  EXPECT_THROW(alert_rules_from_json(R"([{"kind":"salinity","low":1,"high":2,"hysteresis":0,"action":"notify"}])"),
               Error);
  EXPECT_THROW(alert_rules_from_json("{"), Error);
}

TEST(Events, JsonRoundTrip) {
  for (const auto& e : sample_events()) {
    const std::string text = event_to_json(e);
    EXPECT_EQ(event_from_json(text), e) << text;
    EXPECT_EQ(nlohmann::json::parse(text)["type"], std::string(event_type_name(e.body)));
  }
  EXPECT_THROW(event_from_json(R"({"seq":1,"ts_ms":1,"type":"mystery","body":{}})"), Error);
  EXPECT_THROW(event_from_json("[]"), Error);
}

TEST(Apply, SampleTrace) {
  TankState s = TankState::initial("t1");
  for (const auto& e : sample_events()) apply(s, e);
  EXPECT_EQ(s.last_seq, 13u);
  EXPECT_EQ(s.last_ts_ms, 10);
  EXPECT_EQ(s.latest.at(ReadingKind::Ph).value, 6.0);
  // The pH alert survives the rule change because pH is still covered.
  EXPECT_TRUE(s.alerts.at(ReadingKind::Ph).active);
  ASSERT_EQ(s.decisions.size(), 1u);
  ASSERT_TRUE(s.decisions[0].outcome);
  EXPECT_EQ(s.decisions[0].outcome->measured, 3.2);
  EXPECT_TRUE(s.pending.empty());
  EXPECT_FALSE(s.pending_manual);
  EXPECT_EQ(s.actuators.dispensed_total_g, 3.2);
  EXPECT_FALSE(s.actuators.feeder_command);
  EXPECT_EQ(s.last_served_window_ms, 1704088800000 - 3);
  EXPECT_EQ(s.no_fish_events, 1);
  EXPECT_EQ(s.degraded_observations, 1);
  EXPECT_EQ(s.rejected_fish, 1);
  EXPECT_EQ(s.commands_issued, 2);
  EXPECT_EQ(s.rules.size(), 1u);
  EXPECT_EQ(s.find_decision("t1-feed-1"), &s.decisions[0]);
}

TEST(Apply, StateJsonRoundTrip) {
  TankState s = TankState::initial("t1");
  const std::string empty = tank_state_to_json(s);
  EXPECT_EQ(tank_state_from_json(empty), s);
  auto events = sample_events();
  events.pop_back();
  events.erase(events.begin() + 7);  // leave the feed command pending
  for (const auto& e : events) apply(s, e);
  EXPECT_FALSE(s.pending.empty());
  EXPECT_EQ(tank_state_from_json(tank_state_to_json(s)), s);
  EXPECT_THROW(tank_state_from_json(R"({"tank_id": 5})"), Error);
}

TEST(Apply, LatestKeepsNewestReading) {
  TankState s = TankState::initial("t1");
  apply(s, {1, 5, TelemetryObserved{{"t1", "d", 5, 1, ReadingKind::Ph, 7.0, ReadingUnit::Ph}}});
  apply(s, {2, 5, TelemetryObserved{{"t1", "d", 3, 0, ReadingKind::Ph, 6.0, ReadingUnit::Ph}}});
  EXPECT_EQ(s.latest.at(ReadingKind::Ph).value, 7.0);
}

}  // namespace
}  // namespace aquafeed
