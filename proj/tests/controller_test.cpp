// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "aquafeed/controller.hpp"
#include "aquafeed/error.hpp"
#include "test_util.hpp"

namespace aquafeed {
namespace {

// 2024-01-01T08:00:00Z, the timestamp of the fixture frames.
constexpr std::int64_t kFixtureTs = 1704096000000;
constexpr std::int64_t kMidnight = 1704067200000;
constexpr std::int64_t kHour = 3600 * 1000;
// Oracle total for the fixture pair, g/day.
constexpr double kFixtureTotal = 9.529;

TankConfig fixture_config(int windows_per_day = 1) {
  TankConfig cfg;
  cfg.cameras[0] = {{500.0, 416, 416}, DepthMap::uniform(416, 416, 0.25f)};
  cfg.cameras[1] = {{500.0, 416, 416}, DepthMap::uniform(416, 416, 0.375f)};
  cfg.windows_per_day = windows_per_day;
  // The fixture frames land exactly on the first window.
  if (windows_per_day == 1) cfg.first_window_offset_ms = 8 * kHour;
  return cfg;
}

FrameDetections frame_a(std::int64_t ts = kFixtureTs) {
  FrameDetections f = read_frame_detections(testing::fixture("detections_a.json"));
  f.frame_ts_ms = ts;
  return f;
}

FrameDetections frame_b(std::int64_t ts = kFixtureTs + 40) {
  FrameDetections f = read_frame_detections(testing::fixture("detections_b.json"));
  f.frame_ts_ms = ts;
  return f;
}

ControllerOutput feed_pair(TankController& c, std::int64_t ts) {
  ControllerOutput out = c.on_frame(frame_a(ts));
  out.append(c.on_frame(frame_b(ts + 40)));
  return out;
}

template <typename T>
std::vector<T> events_of(const ControllerOutput& out) {
  std::vector<T> v;
  for (const auto& e : out.events) {
    if (const auto* p = std::get_if<T>(&e.body)) v.push_back(*p);
  }
  return v;
}

TelemetryReading ph(std::int64_t ts, double v, std::int64_t seq = 0) {
  return {"t1", "t1-ph", ts, seq, ReadingKind::Ph, v, ReadingUnit::Ph};
}

TEST(Controller, WorkedExampleSingleWindow) {
  TankController c(fixture_config(1));
  const ControllerOutput out = feed_pair(c, kFixtureTs);
  ASSERT_EQ(out.commands.size(), 1u);
  const auto& cmd = out.commands[0];
  EXPECT_EQ(cmd.command_id, "t1-feed-1");
  EXPECT_NEAR(std::get<FeedPayload>(cmd.payload).grams, kFixtureTotal, kFixtureTotal * 1e-9);
  const auto obs = events_of<ObservationRecorded>(out);
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].observation.fused_count, 13);
  EXPECT_FALSE(obs[0].observation.degraded);
  ASSERT_EQ(c.state().decisions.size(), 1u);
  const FeedDecision& d = c.state().decisions[0];
  EXPECT_EQ(d.trigger, FeedTrigger::Scheduled);
  EXPECT_DOUBLE_EQ(d.window_fraction, 1.0);
  // 13 fish of 14.66 g at 5% is exactly the biomass cap, which must not clip.
  EXPECT_FALSE(d.capped);
  EXPECT_EQ(c.state().last_served_window_ms, kFixtureTs);
}

TEST(Controller, WindowsSplitTheDailyTotal) {
  TankController c(fixture_config(3));
  const ControllerOutput out = feed_pair(c, kMidnight + 6 * kHour + 30 * 60'000);
  ASSERT_EQ(out.commands.size(), 1u);
  EXPECT_NEAR(std::get<FeedPayload>(out.commands[0].payload).grams, kFixtureTotal / 3, 1e-9);
}

TEST(Controller, WindowServedOnceAndGraceHonoured) {
  TankController c(fixture_config(3));
  EXPECT_EQ(feed_pair(c, kMidnight + 6 * kHour).commands.size(), 1u);
  EXPECT_EQ(feed_pair(c, kMidnight + 6 * kHour + 10 * 60'000).commands.size(), 0u);
  // 14:00 window, frames 90 min late: past the one-hour grace.
  EXPECT_EQ(feed_pair(c, kMidnight + 15 * kHour + 30 * 60'000).commands.size(), 0u);
  // 22:00 window, on time.
  EXPECT_EQ(feed_pair(c, kMidnight + 22 * kHour + 5 * 60'000).commands.size(), 1u);
  EXPECT_EQ(c.state().decisions.size(), 2u);
}

TEST(Controller, ZeroFishIssuesNoCommand) {
  TankController c(fixture_config(1));
  FrameDetections a = read_frame_detections(testing::fixture("detections_empty_a.json"));
  FrameDetections b = read_frame_detections(testing::fixture("detections_empty_b.json"));
  ControllerOutput out = c.on_frame(a);
  out.append(c.on_frame(b));
  EXPECT_TRUE(out.commands.empty());
  const auto obs = events_of<ObservationRecorded>(out);
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_TRUE(obs[0].no_fish);
  EXPECT_FALSE(obs[0].plan);
  EXPECT_EQ(c.state().no_fish_events, 1);
}

TEST(Controller, ManualFeedWithFreshPlan) {
  TankController c(fixture_config(1));
  feed_pair(c, kFixtureTs);
  ManualFeedResult r = c.request_manual_feed("m1", std::nullopt);
  ASSERT_EQ(r.status, ManualFeedStatus::Issued);
  ASSERT_EQ(r.output.commands.size(), 1u);
  EXPECT_EQ(r.output.commands[0].command_id, "m1");
  EXPECT_NEAR(r.decision->commanded_grams(), kFixtureTotal, 1e-9);
  EXPECT_EQ(r.decision->trigger, FeedTrigger::Manual);

  ManualFeedResult again = c.request_manual_feed("m1", std::nullopt);
  EXPECT_EQ(again.status, ManualFeedStatus::Duplicate);
  EXPECT_TRUE(again.output.events.empty());
  EXPECT_EQ(again.decision->command.command_id, "m1");

  ManualFeedResult small = c.request_manual_feed("m2", 2.5);
  EXPECT_EQ(small.status, ManualFeedStatus::Issued);
  EXPECT_DOUBLE_EQ(small.decision->commanded_grams(), 2.5);

  ManualFeedResult big = c.request_manual_feed("m3", 100.0);
  EXPECT_EQ(big.status, ManualFeedStatus::Rejected);
  EXPECT_TRUE(big.output.commands.empty());
  EXPECT_EQ(events_of<ManualFeedRejected>(big.output).size(), 1u);
}

TEST(Controller, ManualFeedInputValidation) {
  TankController c(fixture_config(1));
  EXPECT_THROW(c.request_manual_feed("t1-feed-7", std::nullopt), Error);
  EXPECT_THROW(c.request_manual_feed("t1-ph-7", std::nullopt), Error);
  EXPECT_THROW(c.request_manual_feed("", std::nullopt), Error);
  EXPECT_THROW(c.request_manual_feed("a/b", std::nullopt), Error);
  EXPECT_THROW(c.request_manual_feed("m1", 0.0), Error);
  EXPECT_THROW(c.request_manual_feed("m1", -1.0), Error);
  EXPECT_THROW(c.request_manual_feed("m1", std::nan("")), Error);
  // Another tank's prefix is an ordinary id.
  EXPECT_NO_THROW(c.request_manual_feed("t2-feed-1", std::nullopt));
}

TEST(Controller, ManualFeedWaitsForFreshPair) {
  TankController c(fixture_config(3));
  ManualFeedResult r = c.request_manual_feed("m1", std::nullopt);
  EXPECT_EQ(r.status, ManualFeedStatus::Pending);
  EXPECT_TRUE(r.output.commands.empty());
  ASSERT_TRUE(c.state().pending_manual);
  EXPECT_EQ(c.request_manual_feed("m1", std::nullopt).status, ManualFeedStatus::Pending);
  try {
    c.request_manual_feed("m2", std::nullopt);
    FAIL() << "expected Conflict";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Conflict);
  }
  // Off-window pair: only the manual request is served.
  const ControllerOutput out = feed_pair(c, kMidnight + 9 * kHour);
  ASSERT_EQ(out.commands.size(), 1u);
  EXPECT_EQ(out.commands[0].command_id, "m1");
  EXPECT_NEAR(std::get<FeedPayload>(out.commands[0].payload).grams, kFixtureTotal, 1e-9);
  EXPECT_FALSE(c.state().pending_manual);
}

TEST(Controller, StalePlanDefersManualFeed) {
  TankController c(fixture_config(3));
  feed_pair(c, kMidnight + 9 * kHour);
  c.tick(kMidnight + 9 * kHour + 11 * 60'000);
  EXPECT_EQ(c.request_manual_feed("m1", std::nullopt).status, ManualFeedStatus::Pending);
}

TEST(Controller, PhLowActuatesPump) {
  TankController c(fixture_config(1));
  const ControllerOutput out = c.on_telemetry(ph(kFixtureTs, 6.0));
  const auto alerts = events_of<AlertChanged>(out);
  ASSERT_EQ(alerts.size(), 1u);
  EXPECT_TRUE(alerts[0].active);
  EXPECT_EQ(alerts[0].side, "low");
  ASSERT_EQ(out.commands.size(), 1u);
  EXPECT_EQ(out.commands[0].command_id, "t1-ph-1");
  const auto& p = std::get<PhPumpPayload>(out.commands[0].payload);
  EXPECT_EQ(p.direction, PumpDirection::Raise);
  EXPECT_DOUBLE_EQ(p.seconds, 5.0);

  TankController high(fixture_config(1));
  const ControllerOutput h = high.on_telemetry(ph(kFixtureTs, 9.0));
  ASSERT_EQ(h.commands.size(), 1u);
  EXPECT_EQ(std::get<PhPumpPayload>(h.commands[0].payload).direction, PumpDirection::Lower);
}

TEST(Controller, PhInBandDoesNothing) {
  TankController c(fixture_config(1));
  const ControllerOutput out = c.on_telemetry(ph(kFixtureTs, 7.0));
  EXPECT_EQ(out.events.size(), 1u);
  EXPECT_TRUE(out.commands.empty());
}

TEST(Controller, HysteresisSuppressesFlapping) {
  TankController c(fixture_config(1));
  int raised = 0;
  int cleared = 0;
  for (int i = 0; i < 20; ++i) {
    const ControllerOutput out = c.on_telemetry(ph(kFixtureTs + i * 1000, i % 2 == 0 ? 6.49 : 6.51, i));
    for (const auto& a : events_of<AlertChanged>(out)) (a.active ? raised : cleared)++;
  }
  EXPECT_EQ(raised, 1);
  EXPECT_EQ(cleared, 0);
  const ControllerOutput back = c.on_telemetry(ph(kFixtureTs + 60'000, 6.6, 99));
  ASSERT_EQ(events_of<AlertChanged>(back).size(), 1u);
  EXPECT_FALSE(events_of<AlertChanged>(back)[0].active);
}

TEST(Controller, PhPumpCooldown) {
  TankController c(fixture_config(1));
  ASSERT_EQ(c.on_telemetry(ph(kFixtureTs, 6.0, 0)).commands.size(), 1u);
  // In flight: no second command.
  EXPECT_TRUE(c.on_telemetry(ph(kFixtureTs + 1000, 6.0, 1)).commands.empty());
  c.on_ack({"t1-ph-1", AckStatus::Completed, "", std::nullopt});
  EXPECT_TRUE(c.on_telemetry(ph(kFixtureTs + 5 * 60'000, 6.1, 2)).commands.empty());
  const ControllerOutput later = c.on_telemetry(ph(kFixtureTs + 10 * 60'000, 6.1, 3));
  ASSERT_EQ(later.commands.size(), 1u);
  EXPECT_EQ(later.commands[0].command_id, "t1-ph-2");
}

TEST(Controller, AckLifecycle) {
  TankController c(fixture_config(1));
  feed_pair(c, kFixtureTs);
  ASSERT_EQ(c.state().pending.size(), 1u);
  EXPECT_EQ(c.on_ack({"t1-feed-1", AckStatus::Accepted, "", std::nullopt}).events.size(), 1u);
  EXPECT_TRUE(c.on_ack({"t1-feed-1", AckStatus::Accepted, "", std::nullopt}).events.empty());
  EXPECT_TRUE(c.on_ack({"nobody", AckStatus::Completed, "", 1.0}).events.empty());
  c.on_ack({"t1-feed-1", AckStatus::Completed, "", 9.53});
  EXPECT_TRUE(c.state().pending.empty());
  const FeedDecision* d = c.state().find_decision("t1-feed-1");
  ASSERT_NE(d, nullptr);
  ASSERT_TRUE(d->outcome);
  EXPECT_DOUBLE_EQ(*d->outcome->measured, 9.53);
  EXPECT_DOUBLE_EQ(c.state().actuators.dispensed_total_g, 9.53);
  // A late duplicate terminal ack is ignored.
  EXPECT_TRUE(c.on_ack({"t1-feed-1", AckStatus::Completed, "", 9.53}).events.empty());
}

TEST(Controller, AckTimeout) {
  TankController c(fixture_config(1));
  feed_pair(c, kFixtureTs);
  EXPECT_TRUE(c.tick(kFixtureTs + 5 * 60'000 - 1).events.empty());
  const ControllerOutput out = c.tick(kFixtureTs + 5 * 60'000 + 40);
  ASSERT_EQ(events_of<CommandTimedOut>(out).size(), 1u);
  const FeedDecision* d = c.state().find_decision("t1-feed-1");
  ASSERT_NE(d, nullptr);
  EXPECT_TRUE(d->timed_out);
  EXPECT_TRUE(c.state().pending.empty());
  EXPECT_FALSE(c.state().actuators.feeder_command);
}

TEST(Controller, UnpairedFrameFallsBackAfterTimeout) {
  TankController c(fixture_config(1));
  EXPECT_TRUE(c.on_frame(frame_a()).events.empty());
  EXPECT_TRUE(c.tick(kFixtureTs + 59'999).events.empty());
  const ControllerOutput out = c.tick(kFixtureTs + 60'000);
  const auto obs = events_of<ObservationRecorded>(out);
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_TRUE(obs[0].observation.degraded);
  EXPECT_EQ(obs[0].observation.fused_count, 12);
  EXPECT_EQ(c.state().degraded_observations, 1);
}

TEST(Controller, FramesTooFarApartAreNotPaired) {
  TankController c(fixture_config(1));
  c.on_frame(frame_a());
  const ControllerOutput out = c.on_frame(frame_b(kFixtureTs + 2001));
  const auto obs = events_of<ObservationRecorded>(out);
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_TRUE(obs[0].observation.degraded);
  EXPECT_EQ(obs[0].observation.count_a, 12);
}

TEST(Controller, RejectsForeignTelemetry) {
  TankController c(fixture_config(1));
  TelemetryReading r = ph(kFixtureTs, 7.0);
  r.tank_id = "t2";
  EXPECT_THROW(c.on_telemetry(r), Error);
}

TEST(Controller, RulesUpdateValidates) {
  TankController c(fixture_config(1));
  EXPECT_THROW(c.update_rules({{ReadingKind::Ph, 8.0, 7.0, 0.0, AlertAction::Notify}}), Error);
  const auto out = c.update_rules({{ReadingKind::Ph, 6.0, 9.0, 0.1, AlertAction::Notify}});
  EXPECT_EQ(out.events.size(), 1u);
  EXPECT_TRUE(c.on_telemetry(ph(kFixtureTs, 6.2)).commands.empty());
}

TEST(Controller, RecoveredStateMustMatchTank) {
  EXPECT_THROW(TankController(fixture_config(1), TankState::initial("t2")), Error);
}

// Random fish populations and window layouts: every feed command is positive
// and within the biomass cap, and the same inputs give the same outputs.
TEST(ControllerProperty, SafetyAndDeterminism) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    TankConfig cfg = fixture_config(n);
    cfg.first_window_offset_ms = n >= 4 ? 0 : 6 * kHour;
    cfg.cap_fraction_of_biomass = std::uniform_real_distribution<double>(0.005, 0.08)(rng);
    std::vector<FrameDetections> frames;
    std::int64_t ts = kMidnight + std::uniform_int_distribution<std::int64_t>(0, 86'400'000)(rng);
    for (int k = 0; k < 6; ++k) {
      for (CameraId cam : {CameraId::A, CameraId::B}) {
        FrameDetections f;
        f.camera_id = cam;
        f.frame_ts_ms = ts + (cam == CameraId::B ? 30 : 0);
        f.count = std::uniform_int_distribution<int>(0, 400)(rng);
        const int fish = std::uniform_int_distribution<int>(0, 5)(rng);
        for (int i = 0; i < fish; ++i) {
          FishKeypointSet s;
          s.fish_id = i + 1;
          const double x = std::uniform_real_distribution<double>(10, 150)(rng);
          const double y = std::uniform_real_distribution<double>(10, 400)(rng);
          const double len = std::uniform_real_distribution<double>(2, 250)(rng);
          s.keypoints = {PixelKeypoint{x, y, KeypointLabel::Mouth}, PixelKeypoint{x + len, y, KeypointLabel::Peduncle},
                         PixelKeypoint{x + len / 2, y + 5, KeypointLabel::Belly},
                         PixelKeypoint{x + len / 2, y - 5, KeypointLabel::Back}};
          f.fish.push_back(s);
        }
        frames.push_back(f);
      }
      ts += std::uniform_int_distribution<std::int64_t>(60'000, 8 * kHour)(rng);
    }
    TankController c1(cfg);
    TankController c2(cfg);
    for (const auto& f : frames) {
      const ControllerOutput o1 = c1.on_frame(f);
      const ControllerOutput o2 = c2.on_frame(f);
      ASSERT_EQ(o1.events, o2.events);
      for (const auto& cmd : o1.commands) {
        const FeedDecision* d = c1.state().find_decision(cmd.command_id);
        ASSERT_NE(d, nullptr);
        const double g = std::get<FeedPayload>(cmd.payload).grams;
        EXPECT_GT(g, 0.0);
        EXPECT_LE(g, cfg.cap_fraction_of_biomass * d->plan.estimated_biomass_g() * (1 + 1e-9));
      }
    }
    EXPECT_EQ(c1.state(), c2.state());
  }
}

}  // namespace
}  // namespace aquafeed
