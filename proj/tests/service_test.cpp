// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "aquafeed/codec.hpp"
#include "aquafeed/controller.hpp"
#include "aquafeed/error.hpp"
#include "aquafeed/sim_adapter.hpp"
#include "aquafeed/tanksim.hpp"
#include "test_util.hpp"

namespace aquafeed {
namespace {

constexpr std::int64_t kDay = 24LL * 3600 * 1000;

sim::ScenarioConfig quiet_scenario() {
  sim::ScenarioConfig s;
  s.detector = {0.0, 0.0};
  return s;
}

TEST(ControlService, ClosedLoopOverOneDay) {
  InProcessBus bus;
  ControlService svc({TankConfig{}}, bus);
  svc.start();
  sim::TankSim tank(quiet_scenario());
  sim::SimAdapter adapter(tank, bus);
  adapter.start();
  adapter.run_for(kDay, 60'000);

  const auto s = svc.snapshot("t1");
  ASSERT_EQ(s->decisions.size(), 3u);
  for (const auto& d : s->decisions) {
    EXPECT_EQ(d.trigger, FeedTrigger::Scheduled);
    ASSERT_TRUE(d.outcome);
    EXPECT_EQ(d.outcome->status, AckStatus::Completed);
    EXPECT_NEAR(*d.outcome->measured, d.commanded_grams(), 2.0);
    // 50 fish of 10 g at 5% a day, split over three windows.
    EXPECT_NEAR(d.commanded_grams(), 25.0 / 3, 1e-6);
  }
  EXPECT_TRUE(s->pending.empty());
  EXPECT_EQ(s->latest.size(), 3u);
  EXPECT_EQ(svc.store().query_range("t1", ReadingKind::Ph, 0, INT64_MAX).size(), 24u * 60 + 1);
  EXPECT_EQ(svc.rejected_messages(), 0u);
}

TEST(ControlService, RecoversFromLogAcrossRestart) {
  testing::TempDir dir;
  ServiceOptions opts;
  opts.log_dir = dir.path();
  opts.snapshot_every = 500;
  TankState before = TankState::initial("t1");
  {
    InProcessBus bus;
    ControlService svc({TankConfig{}}, bus, opts);
    svc.start();
    sim::TankSim tank(quiet_scenario());
    sim::SimAdapter adapter(tank, bus);
    adapter.start();
    adapter.run_for(kDay / 2, 60'000);
    before = *svc.snapshot("t1");
  }
  ASSERT_GT(before.last_seq, 500u);
  InProcessBus bus;
  ControlService again({TankConfig{}}, bus, opts);
  EXPECT_FALSE(again.recovery_corruption("t1"));
  EXPECT_EQ(*again.snapshot("t1"), before);
  const auto tail = again.events("t1", before.last_seq - 3, 10);
  ASSERT_EQ(tail.size(), 3u);
  EXPECT_EQ(tail.back().seq, before.last_seq);
}

TEST(ControlService, DamagedLogTailIsReportedAndCut) {
  testing::TempDir dir;
  ServiceOptions opts;
  opts.log_dir = dir.path();
  {
    InProcessBus bus;
    ControlService svc({TankConfig{}}, bus, opts);
    for (int i = 0; i < 5; ++i) {
      TelemetryReading r{"t1", "t1-ph", 1704067200000 + i * 1000, i, ReadingKind::Ph, 7.0, ReadingUnit::Ph};
      svc.handle_message(telemetry_topic("t1", ReadingKind::Ph), encode_payload(r));
    }
  }
  const auto path = dir / "t1.aqlg";
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
  InProcessBus bus;
  ControlService svc({TankConfig{}}, bus, opts);
  ASSERT_TRUE(svc.recovery_corruption("t1"));
  EXPECT_EQ(svc.recovery_corruption("t1")->last_good_seq, 4u);
  EXPECT_EQ(svc.snapshot("t1")->last_seq, 4u);
  TelemetryReading r{"t1", "t1-ph", 1704067300000, 10, ReadingKind::Ph, 7.1, ReadingUnit::Ph};
  svc.handle_message(telemetry_topic("t1", ReadingKind::Ph), encode_payload(r));
  EXPECT_FALSE(scan_event_log(path).corruption);
  EXPECT_EQ(scan_event_log(path).events.size(), 5u);
}

TEST(ControlService, DropsMalformedMessages) {
  InProcessBus bus;
  ControlService svc({TankConfig{}}, bus);
  svc.handle_message("aqua/t1/telemetry/ph", "not json");
  svc.handle_message("aqua/t1/telemetry/ph", R"({"tank_id":"t1"})");
  svc.handle_message("weird/topic", "{}");
  EXPECT_EQ(svc.rejected_messages(), 3u);
  // Another tank's traffic is ignored, not counted.
  TelemetryReading r{"t9", "t9-ph", 1, 0, ReadingKind::Ph, 7.0, ReadingUnit::Ph};
  svc.handle_message(telemetry_topic("t9", ReadingKind::Ph), encode_payload(r));
  EXPECT_EQ(svc.rejected_messages(), 3u);
  EXPECT_EQ(svc.snapshot("t1")->last_seq, 0u);
}

TEST(ControlService, DuplicateTelemetryIsIgnored) {
  InProcessBus bus;
  ControlService svc({TankConfig{}}, bus);
  TelemetryReading r{"t1", "t1-ph", 1704067200000, 3, ReadingKind::Ph, 7.0, ReadingUnit::Ph};
  svc.handle_message(telemetry_topic("t1", ReadingKind::Ph), encode_payload(r));
  svc.handle_message(telemetry_topic("t1", ReadingKind::Ph), encode_payload(r));
  EXPECT_EQ(svc.snapshot("t1")->last_seq, 1u);
}

TEST(ControlService, ListenersAndEventPaging) {
  InProcessBus bus;
  ControlService svc({TankConfig{}}, bus);
  std::vector<StreamMessage> seen;
  const int id = svc.add_listener([&](const StreamMessage& m) { seen.push_back(m); });
  for (int i = 0; i < 10; ++i) {
    TelemetryReading r{"t1", "t1-ph", 1704067200000 + i * 1000, i, ReadingKind::Ph, 7.0, ReadingUnit::Ph};
    svc.handle_message(telemetry_topic("t1", ReadingKind::Ph), encode_payload(r));
  }
  ASSERT_EQ(seen.size(), 10u);
  EXPECT_EQ(seen[0].tank_id, "t1");
  EXPECT_EQ(seen[0].type, "telemetry_observed");
  EXPECT_EQ(seen[9].seq, 10u);
  EXPECT_EQ(event_from_json(seen[4].json).seq, 5u);
  svc.remove_listener(id);
  TelemetryReading r{"t1", "t1-ph", 1704067300000, 50, ReadingKind::Ph, 7.0, ReadingUnit::Ph};
  svc.handle_message(telemetry_topic("t1", ReadingKind::Ph), encode_payload(r));
  EXPECT_EQ(seen.size(), 10u);

  const auto first = svc.events("t1", 0, 4);
  ASSERT_EQ(first.size(), 4u);
  EXPECT_EQ(first.front().seq, 1u);
  const auto next = svc.events("t1", first.back().seq, 100);
  ASSERT_EQ(next.size(), 7u);
  EXPECT_EQ(next.front().seq, 5u);
  EXPECT_TRUE(svc.events("t1", 11, 10).empty());
}

TEST(ControlService, ManualFeedPublishesCommand) {
  InProcessBus bus;
  std::vector<std::string> topics;
  bus.set_observer([&](const std::string& topic, const std::string&) { topics.push_back(topic); });
  ControlService svc({TankConfig{}}, bus);
  svc.start();
  sim::TankSim tank(quiet_scenario());
  sim::SimAdapter adapter(tank, bus);
  adapter.start();
  // Run to 01:00 so a frame pair has been seen but no window has opened.
  adapter.run_for(3600 * 1000, 60'000);
  topics.clear();
  const ManualFeedResult r = svc.manual_feed("t1", "op-1", 3.0);
  EXPECT_EQ(r.status, ManualFeedStatus::Issued);
  ASSERT_FALSE(topics.empty());
  EXPECT_EQ(topics[0], "aqua/t1/cmd/feed");
  adapter.advance(60'000);
  const FeedDecision* d = svc.snapshot("t1")->find_decision("op-1");
  ASSERT_NE(d, nullptr);
  ASSERT_TRUE(d->outcome);
  EXPECT_NEAR(*d->outcome->measured, 3.0, 0.05);
}

TEST(ControlService, ConstructionAndLookupErrors) {
  InProcessBus bus;
  EXPECT_THROW(ControlService({}, bus), Error);
  TankConfig a;
  a.tank_id = "a";
  EXPECT_THROW(ControlService({a, a}, bus), Error);
  ControlService svc({a}, bus);
  try {
    svc.snapshot("zz");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
  }
  EXPECT_THROW(svc.update_rules("a", {{ReadingKind::Ph, 9, 8, 0, AlertAction::Notify}}), Error);
}

}  // namespace
}  // namespace aquafeed
