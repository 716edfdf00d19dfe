// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-tank decision engine and the multi-tank service that wires it to the
// message bus, the telemetry store and the event log.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "aquafeed/biometrics.hpp"
#include "aquafeed/bus.hpp"
#include "aquafeed/detection.hpp"
#include "aquafeed/event_log.hpp"
#include "aquafeed/messages.hpp"
#include "aquafeed/series_store.hpp"
#include "aquafeed/tank_state.hpp"

namespace aquafeed {

struct TankConfig {
  std::string tank_id = "t1";
  // Indexed by CameraId.
  std::array<CameraGeometry, 2> cameras{{
      {{500.0, kStandardImageSize, kStandardImageSize},
       DepthMap::uniform(kStandardImageSize, kStandardImageSize, 0.5f)},
      {{500.0, kStandardImageSize, kStandardImageSize},
       DepthMap::uniform(kStandardImageSize, kStandardImageSize, 0.6f)},
  }};
  LengthMethod length_method = LengthMethod::WorldEuclidean;
  BiometricCoefficients coefficients{};
  FeedingBandTable bands = FeedingBandTable::tilapia_default();

  // Feeding windows start at UTC midnight + offset + k * 24h / windows_per_day.
  int windows_per_day = 3;
  std::int64_t first_window_offset_ms = 6 * 3600 * 1000LL;
  // A window is only served by a frame pair arriving within this long after it opens.
  std::int64_t window_grace_ms = 3600 * 1000LL;
  // Per-feeding cap as a fraction of estimated biomass.
  double cap_fraction_of_biomass = 0.05;

  std::int64_t pairing_tolerance_ms = 2000;
  // A lone frame is processed single-camera after waiting this long.
  std::int64_t unpaired_timeout_ms = 60'000;
  std::int64_t ack_timeout_ms = 5 * 60'000;
  std::int64_t manual_plan_max_age_ms = 10 * 60'000;
  double ph_pump_seconds = 5.0;
  std::int64_t ph_cooldown_ms = 10 * 60'000;
  std::vector<AlertRule> rules = default_alert_rules();

  void validate() const;
};

struct ControllerOutput {
  std::vector<Event> events;
  std::vector<CommandMessage> commands;

  void append(ControllerOutput&& other);
};

enum class ManualFeedStatus { Issued, Pending, Duplicate, Rejected };

std::string_view to_string(ManualFeedStatus s);

struct ManualFeedResult {
  ManualFeedStatus status = ManualFeedStatus::Pending;
  std::optional<FeedDecision> decision;
  std::string reason;
  ControllerOutput output;
};

// Single-threaded state machine for one tank. Every state change is emitted
// as an Event and applied through apply(); callers persist the events before
// publishing the commands. Time is taken from message timestamps.
class TankController {
 public:
  explicit TankController(TankConfig config);
  TankController(TankConfig config, TankState recovered);

  ControllerOutput on_telemetry(const TelemetryReading& reading);
  ControllerOutput on_frame(const FrameDetections& frame);
  ControllerOutput on_ack(const AckMessage& ack);
  // Resolves timeouts and stale unpaired frames up to `now_ms`.
  ControllerOutput tick(std::int64_t now_ms);
  ManualFeedResult request_manual_feed(const std::string& command_id, std::optional<double> grams);
  ControllerOutput update_rules(std::vector<AlertRule> rules);

  const TankState& state() const noexcept { return state_; }
  const TankConfig& config() const noexcept { return config_; }
  std::int64_t now_ms() const noexcept { return clock_ms_; }

  // Opening time of the latest window at or before ts.
  std::int64_t window_start_at_or_before(std::int64_t ts_ms) const;

 private:
  void emit(ControllerOutput& out, std::int64_t ts_ms, EventBody body);
  void advance_clock(std::int64_t ts_ms, ControllerOutput& out);
  void check_timeouts(ControllerOutput& out);
  void flush_stale_frames(ControllerOutput& out);
  void process_single(const FrameDetections& frame, ControllerOutput& out);
  void process_pair(const FrameDetections& a, const FrameDetections& b, ControllerOutput& out);
  void process_observation(FusedObservation obs, int rejected, ControllerOutput& out);
  void evaluate_alerts(const TelemetryReading& reading, ControllerOutput& out);
  double cap_grams(const RationPlan& plan) const;
  FeedDecision make_decision(FeedTrigger trigger, const FusedObservation& obs,
                             const RationPlan& plan, double grams, double fraction, bool capped);
  std::string next_command_id(std::string_view kind) const;

  TankConfig config_;
  TankState state_;
  std::int64_t clock_ms_ = 0;
  std::array<std::optional<FrameDetections>, 2> buffered_;
};

struct ServiceOptions {
  // Empty: events are kept in memory only.
  std::filesystem::path log_dir;
  std::uint64_t snapshot_every = 5000;
  bool sync_log = false;
  // Events retained in memory per tank for the API.
  std::size_t recent_events = 10'000;
  SeriesStoreConfig store{};
};

// A change pushed to stream listeners: {"tank_id", "seq", "type", "event"}.
struct StreamMessage {
  std::string tank_id;
  std::uint64_t seq = 0;
  std::string type;
  std::string json;  // full event document
};

class ControlService {
 public:
  using Listener = std::function<void(const StreamMessage&)>;

  ControlService(std::vector<TankConfig> tanks, MessageBus& bus, ServiceOptions options = {});
  ~ControlService();
  ControlService(const ControlService&) = delete;
  ControlService& operator=(const ControlService&) = delete;

  // Subscribes to every tank's topics.
  void start();

  // Entry point for bus deliveries; malformed payloads are counted and dropped.
  void handle_message(const std::string& topic, const std::string& payload);

  std::vector<std::string> tank_ids() const;
  bool has_tank(std::string_view tank_id) const;
  std::shared_ptr<const TankState> snapshot(std::string_view tank_id) const;
  // Events with seq > after_seq, oldest first, from the in-memory window.
  std::vector<Event> events(std::string_view tank_id, std::uint64_t after_seq, std::size_t limit) const;
  ManualFeedResult manual_feed(std::string_view tank_id, const std::string& command_id,
                               std::optional<double> grams);
  void update_rules(std::string_view tank_id, std::vector<AlertRule> rules);
  // Forwards a scenario control document to the simulator.
  void publish_scenario(std::string_view tank_id, const std::string& json);
  // Checks timeouts against the tank's clock advanced by elapsed wall time.
  void tick(std::string_view tank_id, std::int64_t now_ms);

  int add_listener(Listener listener);
  void remove_listener(int id);

  SeriesStore& store() noexcept { return store_; }
  std::uint64_t rejected_messages() const;
  std::optional<LogCorruption> recovery_corruption(std::string_view tank_id) const;
  // Writes a snapshot record to every tank's log.
  void checkpoint();

 private:
  struct Tank;
  Tank& tank(std::string_view tank_id) const;
  void commit(Tank& t, ControllerOutput&& out);

  MessageBus& bus_;
  ServiceOptions options_;
  InMemorySeriesStore store_;
  std::map<std::string, std::unique_ptr<Tank>, std::less<>> tanks_;

  mutable std::mutex listeners_mu_;
  std::map<int, Listener> listeners_;
  int next_listener_ = 0;

  mutable std::mutex stats_mu_;
  std::uint64_t rejected_messages_ = 0;
};

}  // namespace aquafeed
