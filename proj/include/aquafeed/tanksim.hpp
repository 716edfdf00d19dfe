// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic virtual tank: sensors, two cameras over a fish population,
// a load-cell metered feeder with two servo gates, and a pH dosing pump.
// The simulated clock is independent of wall time.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aquafeed/biometrics.hpp"
#include "aquafeed/detection.hpp"
#include "aquafeed/messages.hpp"

namespace aquafeed::sim {

inline constexpr std::int64_t kMsPerDay = 24LL * 3600 * 1000;

struct SensorModel {
  ReadingKind kind = ReadingKind::Ph;
  double baseline = 7.2;
  double drift_per_hour = 0.0;
  double noise_std = 0.0;
  double min = 0.0;
  double max = 14.0;
};

struct FeederConfig {
  double hopper_g = 5000.0;
  double dispense_rate_g_per_s = 5.0;
  double load_cell_noise_std_g = 0.0;
  double tick_s = 0.01;
  double tolerance_g = 2.0;
};

struct CameraView {
  double focal_px = 500.0;
  // Every fish is rendered on a plane at this distance from the camera.
  double depth_m = 0.5;
};

struct ScenarioConfig {
  std::string tank_id = "t1";
  std::uint64_t seed = 1;
  std::int64_t start_ms = 1704067200000;  // 2024-01-01T00:00:00Z
  int population = 50;
  double initial_weight_g = 10.0;
  // Initial weights drawn uniformly from initial_weight_g +/- spread.
  double initial_weight_spread_g = 0.0;
  BiometricCoefficients coefficients{};
  double feed_conversion_ratio = 1.5;
  std::int64_t telemetry_period_ms = 60'000;
  std::int64_t frame_period_ms = 15 * 60'000;
  // Camera B frames lag camera A by this much.
  std::int64_t camera_skew_ms = 0;
  std::array<SensorModel, 3> sensors{{
      {ReadingKind::Ph, 7.2, 0.0, 0.02, 0.0, 14.0},
      {ReadingKind::DissolvedOxygen, 6.5, 0.0, 0.05, 0.0, 20.0},
      {ReadingKind::Temperature, 28.0, 0.0, 0.1, -5.0, 50.0},
  }};
  std::array<CameraView, 2> cameras{{{500.0, 0.5}, {500.0, 0.6}}};
  StubNoiseModel detector{0.05, 0.5};
  FeederConfig feeder{};
  double ph_pump_rate_per_s = 0.01;

  void validate() const;
};

struct FishIndividual {
  int id = 0;
  double weight_g = 0.0;
  double length_cm = 0.0;
};

// Feed-conversion growth: a fish gains (feed eaten) / FCR grams. A day's feed
// is shared in proportion to body weight.
class GrowthModel {
 public:
  explicit GrowthModel(double feed_conversion_ratio = 1.5, BiometricCoefficients coeffs = {});

  void apply_day(std::vector<FishIndividual>& fish, double feed_consumed_g) const;
  double feed_conversion_ratio() const noexcept { return fcr_; }

 private:
  double fcr_;
  BiometricCoefficients coeffs_;
};

enum class GateState { Closed, Open };

struct FeederState {
  // Integer milligrams so hopper bookkeeping is exact.
  std::int64_t hopper_mg = 0;
  std::array<GateState, 2> gates{GateState::Closed, GateState::Closed};
  double load_cell_reading_g = 0.0;

  double hopper_g() const noexcept { return static_cast<double>(hopper_mg) / 1000.0; }
};

struct DispenseResult {
  bool completed = false;
  std::string detail;
  double measured_g = 0.0;       // what the load cell reported
  std::int64_t dispensed_mg = 0; // what actually left the hopper
  double duration_s = 0.0;
};

class Feeder {
 public:
  explicit Feeder(FeederConfig config);

  // Opens both gates and meters feed until the load cell reads >= target or
  // the hopper runs out.
  DispenseResult dispense(double grams_target, std::mt19937_64& rng);
  void refill(double grams);

  const FeederState& state() const noexcept { return state_; }
  const FeederConfig& config() const noexcept { return config_; }

 private:
  FeederConfig config_;
  FeederState state_;
};

// One outbound MQTT message.
struct Emission {
  std::string topic;
  std::string payload;
  bool operator==(const Emission&) const = default;
};

class TankSim {
 public:
  explicit TankSim(ScenarioConfig config);

  // Advances the clock by dt_ms and returns everything that became due, in
  // time order: day-boundary growth, telemetry, then camera frames.
  std::vector<Emission> step(std::int64_t dt_ms);

  AckMessage execute_feed(const std::string& command_id, double grams_target);
  AckMessage execute_ph_pump(const std::string& command_id, PumpDirection direction, double seconds);

  // Executes a decoded command at most once per command_id and returns the
  // acks to publish (accepted followed by the terminal ack). Redelivered
  // commands get the stored terminal ack again without re-actuation.
  std::vector<Emission> handle_command(const CommandMessage& cmd);

  void refill_hopper(double grams) { feeder_.refill(grams); }
  // Scenario disturbance: shifts the true pH (e.g. an acid spill).
  void disturb_ph(double delta) { ph_offset_ += delta; }

  std::int64_t now_ms() const noexcept { return now_ms_; }
  const ScenarioConfig& config() const noexcept { return config_; }
  const std::vector<FishIndividual>& fish() const noexcept { return fish_; }
  const FeederState& feeder() const noexcept { return feeder_.state(); }
  double ph_offset() const noexcept { return ph_offset_; }
  // Current noiseless value of a sensor.
  double true_value(ReadingKind kind) const;
  double mean_weight_g() const;
  std::int64_t total_dispensed_mg() const noexcept { return total_dispensed_mg_; }
  int days_elapsed() const noexcept { return days_elapsed_; }
  int last_truth_count() const noexcept { return last_truth_count_; }
  std::uint64_t actuations() const noexcept { return actuations_; }

 private:
  std::vector<TruthFish> render_view(const CameraView& view, std::mt19937_64& rng) const;
  void emit_telemetry(std::vector<Emission>& out);
  void emit_frames(std::vector<Emission>& out);

  ScenarioConfig config_;
  GrowthModel growth_;
  Feeder feeder_;
  std::vector<FishIndividual> fish_;

  std::mt19937_64 sensor_rng_;
  std::mt19937_64 placement_rng_;
  std::mt19937_64 load_cell_rng_;
  StubDetector detector_a_;
  StubDetector detector_b_;

  std::int64_t now_ms_;
  std::int64_t next_telemetry_ms_;
  std::int64_t next_frame_ms_;
  std::int64_t next_day_ms_;
  std::array<std::int64_t, 3> seq_{};
  double ph_offset_ = 0.0;
  std::int64_t feed_today_mg_ = 0;
  std::int64_t total_dispensed_mg_ = 0;
  int days_elapsed_ = 0;
  int last_truth_count_ = 0;
  std::uint64_t actuations_ = 0;
  std::map<std::string, AckMessage> executed_;
};

}  // namespace aquafeed::sim
