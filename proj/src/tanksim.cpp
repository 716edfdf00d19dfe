// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/tanksim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aquafeed/codec.hpp"
#include "aquafeed/error.hpp"

namespace aquafeed::sim {

void ScenarioConfig::validate() const {
  if (!valid_topic_segment(tank_id)) throw Error(ErrorKind::InvalidInput, "tank_id", "invalid tank id");
  if (population < 0) throw Error(ErrorKind::InvalidInput, "population", "must be >= 0");
  if (!(initial_weight_g > 0.0)) throw Error(ErrorKind::InvalidInput, "initial_weight_g", "must be > 0");
  if (!(initial_weight_spread_g >= 0.0 && initial_weight_spread_g < initial_weight_g)) {
    throw Error(ErrorKind::InvalidInput, "initial_weight_spread_g", "must be in [0, initial_weight_g)");
  }
  coefficients.validate();
  if (!(feed_conversion_ratio > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "feed_conversion_ratio", "must be > 0");
  }
  if (telemetry_period_ms <= 0) throw Error(ErrorKind::InvalidInput, "telemetry_period_ms", "must be > 0");
  if (frame_period_ms <= 0) throw Error(ErrorKind::InvalidInput, "frame_period_ms", "must be > 0");
  if (start_ms <= 0) throw Error(ErrorKind::InvalidInput, "start_ms", "must be > 0");
  for (const auto& s : sensors) {
    if (!(s.min < s.max) || !(s.noise_std >= 0.0)) {
      throw Error(ErrorKind::InvalidInput, "sensors." + std::string(to_string(s.kind)),
                  "need min < max and noise_std >= 0");
    }
  }
  for (const auto& c : cameras) {
    if (!(c.focal_px > 0.0 && c.depth_m > 0.0)) {
      throw Error(ErrorKind::InvalidInput, "cameras", "focal_px and depth_m must be > 0");
    }
  }
  detector.validate();
  if (!(feeder.hopper_g >= 0.0 && feeder.dispense_rate_g_per_s > 0.0 && feeder.tick_s > 0.0 &&
        feeder.load_cell_noise_std_g >= 0.0 && feeder.tolerance_g >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "feeder", "invalid feeder parameters");
  }
  if (!(ph_pump_rate_per_s >= 0.0)) throw Error(ErrorKind::InvalidInput, "ph_pump_rate_per_s", "must be >= 0");
}

// ---- growth ----------------------------------------------------------------

GrowthModel::GrowthModel(double feed_conversion_ratio, BiometricCoefficients coeffs)
    : fcr_(feed_conversion_ratio), coeffs_(coeffs) {
  if (!(fcr_ > 0.0)) throw Error(ErrorKind::InvalidInput, "feed_conversion_ratio", "must be > 0");
}

void GrowthModel::apply_day(std::vector<FishIndividual>& fish, double feed_consumed_g) const {
  if (!(feed_consumed_g >= 0.0)) throw Error(ErrorKind::InvalidInput, "feed_consumed_g", "must be >= 0");
  if (fish.empty() || feed_consumed_g == 0.0) return;
  double biomass = 0.0;
  for (const auto& f : fish) biomass += f.weight_g;
  for (auto& f : fish) {
    f.weight_g += feed_consumed_g * (f.weight_g / biomass) / fcr_;
    f.length_cm = length_from_weight(WeightEstimate{f.weight_g}, coeffs_).length_cm;
  }
}

// ---- feeder ----------------------------------------------------------------

Feeder::Feeder(FeederConfig config) : config_(config) {
  state_.hopper_mg = std::llround(config_.hopper_g * 1000.0);
}

void Feeder::refill(double grams) {
  if (!(grams > 0.0)) throw Error(ErrorKind::InvalidInput, "grams", "must be > 0");
  state_.hopper_mg += std::llround(grams * 1000.0);
}

DispenseResult Feeder::dispense(double grams_target, std::mt19937_64& rng) {
  if (!(std::isfinite(grams_target) && grams_target > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "grams", "feed target must be > 0");
  }
  const std::int64_t per_tick_mg =
      std::max<std::int64_t>(1, std::llround(config_.dispense_rate_g_per_s * config_.tick_s * 1000.0));
  // Generous bound so a noisy load cell cannot keep the gates open forever.
  const auto max_ticks = static_cast<std::int64_t>(
      std::ceil(4.0 * grams_target / (config_.dispense_rate_g_per_s * config_.tick_s))) + 100;
  std::normal_distribution<double> noise(0.0, config_.load_cell_noise_std_g > 0 ? config_.load_cell_noise_std_g : 1.0);

  DispenseResult r;
  state_.load_cell_reading_g = 0.0;  // tare
  state_.gates = {GateState::Open, GateState::Open};
  std::int64_t ticks = 0;
  while (true) {
    if (state_.hopper_mg == 0) {
      r.detail = "hopper-empty";
      break;
    }
    if (ticks >= max_ticks) {
      r.detail = "load-cell-timeout";
      break;
    }
    const std::int64_t amount = std::min(per_tick_mg, state_.hopper_mg);
    state_.hopper_mg -= amount;
    r.dispensed_mg += amount;
    ++ticks;
    state_.load_cell_reading_g = static_cast<double>(r.dispensed_mg) / 1000.0;
    if (config_.load_cell_noise_std_g > 0.0) state_.load_cell_reading_g += noise(rng);
    if (state_.load_cell_reading_g >= grams_target) {
      r.completed = true;
      r.detail = "dispensed";
      break;
    }
  }
  state_.gates = {GateState::Closed, GateState::Closed};
  r.measured_g = std::max(0.0, state_.load_cell_reading_g);
  r.duration_s = static_cast<double>(ticks) * config_.tick_s;
  return r;
}

// ---- tank ------------------------------------------------------------------

TankSim::TankSim(ScenarioConfig config)
    : config_((config.validate(), std::move(config))),
      growth_(config_.feed_conversion_ratio, config_.coefficients),
      feeder_(config_.feeder),
      sensor_rng_(config_.seed ^ 0x5e5e5e5e5e5e5e5eULL),
      placement_rng_(config_.seed ^ 0x9a9a9a9a9a9a9a9aULL),
      load_cell_rng_(config_.seed ^ 0x1c1c1c1c1c1c1c1cULL),
      detector_a_(config_.detector, config_.seed ^ 0xa0a0a0a0a0a0a0a0ULL),
      detector_b_(config_.detector, config_.seed ^ 0xb0b0b0b0b0b0b0b0ULL),
      now_ms_(config_.start_ms),
      next_telemetry_ms_(config_.start_ms),
      next_frame_ms_(config_.start_ms),
      next_day_ms_(config_.start_ms + kMsPerDay) {
  std::mt19937_64 init_rng(config_.seed);
  std::uniform_real_distribution<double> spread(-config_.initial_weight_spread_g,
                                                config_.initial_weight_spread_g);
  fish_.reserve(static_cast<std::size_t>(config_.population));
  for (int i = 0; i < config_.population; ++i) {
    FishIndividual f;
    f.id = i;
    f.weight_g = config_.initial_weight_g +
                 (config_.initial_weight_spread_g > 0.0 ? spread(init_rng) : 0.0);
    f.length_cm = length_from_weight(WeightEstimate{f.weight_g}, config_.coefficients).length_cm;
    fish_.push_back(f);
  }
}

double TankSim::true_value(ReadingKind kind) const {
  const auto& s = config_.sensors[static_cast<std::size_t>(kind)];
  const double hours = static_cast<double>(now_ms_ - config_.start_ms) / 3.6e6;
  double v = s.baseline + s.drift_per_hour * hours;
  if (kind == ReadingKind::Ph) v += ph_offset_;
  return std::clamp(v, s.min, s.max);
}

double TankSim::mean_weight_g() const {
  if (fish_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& f : fish_) sum += f.weight_g;
  return sum / static_cast<double>(fish_.size());
}

std::vector<Emission> TankSim::step(std::int64_t dt_ms) {
  if (dt_ms <= 0) throw Error(ErrorKind::InvalidInput, "dt", "must be > 0");
  const std::int64_t end = now_ms_ + dt_ms;
  std::vector<Emission> out;
  while (true) {
    const std::int64_t due = std::min({next_day_ms_, next_telemetry_ms_, next_frame_ms_});
    if (due > end) break;
    now_ms_ = due;
    if (next_day_ms_ == due) {
      growth_.apply_day(fish_, static_cast<double>(feed_today_mg_) / 1000.0);
      feed_today_mg_ = 0;
      ++days_elapsed_;
      next_day_ms_ += kMsPerDay;
    }
    if (next_telemetry_ms_ == due) {
      emit_telemetry(out);
      next_telemetry_ms_ += config_.telemetry_period_ms;
    }
    if (next_frame_ms_ == due) {
      emit_frames(out);
      next_frame_ms_ += config_.frame_period_ms;
    }
  }
  now_ms_ = end;
  return out;
}

void TankSim::emit_telemetry(std::vector<Emission>& out) {
  for (const auto& s : config_.sensors) {
    const auto idx = static_cast<std::size_t>(s.kind);
    double v = true_value(s.kind);
    if (s.noise_std > 0.0) {
      std::normal_distribution<double> noise(0.0, s.noise_std);
      v = std::clamp(v + noise(sensor_rng_), s.min, s.max);
    }
    TelemetryReading r;
    r.tank_id = config_.tank_id;
    r.device_id = config_.tank_id + "-" + std::string(to_string(s.kind));
    r.ts_ms = now_ms_;
    r.seq = seq_[idx]++;
    r.kind = s.kind;
    r.value = v;
    r.unit = unit_for(s.kind);
    out.push_back({telemetry_topic(config_.tank_id, s.kind), encode_payload(r)});
  }
}

std::vector<TruthFish> TankSim::render_view(const CameraView& view, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double size = kStandardImageSize;
  std::vector<TruthFish> truth;
  truth.reserve(fish_.size());
  for (const auto& f : fish_) {
    const double length_px = f.length_cm / 100.0 * view.focal_px / view.depth_m;
    const double theta = angle(rng);
    const double cx_u = unit(rng);
    const double cy_u = unit(rng);
    const double half = length_px / 2.0;
    // Fish too large for the frame are clipped out of view.
    if (length_px >= size - 2.0) continue;
    const double margin = half + 0.5;
    const double cx = margin + cx_u * (size - 2.0 * margin);
    const double cy = margin + cy_u * (size - 2.0 * margin);
    const double dx = half * std::cos(theta);
    const double dy = half * std::sin(theta);
    // Belly and back sit on the perpendicular at ~30% of the half-length.
    const double gx = -0.3 * dy;
    const double gy = 0.3 * dx;
    TruthFish t;
    t.fish_id = f.id;
    t.keypoints = {PixelKeypoint{cx + dx, cy + dy, KeypointLabel::Mouth},
                   PixelKeypoint{cx - dx, cy - dy, KeypointLabel::Peduncle},
                   PixelKeypoint{cx + gx, cy + gy, KeypointLabel::Belly},
                   PixelKeypoint{cx - gx, cy - gy, KeypointLabel::Back}};
    truth.push_back(t);
  }
  return truth;
}

void TankSim::emit_frames(std::vector<Emission>& out) {
  // Orthogonal cameras get independent placements.
  const auto truth_a = render_view(config_.cameras[0], placement_rng_);
  const auto truth_b = render_view(config_.cameras[1], placement_rng_);
  last_truth_count_ = static_cast<int>(fish_.size());
  const FrameDetections a = detector_a_.detect(truth_a, CameraId::A, now_ms_);
  const FrameDetections b = detector_b_.detect(truth_b, CameraId::B, now_ms_ + config_.camera_skew_ms);
  out.push_back({frames_topic(config_.tank_id, CameraId::A), encode_payload(a)});
  out.push_back({frames_topic(config_.tank_id, CameraId::B), encode_payload(b)});
}

AckMessage TankSim::execute_feed(const std::string& command_id, double grams_target) {
  if (!(std::isfinite(grams_target) && grams_target > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "grams", "feed target must be > 0");
  }
  const DispenseResult r = feeder_.dispense(grams_target, load_cell_rng_);
  ++actuations_;
  feed_today_mg_ += r.dispensed_mg;
  total_dispensed_mg_ += r.dispensed_mg;
  AckMessage ack;
  ack.command_id = command_id;
  ack.status = r.completed ? AckStatus::Completed : AckStatus::Failed;
  ack.detail = r.detail;
  ack.measured = r.measured_g;
  return ack;
}

AckMessage TankSim::execute_ph_pump(const std::string& command_id, PumpDirection direction,
                                    double seconds) {
  if (!(std::isfinite(seconds) && seconds > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "seconds", "must be > 0");
  }
  ++actuations_;
  const auto& s = config_.sensors[static_cast<std::size_t>(ReadingKind::Ph)];
  const double shift = config_.ph_pump_rate_per_s * seconds;
  const double before = true_value(ReadingKind::Ph);
  const double target = std::clamp(before + (direction == PumpDirection::Raise ? shift : -shift),
                                    s.min, s.max);
  ph_offset_ += target - before;
  return AckMessage{command_id, AckStatus::Completed, "ph-adjusted", std::nullopt};
}

std::vector<Emission> TankSim::handle_command(const CommandMessage& cmd) {
  std::vector<Emission> out;
  if (cmd.tank_id != config_.tank_id) return out;
  auto publish_ack = [&](const AckMessage& ack) {
    out.push_back({ack_topic(config_.tank_id, ack.command_id), encode_payload(ack)});
  };
  if (auto it = executed_.find(cmd.command_id); it != executed_.end()) {
    publish_ack(it->second);
    return out;
  }
  publish_ack(AckMessage{cmd.command_id, AckStatus::Accepted, "", std::nullopt});
  AckMessage terminal;
  if (const auto* feed = std::get_if<FeedPayload>(&cmd.payload)) {
    terminal = execute_feed(cmd.command_id, feed->grams);
  } else {
    const auto& pump = std::get<PhPumpPayload>(cmd.payload);
    terminal = execute_ph_pump(cmd.command_id, pump.direction, pump.seconds);
  }
  executed_[cmd.command_id] = terminal;
  publish_ack(terminal);
  return out;
}

}  // namespace aquafeed::sim
