// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/controller.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "aquafeed/codec.hpp"
#include "aquafeed/error.hpp"

namespace aquafeed {

namespace {

constexpr std::int64_t kMsPerDay = 24LL * 3600 * 1000;
// Relative slack when comparing a command against the biomass cap, so a
// ration that equals the cap is not flagged by rounding.
constexpr double kCapTolerance = 1e-9;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::size_t cam_index(CameraId id) { return id == CameraId::A ? 0 : 1; }

}  // namespace

void TankConfig::validate() const {
  if (!valid_topic_segment(tank_id)) {
    throw Error(ErrorKind::Validation, "tank_id", "not a valid topic segment");
  }
  coefficients.validate();
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const auto& c = cameras[i];
    c.intrinsics.validate();
    if (c.depth.width() != c.intrinsics.image_width || c.depth.height() != c.intrinsics.image_height) {
      throw Error(ErrorKind::Validation, std::string("cameras.") + (i == 0 ? "A" : "B"),
                  "depth map size differs from the image size");
    }
  }
  if (windows_per_day < 1 || windows_per_day > 48) {
    throw Error(ErrorKind::Validation, "windows_per_day", "must be in [1, 48]");
  }
  if (first_window_offset_ms < 0 || first_window_offset_ms >= kMsPerDay) {
    throw Error(ErrorKind::Validation, "first_window_offset_ms", "must be in [0, 24h)");
  }
  if (window_grace_ms < 0) throw Error(ErrorKind::Validation, "window_grace_ms", "must be >= 0");
  if (!(cap_fraction_of_biomass > 0.0) || !std::isfinite(cap_fraction_of_biomass)) {
    throw Error(ErrorKind::Validation, "cap_fraction_of_biomass", "must be finite and > 0");
  }
  if (pairing_tolerance_ms < 0) throw Error(ErrorKind::Validation, "pairing_tolerance_ms", "must be >= 0");
  if (unpaired_timeout_ms < 0) throw Error(ErrorKind::Validation, "unpaired_timeout_ms", "must be >= 0");
  if (ack_timeout_ms <= 0) throw Error(ErrorKind::Validation, "ack_timeout_ms", "must be > 0");
  if (manual_plan_max_age_ms < 0) {
    throw Error(ErrorKind::Validation, "manual_plan_max_age_ms", "must be >= 0");
  }
  if (!(ph_pump_seconds > 0.0) || !std::isfinite(ph_pump_seconds)) {
    throw Error(ErrorKind::Validation, "ph_pump_seconds", "must be finite and > 0");
  }
  if (ph_cooldown_ms < 0) throw Error(ErrorKind::Validation, "ph_cooldown_ms", "must be >= 0");
  std::set<ReadingKind> seen;
  for (const auto& r : rules) {
    r.validate();
    if (!seen.insert(r.kind).second) {
      throw Error(ErrorKind::Validation, "rules", "more than one rule for " + std::string(to_string(r.kind)));
    }
  }
}

void ControllerOutput::append(ControllerOutput&& other) {
  events.insert(events.end(), std::make_move_iterator(other.events.begin()),
                std::make_move_iterator(other.events.end()));
  commands.insert(commands.end(), std::make_move_iterator(other.commands.begin()),
                  std::make_move_iterator(other.commands.end()));
}

std::string_view to_string(ManualFeedStatus s) {
  switch (s) {
    case ManualFeedStatus::Issued: return "issued";
    case ManualFeedStatus::Pending: return "pending";
    case ManualFeedStatus::Duplicate: return "duplicate";
    case ManualFeedStatus::Rejected: return "rejected";
  }
  return "unknown";
}

// ---- TankController ---------------------------------------------------------

TankController::TankController(TankConfig config)
    : TankController(config, TankState::initial(config.tank_id, config.rules)) {}

TankController::TankController(TankConfig config, TankState recovered)
    : config_(std::move(config)), state_(std::move(recovered)) {
  config_.validate();
  if (state_.tank_id != config_.tank_id) {
    throw Error(ErrorKind::InvalidInput, "tank_id",
                "recovered state belongs to '" + state_.tank_id + "'");
  }
  clock_ms_ = state_.last_ts_ms;
}

void TankController::emit(ControllerOutput& out, std::int64_t ts_ms, EventBody body) {
  Event e{state_.last_seq + 1, ts_ms, std::move(body)};
  apply(state_, e);
  out.events.push_back(std::move(e));
}

void TankController::advance_clock(std::int64_t ts_ms, ControllerOutput& out) {
  clock_ms_ = std::max(clock_ms_, ts_ms);
  check_timeouts(out);
  flush_stale_frames(out);
}

void TankController::check_timeouts(ControllerOutput& out) {
  std::vector<std::string> expired;
  for (const auto& [id, p] : state_.pending) {
    if (p.command.issued_ts_ms + config_.ack_timeout_ms <= clock_ms_) expired.push_back(id);
  }
  for (auto& id : expired) emit(out, clock_ms_, CommandTimedOut{std::move(id)});
}

void TankController::flush_stale_frames(ControllerOutput& out) {
  for (auto& slot : buffered_) {
    if (slot && slot->frame_ts_ms + config_.unpaired_timeout_ms <= clock_ms_) {
      FrameDetections f = std::move(*slot);
      slot.reset();
      process_single(f, out);
    }
  }
}

std::int64_t TankController::window_start_at_or_before(std::int64_t ts_ms) const {
  const std::int64_t period = kMsPerDay / config_.windows_per_day;
  const std::int64_t k = floor_div(ts_ms - config_.first_window_offset_ms, period);
  return config_.first_window_offset_ms + k * period;
}

std::string TankController::next_command_id(std::string_view kind) const {
  return config_.tank_id + "-" + std::string(kind) + "-" + std::to_string(state_.commands_issued + 1);
}

double TankController::cap_grams(const RationPlan& plan) const {
  return config_.cap_fraction_of_biomass * plan.estimated_biomass_g();
}

FeedDecision TankController::make_decision(FeedTrigger trigger, const FusedObservation& obs,
                                           const RationPlan& plan, double grams, double fraction,
                                           bool capped) {
  FeedDecision d;
  d.decision_id = static_cast<std::int64_t>(state_.decisions.size()) + 1;
  d.trigger = trigger;
  d.decided_ts_ms = clock_ms_;
  d.observation = obs;
  d.plan = plan;
  d.window_fraction = fraction;
  d.capped = capped;
  d.command.tank_id = config_.tank_id;
  d.command.payload = FeedPayload{grams};
  d.command.issued_ts_ms = clock_ms_;
  return d;
}

ControllerOutput TankController::on_telemetry(const TelemetryReading& reading) {
  reading.validate();
  if (reading.tank_id != config_.tank_id) {
    throw Error(ErrorKind::InvalidInput, "tank_id", "reading for another tank");
  }
  ControllerOutput out;
  advance_clock(reading.ts_ms, out);
  emit(out, clock_ms_, TelemetryObserved{reading});
  evaluate_alerts(reading, out);
  return out;
}

void TankController::evaluate_alerts(const TelemetryReading& reading, ControllerOutput& out) {
  const auto rule_it = std::find_if(state_.rules.begin(), state_.rules.end(),
                                    [&](const AlertRule& r) { return r.kind == reading.kind; });
  if (rule_it == state_.rules.end()) return;
  const AlertRule rule = *rule_it;
  const double v = reading.value;
  const auto cur_it = state_.alerts.find(rule.kind);
  const AlertState cur = cur_it == state_.alerts.end() ? AlertState{} : cur_it->second;

  if (!cur.active) {
    if (v < rule.low) emit(out, clock_ms_, AlertChanged{rule.kind, true, v, "low"});
    else if (v > rule.high) emit(out, clock_ms_, AlertChanged{rule.kind, true, v, "high"});
  } else if (v >= rule.low + rule.hysteresis && v <= rule.high - rule.hysteresis) {
    emit(out, clock_ms_, AlertChanged{rule.kind, false, v, ""});
  } else if (cur.side == "low" && v > rule.high) {
    emit(out, clock_ms_, AlertChanged{rule.kind, true, v, "high"});
  } else if (cur.side == "high" && v < rule.low) {
    emit(out, clock_ms_, AlertChanged{rule.kind, true, v, "low"});
  }

  if (rule.action != AlertAction::ActuatePh) return;
  const AlertState& now = state_.alerts[rule.kind];
  if (!now.active || state_.actuators.ph_pump_command) return;
  if (state_.last_ph_command_ts_ms != INT64_MIN &&
      clock_ms_ - state_.last_ph_command_ts_ms < config_.ph_cooldown_ms) {
    return;
  }
  CommandMessage cmd;
  cmd.tank_id = config_.tank_id;
  cmd.command_id = next_command_id("ph");
  cmd.payload = PhPumpPayload{now.side == "low" ? PumpDirection::Raise : PumpDirection::Lower,
                              config_.ph_pump_seconds};
  cmd.issued_ts_ms = clock_ms_;
  emit(out, clock_ms_, CommandIssued{cmd, std::nullopt, std::nullopt});
  out.commands.push_back(std::move(cmd));
}

ControllerOutput TankController::on_frame(const FrameDetections& frame) {
  frame.validate();
  ControllerOutput out;
  advance_clock(frame.frame_ts_ms, out);
  const std::size_t idx = cam_index(frame.camera_id);
  auto& other = buffered_[1 - idx];
  if (other) {
    if (std::llabs(other->frame_ts_ms - frame.frame_ts_ms) <= config_.pairing_tolerance_ms) {
      const FrameDetections partner = std::move(*other);
      other.reset();
      if (idx == 0) process_pair(frame, partner, out);
      else process_pair(partner, frame, out);
      return out;
    }
    const FrameDetections lone = std::move(*other);
    other.reset();
    process_single(lone, out);
  }
  if (buffered_[idx]) {
    const FrameDetections superseded = std::move(*buffered_[idx]);
    buffered_[idx].reset();
    process_single(superseded, out);
  }
  buffered_[idx] = frame;
  return out;
}

void TankController::process_pair(const FrameDetections& a, const FrameDetections& b,
                                  ControllerOutput& out) {
  const FrameMeasurement ma = measure_frame(a, config_.cameras[0], config_.length_method);
  const FrameMeasurement mb = measure_frame(b, config_.cameras[1], config_.length_method);
  FusedObservation obs = fuse_dual_camera(a, b, config_.pairing_tolerance_ms, ma.lengths, mb.lengths);
  process_observation(std::move(obs), static_cast<int>(ma.rejected.size() + mb.rejected.size()), out);
}

void TankController::process_single(const FrameDetections& frame, ControllerOutput& out) {
  const FrameMeasurement m =
      measure_frame(frame, config_.cameras[cam_index(frame.camera_id)], config_.length_method);
  process_observation(single_camera_observation(frame, m.lengths),
                      static_cast<int>(m.rejected.size()), out);
}

void TankController::process_observation(FusedObservation obs, int rejected, ControllerOutput& out) {
  const bool no_fish = obs.fused_count == 0;
  std::optional<RationPlan> plan;
  if (!no_fish && !obs.lengths_cm.empty()) {
    std::vector<WeightEstimate> weights;
    weights.reserve(obs.lengths_cm.size());
    for (const auto& l : obs.lengths_cm) weights.push_back(weight_from_length(l, config_.coefficients));
    plan = build_ration_plan(weights, obs.fused_count, config_.bands);
  }
  emit(out, clock_ms_, ObservationRecorded{obs, plan, rejected, no_fish});
  if (!plan) return;

  if (state_.pending_manual) {
    const ManualRequest req = *state_.pending_manual;
    const double grams = req.grams.value_or(plan->total_grams_per_day);
    const double cap = cap_grams(*plan);
    if (grams > cap * (1.0 + kCapTolerance)) {
      emit(out, clock_ms_, ManualFeedRejected{req.request_id, "exceeds per-feeding cap"});
    } else {
      FeedDecision d = make_decision(FeedTrigger::Manual, obs, *plan, grams,
                                     grams / plan->total_grams_per_day, false);
      d.command.command_id = req.request_id;
      CommandMessage cmd = d.command;
      emit(out, clock_ms_, CommandIssued{cmd, std::move(d), std::nullopt});
      out.commands.push_back(std::move(cmd));
    }
  }

  const std::int64_t window = window_start_at_or_before(obs.frame_ts_ms);
  if (window <= state_.last_served_window_ms || obs.frame_ts_ms - window > config_.window_grace_ms) {
    return;
  }
  const double fraction = 1.0 / config_.windows_per_day;
  double grams = plan->total_grams_per_day * fraction;
  const double cap = cap_grams(*plan);
  bool capped = false;
  if (grams > cap * (1.0 + kCapTolerance)) {
    grams = cap;
    capped = true;
  }
  if (!(grams > 0.0)) return;
  FeedDecision d = make_decision(FeedTrigger::Scheduled, obs, *plan, grams, fraction, capped);
  d.command.command_id = next_command_id("feed");
  CommandMessage cmd = d.command;
  emit(out, clock_ms_, CommandIssued{cmd, std::move(d), window});
  out.commands.push_back(std::move(cmd));
}

ControllerOutput TankController::on_ack(const AckMessage& ack) {
  ack.validate();
  ControllerOutput out;
  const auto it = state_.pending.find(ack.command_id);
  if (it == state_.pending.end()) return out;  // unknown, late or already resolved
  if (!ack.terminal() && it->second.accepted) return out;
  emit(out, clock_ms_, AckReceived{ack});
  return out;
}

ControllerOutput TankController::tick(std::int64_t now_ms) {
  ControllerOutput out;
  advance_clock(now_ms, out);
  return out;
}

ManualFeedResult TankController::request_manual_feed(const std::string& command_id,
                                                     std::optional<double> grams) {
  if (command_id.empty() || !valid_topic_segment(command_id)) {
    throw Error(ErrorKind::InvalidInput, "command_id", "must be a non-empty topic-safe string");
  }
  for (std::string_view reserved : {"-feed-", "-ph-"}) {
    if (command_id.rfind(config_.tank_id + std::string(reserved), 0) == 0) {
      throw Error(ErrorKind::InvalidInput, "command_id", "prefix is reserved for scheduled commands");
    }
  }
  if (grams && (!std::isfinite(*grams) || *grams <= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "grams", "must be finite and > 0");
  }

  ManualFeedResult r;
  if (const FeedDecision* d = state_.find_decision(command_id)) {
    r.status = ManualFeedStatus::Duplicate;
    r.decision = *d;
    return r;
  }
  if (state_.pending_manual) {
    if (state_.pending_manual->request_id == command_id) {
      r.status = ManualFeedStatus::Pending;
      r.reason = "awaiting a fresh frame pair";
      return r;
    }
    throw Error(ErrorKind::Conflict, "command_id",
                "manual feed '" + state_.pending_manual->request_id + "' is still pending");
  }

  const bool fresh = state_.last_plan && state_.last_observation &&
                     state_.last_observation->frame_ts_ms == state_.last_plan_ts_ms &&
                     clock_ms_ - state_.last_plan_ts_ms <= config_.manual_plan_max_age_ms;
  if (!fresh) {
    emit(r.output, clock_ms_, ManualFeedRequested{ManualRequest{command_id, grams, clock_ms_}});
    r.status = ManualFeedStatus::Pending;
    r.reason = "awaiting a fresh frame pair";
    return r;
  }

  const RationPlan& plan = *state_.last_plan;
  const double g = grams.value_or(plan.total_grams_per_day);
  if (g > cap_grams(plan) * (1.0 + kCapTolerance)) {
    emit(r.output, clock_ms_, ManualFeedRejected{command_id, "exceeds per-feeding cap"});
    r.status = ManualFeedStatus::Rejected;
    r.reason = "exceeds per-feeding cap";
    return r;
  }
  FeedDecision d = make_decision(FeedTrigger::Manual, *state_.last_observation, plan, g,
                                 g / plan.total_grams_per_day, false);
  d.command.command_id = command_id;
  CommandMessage cmd = d.command;
  emit(r.output, clock_ms_, CommandIssued{cmd, d, std::nullopt});
  r.output.commands.push_back(std::move(cmd));
  r.status = ManualFeedStatus::Issued;
  r.decision = std::move(d);
  return r;
}

ControllerOutput TankController::update_rules(std::vector<AlertRule> rules) {
  TankConfig probe = config_;
  probe.rules = rules;
  probe.validate();
  ControllerOutput out;
  emit(out, clock_ms_, RulesUpdated{std::move(rules)});
  return out;
}

// ---- ControlService ---------------------------------------------------------

struct ControlService::Tank {
  explicit Tank(TankController c) : ctl(std::move(c)) {}

  std::mutex mu;  // one decision loop per tank
  TankController ctl;
  std::unique_ptr<EventLog> log;
  std::optional<LogCorruption> corruption;

  mutable std::mutex view_mu;
  std::shared_ptr<const TankState> snap;
  std::deque<Event> recent;
};

ControlService::ControlService(std::vector<TankConfig> tanks, MessageBus& bus, ServiceOptions options)
    : bus_(bus), options_(std::move(options)), store_(options_.store) {
  if (tanks.empty()) throw Error(ErrorKind::InvalidInput, "tanks", "at least one tank is required");
  for (auto& cfg : tanks) {
    cfg.validate();
    const std::string id = cfg.tank_id;
    if (tanks_.count(id) != 0) throw Error(ErrorKind::InvalidInput, "tanks", "duplicate tank " + id);
    TankState initial = TankState::initial(id, cfg.rules);
    if (options_.log_dir.empty()) {
      tanks_.emplace(id, std::make_unique<Tank>(TankController(std::move(cfg), std::move(initial))));
      continue;
    }
    const auto path = options_.log_dir / (id + ".aqlg");
    const LogScan scan = scan_event_log(path);
    RecoveryReport rec = replay_scan(scan, std::move(initial));
    auto t = std::make_unique<Tank>(TankController(std::move(cfg), std::move(rec.state)));
    t->corruption = rec.corruption;
    const std::size_t keep = std::min(scan.events.size(), options_.recent_events);
    t->recent.assign(scan.events.end() - static_cast<std::ptrdiff_t>(keep), scan.events.end());
    std::optional<std::uint64_t> cut;
    if (rec.corruption) cut = rec.valid_bytes;
    t->log = std::make_unique<EventLog>(path, cut, options_.sync_log);
    tanks_.emplace(id, std::move(t));
  }
}

ControlService::~ControlService() = default;

void ControlService::start() {
  for (const auto& [id, t] : tanks_) {
    for (const char* channel : {"telemetry", "frames", "ack"}) {
      bus_.subscribe("aqua/" + id + "/" + channel + "/+",
                     [this](const std::string& topic, const std::string& payload) {
                       handle_message(topic, payload);
                     });
    }
  }
}

ControlService::Tank& ControlService::tank(std::string_view tank_id) const {
  const auto it = tanks_.find(tank_id);
  if (it == tanks_.end()) throw Error(ErrorKind::NotFound, "tank_id", "unknown tank '" + std::string(tank_id) + "'");
  return *it->second;
}

bool ControlService::has_tank(std::string_view tank_id) const { return tanks_.find(tank_id) != tanks_.end(); }

std::vector<std::string> ControlService::tank_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, t] : tanks_) ids.push_back(id);
  return ids;
}

void ControlService::commit(Tank& t, ControllerOutput&& out) {
  std::vector<StreamMessage> stream;
  {
    std::lock_guard view(t.view_mu);
    for (const auto& e : out.events) {
      t.recent.push_back(e);
      if (t.recent.size() > options_.recent_events) t.recent.pop_front();
    }
  }
  if (t.log) {
    for (const auto& e : out.events) t.log->append(e);
    if (t.log->records_since_snapshot() >= options_.snapshot_every) t.log->append_snapshot(t.ctl.state());
  }
  bool listening;
  {
    std::lock_guard lock(listeners_mu_);
    listening = !listeners_.empty();
  }
  if (listening) {
    for (const auto& e : out.events) {
      stream.push_back({t.ctl.config().tank_id, e.seq, std::string(event_type_name(e.body)), event_to_json(e)});
    }
    std::lock_guard lock(listeners_mu_);
    for (const auto& msg : stream) {
      for (const auto& [id, l] : listeners_) l(msg);
    }
  }
}

void ControlService::handle_message(const std::string& topic, const std::string& payload) {
  try {
    const Topic parsed = parse_topic(topic);
    if (!has_tank(parsed.tank_id)) return;
    if (parsed.channel != Channel::Telemetry && parsed.channel != Channel::Frames &&
        parsed.channel != Channel::Ack) {
      return;
    }
    const Message msg = decode_payload(topic, payload);
    Tank& t = tank(parsed.tank_id);
    std::vector<CommandMessage> commands;
    {
      std::lock_guard lock(t.mu);
      ControllerOutput out;
      if (const auto* r = std::get_if<TelemetryReading>(&msg)) {
        if (store_.ingest(*r) != IngestResult::Stored) return;
        out = t.ctl.on_telemetry(*r);
      } else if (const auto* f = std::get_if<FrameDetections>(&msg)) {
        out = t.ctl.on_frame(*f);
      } else if (const auto* a = std::get_if<AckMessage>(&msg)) {
        out = t.ctl.on_ack(*a);
      }
      commands = out.commands;
      commit(t, std::move(out));
    }
    for (const auto& c : commands) bus_.publish(command_topic(c.tank_id, c.kind()), encode_payload(c), Qos::AtLeastOnce);
  } catch (const Error&) {
    std::lock_guard lock(stats_mu_);
    ++rejected_messages_;
  }
}

std::shared_ptr<const TankState> ControlService::snapshot(std::string_view tank_id) const {
  Tank& t = tank(tank_id);
  std::lock_guard lock(t.mu);
  std::lock_guard view(t.view_mu);
  if (!t.snap || t.snap->last_seq != t.ctl.state().last_seq) {
    t.snap = std::make_shared<const TankState>(t.ctl.state());
  }
  return t.snap;
}

std::vector<Event> ControlService::events(std::string_view tank_id, std::uint64_t after_seq,
                                          std::size_t limit) const {
  Tank& t = tank(tank_id);
  std::lock_guard view(t.view_mu);
  std::vector<Event> out;
  auto it = std::upper_bound(t.recent.begin(), t.recent.end(), after_seq,
                             [](std::uint64_t s, const Event& e) { return s < e.seq; });
  for (; it != t.recent.end() && out.size() < limit; ++it) out.push_back(*it);
  return out;
}

ManualFeedResult ControlService::manual_feed(std::string_view tank_id, const std::string& command_id,
                                             std::optional<double> grams) {
  Tank& t = tank(tank_id);
  ManualFeedResult r;
  {
    std::lock_guard lock(t.mu);
    r = t.ctl.request_manual_feed(command_id, grams);
    commit(t, ControllerOutput{r.output.events, {}});
  }
  for (const auto& c : r.output.commands) {
    bus_.publish(command_topic(c.tank_id, c.kind()), encode_payload(c), Qos::AtLeastOnce);
  }
  return r;
}

void ControlService::update_rules(std::string_view tank_id, std::vector<AlertRule> rules) {
  Tank& t = tank(tank_id);
  std::lock_guard lock(t.mu);
  commit(t, t.ctl.update_rules(std::move(rules)));
}

void ControlService::tick(std::string_view tank_id, std::int64_t now_ms) {
  Tank& t = tank(tank_id);
  std::vector<CommandMessage> commands;
  {
    std::lock_guard lock(t.mu);
    ControllerOutput out = t.ctl.tick(now_ms);
    commands = out.commands;
    commit(t, std::move(out));
  }
  for (const auto& c : commands) bus_.publish(command_topic(c.tank_id, c.kind()), encode_payload(c), Qos::AtLeastOnce);
}

void ControlService::publish_scenario(std::string_view tank_id, const std::string& json) {
  tank(tank_id);
  bus_.publish(sim_control_topic(tank_id), json, Qos::AtLeastOnce);
}

int ControlService::add_listener(Listener listener) {
  std::lock_guard lock(listeners_mu_);
  const int id = ++next_listener_;
  listeners_.emplace(id, std::move(listener));
  return id;
}

void ControlService::remove_listener(int id) {
  std::lock_guard lock(listeners_mu_);
  listeners_.erase(id);
}

std::uint64_t ControlService::rejected_messages() const {
  std::lock_guard lock(stats_mu_);
  return rejected_messages_;
}

std::optional<LogCorruption> ControlService::recovery_corruption(std::string_view tank_id) const {
  return tank(tank_id).corruption;
}

void ControlService::checkpoint() {
  for (const auto& [id, t] : tanks_) {
    std::lock_guard lock(t->mu);
    if (t->log) t->log->append_snapshot(t->ctl.state());
  }
}

}  // namespace aquafeed
