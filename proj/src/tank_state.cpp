// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/tank_state.hpp"

#include <algorithm>
#include <cmath>

#include "aquafeed/error.hpp"
#include "json.hpp"

namespace aquafeed {

namespace {

using J = nlohmann::ordered_json;

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  throw Error(ErrorKind::Parse, field, msg);
}

template <typename E>
E parse_enum(const J& v, std::optional<E> (*from)(std::string_view), const char* field) {
  if (!v.is_string()) bad(field, "expected a string");
  const auto e = from(v.get<std::string>());
  if (!e) bad(field, "unknown value '" + v.get<std::string>() + "'");
  return *e;
}

std::optional<FeedTrigger> feed_trigger_from_string(std::string_view s) {
  if (s == "scheduled") return FeedTrigger::Scheduled;
  if (s == "manual") return FeedTrigger::Manual;
  return std::nullopt;
}

template <typename T>
J opt(const std::optional<T>& v) {
  return v ? J(*v) : J(nullptr);
}

template <typename T>
std::optional<T> opt_get(const J& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->template get<T>();
}

// ---- leaf types ------------------------------------------------------------

J to_j(const LengthEstimate& l) {
  return J{{"length_cm", l.length_cm}, {"method", to_string(l.method)}};
}

LengthEstimate length_from_j(const J& j) {
  return {j.at("length_cm").get<double>(),
          parse_enum(j.at("method"), &length_method_from_string, "method")};
}

J to_j(const FusedObservation& o) {
  J lengths = J::array();
  for (const auto& l : o.lengths_cm) lengths.push_back(to_j(l));
  return J{{"frame_ts_ms", o.frame_ts_ms}, {"fused_count", o.fused_count},
           {"count_a", opt(o.count_a)},    {"count_b", opt(o.count_b)},
           {"degraded", o.degraded},       {"lengths_cm", std::move(lengths)}};
}

FusedObservation observation_from_j(const J& j) {
  FusedObservation o;
  o.frame_ts_ms = j.at("frame_ts_ms").get<std::int64_t>();
  o.fused_count = j.at("fused_count").get<int>();
  o.count_a = opt_get<int>(j, "count_a");
  o.count_b = opt_get<int>(j, "count_b");
  o.degraded = j.at("degraded").get<bool>();
  for (const auto& l : j.at("lengths_cm")) o.lengths_cm.push_back(length_from_j(l));
  return o;
}

J to_j(const RationPlan& p) {
  J fish = J::array();
  for (const auto& f : p.per_fish) {
    fish.push_back(J{{"weight_g", f.weight_g},
                     {"band_index", f.band_index},
                     {"percent_used", f.percent_used},
                     {"grams_per_day", f.grams_per_day}});
  }
  return J{{"per_fish", std::move(fish)},
           {"average_grams_per_day", p.average_grams_per_day},
           {"fish_count", p.fish_count},
           {"total_grams_per_day", p.total_grams_per_day},
           {"no_fish_detected", p.no_fish_detected}};
}

RationPlan plan_from_j(const J& j) {
  RationPlan p;
  for (const auto& f : j.at("per_fish")) {
    p.per_fish.push_back({f.at("weight_g").get<double>(), f.at("band_index").get<std::size_t>(),
                          f.at("percent_used").get<double>(), f.at("grams_per_day").get<double>()});
  }
  p.average_grams_per_day = j.at("average_grams_per_day").get<double>();
  p.fish_count = j.at("fish_count").get<int>();
  p.total_grams_per_day = j.at("total_grams_per_day").get<double>();
  p.no_fish_detected = j.at("no_fish_detected").get<bool>();
  return p;
}

J to_j(const TelemetryReading& r) {
  return J{{"tank_id", r.tank_id}, {"device_id", r.device_id}, {"ts_ms", r.ts_ms},
           {"seq", r.seq},         {"kind", to_string(r.kind)},  {"value", r.value},
           {"unit", to_string(r.unit)}};
}

TelemetryReading reading_from_j(const J& j) {
  TelemetryReading r;
  r.tank_id = j.at("tank_id").get<std::string>();
  r.device_id = j.at("device_id").get<std::string>();
  r.ts_ms = j.at("ts_ms").get<std::int64_t>();
  r.seq = j.at("seq").get<std::int64_t>();
  r.kind = parse_enum(j.at("kind"), &reading_kind_from_string, "kind");
  r.value = j.at("value").get<double>();
  r.unit = parse_enum(j.at("unit"), &reading_unit_from_string, "unit");
  return r;
}

J to_j(const CommandMessage& c) {
  J j{{"tank_id", c.tank_id},
      {"command_id", c.command_id},
      {"kind", to_string(c.kind())},
      {"issued_ts_ms", c.issued_ts_ms}};
  if (const auto* f = std::get_if<FeedPayload>(&c.payload)) {
    j["grams"] = f->grams;
  } else {
    const auto& p = std::get<PhPumpPayload>(c.payload);
    j["direction"] = to_string(p.direction);
    j["seconds"] = p.seconds;
  }
  return j;
}

CommandMessage command_from_j(const J& j) {
  CommandMessage c;
  c.tank_id = j.at("tank_id").get<std::string>();
  c.command_id = j.at("command_id").get<std::string>();
  c.issued_ts_ms = j.at("issued_ts_ms").get<std::int64_t>();
  if (parse_enum(j.at("kind"), &command_kind_from_string, "kind") == CommandKind::Feed) {
    c.payload = FeedPayload{j.at("grams").get<double>()};
  } else {
    c.payload = PhPumpPayload{parse_enum(j.at("direction"), &pump_direction_from_string, "direction"),
                              j.at("seconds").get<double>()};
  }
  return c;
}

J to_j(const AckMessage& a) {
  return J{{"command_id", a.command_id},
           {"status", to_string(a.status)},
           {"detail", a.detail},
           {"measured", opt(a.measured)}};
}

AckMessage ack_from_j(const J& j) {
  AckMessage a;
  a.command_id = j.at("command_id").get<std::string>();
  a.status = parse_enum(j.at("status"), &ack_status_from_string, "status");
  a.detail = j.at("detail").get<std::string>();
  a.measured = opt_get<double>(j, "measured");
  return a;
}

J to_j(const AlertRule& r) {
  return J{{"kind", to_string(r.kind)},
           {"low", r.low},
           {"high", r.high},
           {"hysteresis", r.hysteresis},
           {"action", to_string(r.action)}};
}

AlertRule rule_from_j(const J& j, const std::string& path) {
  auto num = [&](const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) bad(path + "." + key, "missing required field");
    if (!it->is_number()) bad(path + "." + key, "expected a number");
    return it->get<double>();
  };
  if (!j.is_object()) bad(path, "expected an object");
  if (!j.contains("kind")) bad(path + ".kind", "missing required field");
  AlertRule r;
  r.kind = parse_enum(j.at("kind"), &reading_kind_from_string, (path + ".kind").c_str());
  r.low = num("low");
  r.high = num("high");
  r.hysteresis = j.contains("hysteresis") ? num("hysteresis") : 0.0;
  r.action = j.contains("action")
                 ? parse_enum(j.at("action"), &alert_action_from_string, (path + ".action").c_str())
                 : AlertAction::Notify;
  return r;
}

J rules_to_j(const std::vector<AlertRule>& rules) {
  J arr = J::array();
  for (const auto& r : rules) arr.push_back(to_j(r));
  return arr;
}

std::vector<AlertRule> rules_from_j(const J& arr) {
  if (!arr.is_array()) bad("rules", "expected an array");
  std::vector<AlertRule> rules;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    rules.push_back(rule_from_j(arr[i], "rules[" + std::to_string(i) + "]"));
  }
  return rules;
}

J to_j(const AlertState& a) {
  return J{{"active", a.active}, {"since_ms", a.since_ms}, {"value", a.value}, {"side", a.side}};
}

AlertState alert_from_j(const J& j) {
  return {j.at("active").get<bool>(), j.at("since_ms").get<std::int64_t>(),
          j.at("value").get<double>(), j.at("side").get<std::string>()};
}

J to_j(const FeedDecision& d) {
  return J{{"decision_id", d.decision_id},
           {"trigger", to_string(d.trigger)},
           {"decided_ts_ms", d.decided_ts_ms},
           {"commanded_grams", d.commanded_grams()},
           {"window_fraction", d.window_fraction},
           {"capped", d.capped},
           {"degraded", d.observation.degraded},
           {"timed_out", d.timed_out},
           {"command", to_j(d.command)},
           {"outcome", d.outcome ? to_j(*d.outcome) : J(nullptr)},
           {"observation", to_j(d.observation)},
           {"plan", to_j(d.plan)}};
}

FeedDecision decision_from_j(const J& j) {
  FeedDecision d;
  d.decision_id = j.at("decision_id").get<std::int64_t>();
  d.trigger = parse_enum(j.at("trigger"), &feed_trigger_from_string, "trigger");
  d.decided_ts_ms = j.at("decided_ts_ms").get<std::int64_t>();
  d.window_fraction = j.at("window_fraction").get<double>();
  d.capped = j.at("capped").get<bool>();
  d.timed_out = j.at("timed_out").get<bool>();
  d.command = command_from_j(j.at("command"));
  if (!j.at("outcome").is_null()) d.outcome = ack_from_j(j.at("outcome"));
  d.observation = observation_from_j(j.at("observation"));
  d.plan = plan_from_j(j.at("plan"));
  if (!std::holds_alternative<FeedPayload>(d.command.payload)) bad("command", "not a feed command");
  return d;
}

J to_j(const ManualRequest& m) {
  return J{{"request_id", m.request_id},
           {"grams", opt(m.grams)},
           {"requested_ts_ms", m.requested_ts_ms}};
}

ManualRequest manual_from_j(const J& j) {
  return {j.at("request_id").get<std::string>(), opt_get<double>(j, "grams"),
          j.at("requested_ts_ms").get<std::int64_t>()};
}

// ---- state ------------------------------------------------------------------

J state_to_j(const TankState& s) {
  J latest = J::object();
  for (const auto& [k, r] : s.latest) latest[std::string(to_string(k))] = to_j(r);
  J alerts = J::object();
  for (const auto& [k, a] : s.alerts) alerts[std::string(to_string(k))] = to_j(a);
  J decisions = J::array();
  for (const auto& d : s.decisions) decisions.push_back(to_j(d));
  J pending = J::array();
  for (const auto& [id, p] : s.pending) {
    pending.push_back(J{{"command", to_j(p.command)},
                        {"accepted", p.accepted},
                        {"decision_index", opt(p.decision_index)}});
  }
  return J{{"tank_id", s.tank_id},
           {"latest", std::move(latest)},
           {"last_observation", s.last_observation ? to_j(*s.last_observation) : J(nullptr)},
           {"last_plan", s.last_plan ? to_j(*s.last_plan) : J(nullptr)},
           {"last_plan_ts_ms", s.last_plan_ts_ms},
           {"last_feed_ack", s.last_feed_ack ? to_j(*s.last_feed_ack) : J(nullptr)},
           {"actuators",
            J{{"feeder_command", opt(s.actuators.feeder_command)},
              {"ph_pump_command", opt(s.actuators.ph_pump_command)},
              {"dispensed_total_g", s.actuators.dispensed_total_g}}},
           {"alerts", std::move(alerts)},
           {"rules", rules_to_j(s.rules)},
           {"decisions", std::move(decisions)},
           {"pending", std::move(pending)},
           {"pending_manual", s.pending_manual ? to_j(*s.pending_manual) : J(nullptr)},
           {"last_served_window_ms", s.last_served_window_ms},
           {"last_ph_command_ts_ms", s.last_ph_command_ts_ms},
           {"commands_issued", s.commands_issued},
           {"no_fish_events", s.no_fish_events},
           {"degraded_observations", s.degraded_observations},
           {"rejected_fish", s.rejected_fish},
           {"last_seq", s.last_seq},
           {"last_ts_ms", s.last_ts_ms}};
}

ReadingKind kind_key(const std::string& k) {
  const auto kind = reading_kind_from_string(k);
  if (!kind) bad(k, "unknown reading kind");
  return *kind;
}

TankState state_from_j(const J& j) {
  TankState s;
  s.tank_id = j.at("tank_id").get<std::string>();
  for (const auto& [k, v] : j.at("latest").items()) s.latest[kind_key(k)] = reading_from_j(v);
  if (!j.at("last_observation").is_null()) s.last_observation = observation_from_j(j.at("last_observation"));
  if (!j.at("last_plan").is_null()) s.last_plan = plan_from_j(j.at("last_plan"));
  s.last_plan_ts_ms = j.at("last_plan_ts_ms").get<std::int64_t>();
  if (!j.at("last_feed_ack").is_null()) s.last_feed_ack = ack_from_j(j.at("last_feed_ack"));
  const J& act = j.at("actuators");
  s.actuators.feeder_command = opt_get<std::string>(act, "feeder_command");
  s.actuators.ph_pump_command = opt_get<std::string>(act, "ph_pump_command");
  s.actuators.dispensed_total_g = act.at("dispensed_total_g").get<double>();
  for (const auto& [k, v] : j.at("alerts").items()) s.alerts[kind_key(k)] = alert_from_j(v);
  s.rules = rules_from_j(j.at("rules"));
  for (const auto& d : j.at("decisions")) s.decisions.push_back(decision_from_j(d));
  for (const auto& p : j.at("pending")) {
    PendingCommand pc{command_from_j(p.at("command")), p.at("accepted").get<bool>(),
                      opt_get<std::size_t>(p, "decision_index")};
    s.pending.emplace(pc.command.command_id, std::move(pc));
  }
  if (!j.at("pending_manual").is_null()) s.pending_manual = manual_from_j(j.at("pending_manual"));
  s.last_served_window_ms = j.at("last_served_window_ms").get<std::int64_t>();
  s.last_ph_command_ts_ms = j.at("last_ph_command_ts_ms").get<std::int64_t>();
  s.commands_issued = j.at("commands_issued").get<std::int64_t>();
  s.no_fish_events = j.at("no_fish_events").get<std::int64_t>();
  s.degraded_observations = j.at("degraded_observations").get<std::int64_t>();
  s.rejected_fish = j.at("rejected_fish").get<std::int64_t>();
  s.last_seq = j.at("last_seq").get<std::uint64_t>();
  s.last_ts_ms = j.at("last_ts_ms").get<std::int64_t>();
  return s;
}

// ---- events -----------------------------------------------------------------

struct BodyToJson {
  J operator()(const TelemetryObserved& e) const { return J{{"reading", to_j(e.reading)}}; }
  J operator()(const ObservationRecorded& e) const {
    return J{{"observation", to_j(e.observation)},
             {"plan", e.plan ? to_j(*e.plan) : J(nullptr)},
             {"rejected_fish", e.rejected_fish},
             {"no_fish", e.no_fish}};
  }
  J operator()(const AlertChanged& e) const {
    return J{{"kind", to_string(e.kind)}, {"active", e.active}, {"value", e.value}, {"side", e.side}};
  }
  J operator()(const CommandIssued& e) const {
    return J{{"command", to_j(e.command)},
             {"decision", e.decision ? to_j(*e.decision) : J(nullptr)},
             {"served_window_ms", opt(e.served_window_ms)}};
  }
  J operator()(const AckReceived& e) const { return J{{"ack", to_j(e.ack)}}; }
  J operator()(const CommandTimedOut& e) const { return J{{"command_id", e.command_id}}; }
  J operator()(const RulesUpdated& e) const { return J{{"rules", rules_to_j(e.rules)}}; }
  J operator()(const ManualFeedRequested& e) const { return J{{"request", to_j(e.request)}}; }
  J operator()(const ManualFeedRejected& e) const {
    return J{{"request_id", e.request_id}, {"reason", e.reason}};
  }
};

EventBody body_from_j(const std::string& type, const J& b) {
  if (type == "telemetry_observed") return TelemetryObserved{reading_from_j(b.at("reading"))};
  if (type == "observation_recorded") {
    ObservationRecorded e;
    e.observation = observation_from_j(b.at("observation"));
    if (!b.at("plan").is_null()) e.plan = plan_from_j(b.at("plan"));
    e.rejected_fish = b.at("rejected_fish").get<int>();
    e.no_fish = b.at("no_fish").get<bool>();
    return e;
  }
  if (type == "alert_changed") {
    return AlertChanged{parse_enum(b.at("kind"), &reading_kind_from_string, "kind"),
                        b.at("active").get<bool>(), b.at("value").get<double>(),
                        b.at("side").get<std::string>()};
  }
  if (type == "command_issued") {
    CommandIssued e;
    e.command = command_from_j(b.at("command"));
    if (!b.at("decision").is_null()) e.decision = decision_from_j(b.at("decision"));
    e.served_window_ms = opt_get<std::int64_t>(b, "served_window_ms");
    return e;
  }
  if (type == "ack_received") return AckReceived{ack_from_j(b.at("ack"))};
  if (type == "command_timed_out") return CommandTimedOut{b.at("command_id").get<std::string>()};
  if (type == "rules_updated") return RulesUpdated{rules_from_j(b.at("rules"))};
  if (type == "manual_feed_requested") return ManualFeedRequested{manual_from_j(b.at("request"))};
  if (type == "manual_feed_rejected") {
    return ManualFeedRejected{b.at("request_id").get<std::string>(), b.at("reason").get<std::string>()};
  }
  bad("type", "unknown event type '" + type + "'");
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, "$", e.what());
  }
}

J parse(std::string_view text) {
  J j = J::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded()) bad("$", "malformed document");
  return j;
}

// ---- transitions ------------------------------------------------------------

void finish_command(TankState& s, const std::string& id) {
  if (s.actuators.feeder_command == id) s.actuators.feeder_command.reset();
  if (s.actuators.ph_pump_command == id) s.actuators.ph_pump_command.reset();
  s.pending.erase(id);
}

struct Applier {
  TankState& s;
  const Event& ev;

  void operator()(const TelemetryObserved& e) const {
    auto it = s.latest.find(e.reading.kind);
    if (it == s.latest.end() || it->second.ts_ms <= e.reading.ts_ms) {
      s.latest[e.reading.kind] = e.reading;
    }
  }

  void operator()(const ObservationRecorded& e) const {
    s.last_observation = e.observation;
    if (e.plan) {
      s.last_plan = e.plan;
      s.last_plan_ts_ms = e.observation.frame_ts_ms;
    }
    if (e.no_fish) ++s.no_fish_events;
    if (e.observation.degraded) ++s.degraded_observations;
    s.rejected_fish += e.rejected_fish;
  }

  void operator()(const AlertChanged& e) const {
    s.alerts[e.kind] = AlertState{e.active, ev.ts_ms, e.value, e.active ? e.side : std::string{}};
  }

  void operator()(const CommandIssued& e) const {
    ++s.commands_issued;
    PendingCommand p{e.command, false, std::nullopt};
    if (e.decision) {
      p.decision_index = s.decisions.size();
      s.decisions.push_back(*e.decision);
      if (e.decision->trigger == FeedTrigger::Manual && s.pending_manual &&
          s.pending_manual->request_id == e.command.command_id) {
        s.pending_manual.reset();
      }
    }
    if (e.served_window_ms) s.last_served_window_ms = *e.served_window_ms;
    if (e.command.kind() == CommandKind::Feed) {
      s.actuators.feeder_command = e.command.command_id;
    } else {
      s.actuators.ph_pump_command = e.command.command_id;
      s.last_ph_command_ts_ms = ev.ts_ms;
    }
    s.pending[e.command.command_id] = std::move(p);
  }

  void operator()(const AckReceived& e) const {
    auto it = s.pending.find(e.ack.command_id);
    if (it == s.pending.end()) return;
    if (!e.ack.terminal()) {
      it->second.accepted = true;
      return;
    }
    if (it->second.decision_index) s.decisions.at(*it->second.decision_index).outcome = e.ack;
    if (it->second.command.kind() == CommandKind::Feed) {
      s.last_feed_ack = e.ack;
      if (e.ack.measured) s.actuators.dispensed_total_g += *e.ack.measured;
    }
    finish_command(s, e.ack.command_id);
  }

  void operator()(const CommandTimedOut& e) const {
    auto it = s.pending.find(e.command_id);
    if (it == s.pending.end()) return;
    if (it->second.decision_index) s.decisions.at(*it->second.decision_index).timed_out = true;
    finish_command(s, e.command_id);
  }

  void operator()(const RulesUpdated& e) const {
    s.rules = e.rules;
    std::erase_if(s.alerts, [&](const auto& kv) {
      return std::none_of(s.rules.begin(), s.rules.end(),
                          [&](const AlertRule& r) { return r.kind == kv.first; });
    });
  }

  void operator()(const ManualFeedRequested& e) const { s.pending_manual = e.request; }

  void operator()(const ManualFeedRejected& e) const {
    if (s.pending_manual && s.pending_manual->request_id == e.request_id) s.pending_manual.reset();
  }
};

}  // namespace

std::string_view to_string(AlertAction a) {
  return a == AlertAction::Notify ? "notify" : "actuate_ph";
}

std::optional<AlertAction> alert_action_from_string(std::string_view s) {
  if (s == "notify") return AlertAction::Notify;
  if (s == "actuate_ph") return AlertAction::ActuatePh;
  return std::nullopt;
}

std::string_view to_string(FeedTrigger t) {
  return t == FeedTrigger::Scheduled ? "scheduled" : "manual";
}

void AlertRule::validate() const {
  if (!std::isfinite(low) || !std::isfinite(high)) {
    throw Error(ErrorKind::Validation, "low", "thresholds must be finite");
  }
  if (!(low < high)) throw Error(ErrorKind::Validation, "high", "must be greater than low");
  if (!(hysteresis >= 0.0) || !std::isfinite(hysteresis)) {
    throw Error(ErrorKind::Validation, "hysteresis", "must be finite and >= 0");
  }
  if (2.0 * hysteresis >= high - low) {
    throw Error(ErrorKind::Validation, "hysteresis", "band leaves no clear region");
  }
  if (action == AlertAction::ActuatePh && kind != ReadingKind::Ph) {
    throw Error(ErrorKind::Validation, "action", "actuate_ph only applies to ph rules");
  }
}

std::vector<AlertRule> default_alert_rules() {
  return {
      {ReadingKind::Ph, 6.5, 8.5, 0.1, AlertAction::ActuatePh},
      {ReadingKind::DissolvedOxygen, 4.0, 1.0e6, 0.1, AlertAction::Notify},
      {ReadingKind::Temperature, 20.0, 34.0, 0.2, AlertAction::Notify},
  };
}

TankState TankState::initial(std::string tank_id, std::vector<AlertRule> rules) {
  TankState s;
  s.tank_id = std::move(tank_id);
  s.rules = std::move(rules);
  return s;
}

const FeedDecision* TankState::find_decision(std::string_view command_id) const {
  for (const auto& d : decisions) {
    if (d.command.command_id == command_id) return &d;
  }
  return nullptr;
}

std::string_view event_type_name(const EventBody& body) {
  static constexpr std::string_view names[] = {
      "telemetry_observed", "observation_recorded", "alert_changed",
      "command_issued",     "ack_received",         "command_timed_out",
      "rules_updated",      "manual_feed_requested", "manual_feed_rejected"};
  return names[body.index()];
}

void apply(TankState& state, const Event& event) {
  std::visit(Applier{state, event}, event.body);
  state.last_seq = event.seq;
  state.last_ts_ms = std::max(state.last_ts_ms, event.ts_ms);
}

std::string tank_state_to_json(const TankState& state) { return state_to_j(state).dump(); }

TankState tank_state_from_json(std::string_view text) {
  return guarded([&] { return state_from_j(parse(text)); });
}

std::string event_to_json(const Event& event) {
  J j{{"seq", event.seq},
      {"ts_ms", event.ts_ms},
      {"type", event_type_name(event.body)},
      {"body", std::visit(BodyToJson{}, event.body)}};
  return j.dump();
}

Event event_from_json(std::string_view text) {
  return guarded([&] {
    const J j = parse(text);
    Event e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.ts_ms = j.at("ts_ms").get<std::int64_t>();
    e.body = body_from_j(j.at("type").get<std::string>(), j.at("body"));
    return e;
  });
}

std::string feed_decision_to_json(const FeedDecision& decision) { return to_j(decision).dump(); }

std::string alert_rules_to_json(const std::vector<AlertRule>& rules) {
  return rules_to_j(rules).dump();
}

std::vector<AlertRule> alert_rules_from_json(std::string_view text) {
  return guarded([&] {
    J j = parse(text);
    if (j.is_object() && j.contains("rules")) j = j.at("rules");
    auto rules = rules_from_j(j);
    for (std::size_t i = 0; i < rules.size(); ++i) {
      try {
        rules[i].validate();
      } catch (const Error& e) {
        throw Error(ErrorKind::Validation, "rules[" + std::to_string(i) + "]." + e.field(),
                    e.message());
      }
    }
    return rules;
  });
}

}  // namespace aquafeed
