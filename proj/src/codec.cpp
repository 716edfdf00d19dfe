// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/codec.hpp"

#include <cmath>
#include <vector>

#include "aquafeed/error.hpp"
#include "json_util.hpp"

namespace aquafeed {

using nlohmann::json;
using nlohmann::ordered_json;
namespace ju = json_util;

// ---- message enums and invariants ------------------------------------------

std::string_view to_string(ReadingKind kind) {
  switch (kind) {
    case ReadingKind::Ph: return "ph";
    case ReadingKind::DissolvedOxygen: return "dissolved_oxygen";
    case ReadingKind::Temperature: return "temperature";
  }
  return "?";
}

std::string_view to_string(ReadingUnit unit) {
  switch (unit) {
    case ReadingUnit::Ph: return "pH";
    case ReadingUnit::MgPerL: return "mg_per_L";
    case ReadingUnit::Celsius: return "celsius";
  }
  return "?";
}

std::optional<ReadingKind> reading_kind_from_string(std::string_view s) {
  for (auto k : kAllReadingKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<ReadingUnit> reading_unit_from_string(std::string_view s) {
  for (auto u : {ReadingUnit::Ph, ReadingUnit::MgPerL, ReadingUnit::Celsius}) {
    if (to_string(u) == s) return u;
  }
  return std::nullopt;
}

ReadingUnit unit_for(ReadingKind kind) {
  switch (kind) {
    case ReadingKind::Ph: return ReadingUnit::Ph;
    case ReadingKind::DissolvedOxygen: return ReadingUnit::MgPerL;
    case ReadingKind::Temperature: return ReadingUnit::Celsius;
  }
  return ReadingUnit::Ph;
}

std::string_view to_string(CommandKind kind) { return kind == CommandKind::Feed ? "feed" : "ph_pump"; }
std::string_view to_string(PumpDirection d) { return d == PumpDirection::Raise ? "raise" : "lower"; }

std::optional<CommandKind> command_kind_from_string(std::string_view s) {
  if (s == "feed") return CommandKind::Feed;
  if (s == "ph_pump") return CommandKind::PhPump;
  return std::nullopt;
}

std::optional<PumpDirection> pump_direction_from_string(std::string_view s) {
  if (s == "raise") return PumpDirection::Raise;
  if (s == "lower") return PumpDirection::Lower;
  return std::nullopt;
}

std::string_view to_string(AckStatus s) {
  switch (s) {
    case AckStatus::Accepted: return "accepted";
    case AckStatus::Completed: return "completed";
    case AckStatus::Failed: return "failed";
  }
  return "?";
}

std::optional<AckStatus> ack_status_from_string(std::string_view s) {
  for (auto st : {AckStatus::Accepted, AckStatus::Completed, AckStatus::Failed}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

bool valid_topic_segment(std::string_view s) {
  if (s.empty() || s.size() > 128) return false;
  for (char c : s) {
    if (c == '/' || c == '+' || c == '#' || static_cast<unsigned char>(c) < 0x20 || c == 0x7f) {
      return false;
    }
  }
  return true;
}

void TelemetryReading::validate() const {
  if (!valid_topic_segment(tank_id)) throw Error(ErrorKind::Validation, "tank_id", "invalid tank id");
  if (device_id.empty()) throw Error(ErrorKind::Validation, "device_id", "must not be empty");
  if (ts_ms <= 0) throw Error(ErrorKind::Validation, "ts_ms", "must be > 0");
  if (seq < 0) throw Error(ErrorKind::Validation, "seq", "must be >= 0");
  if (!std::isfinite(value)) throw Error(ErrorKind::Validation, "value", "must be finite");
  if (unit != unit_for(kind)) throw Error(ErrorKind::Validation, "unit", "does not match kind");
}

void CommandMessage::validate() const {
  if (!valid_topic_segment(tank_id)) throw Error(ErrorKind::Validation, "tank_id", "invalid tank id");
  if (!valid_topic_segment(command_id)) {
    throw Error(ErrorKind::Validation, "command_id", "invalid command id");
  }
  if (const auto* feed = std::get_if<FeedPayload>(&payload)) {
    if (!(std::isfinite(feed->grams) && feed->grams > 0.0)) {
      throw Error(ErrorKind::Validation, "grams", "must be > 0");
    }
  } else {
    const auto& pump = std::get<PhPumpPayload>(payload);
    if (!(std::isfinite(pump.seconds) && pump.seconds > 0.0)) {
      throw Error(ErrorKind::Validation, "seconds", "must be > 0");
    }
  }
}

void AckMessage::validate() const {
  if (!valid_topic_segment(command_id)) {
    throw Error(ErrorKind::Validation, "command_id", "invalid command id");
  }
  if (measured && !(std::isfinite(*measured) && *measured >= 0.0)) {
    throw Error(ErrorKind::Validation, "measured", "must be finite and >= 0");
  }
}

// ---- topics ----------------------------------------------------------------

namespace {

constexpr std::string_view kRoot = "aqua";

std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::Telemetry: return "telemetry";
    case Channel::Frames: return "frames";
    case Channel::Cmd: return "cmd";
    case Channel::Ack: return "ack";
    case Channel::SimControl: return "sim";
  }
  return "?";
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string join_topic(std::string_view tank, Channel c, std::string_view leaf) {
  std::string out(kRoot);
  out += '/';
  out += tank;
  out += '/';
  out += channel_name(c);
  out += '/';
  out += leaf;
  return out;
}

}  // namespace

std::string Topic::str() const { return join_topic(tank_id, channel, leaf); }

Topic parse_topic(std::string_view topic) {
  const auto parts = split(topic, '/');
  if (parts.size() != 4 || parts[0] != kRoot) {
    throw Error(ErrorKind::Protocol, "topic", "not an aqua/{tank}/{channel}/{leaf} topic");
  }
  if (!valid_topic_segment(parts[1]) || !valid_topic_segment(parts[3])) {
    throw Error(ErrorKind::Protocol, "topic", "invalid topic segment");
  }
  Topic t{std::string(parts[1]), Channel::Telemetry, std::string(parts[3])};
  if (parts[2] == "telemetry") {
    t.channel = Channel::Telemetry;
    if (!reading_kind_from_string(t.leaf)) throw Error(ErrorKind::Protocol, "topic", "unknown telemetry kind");
  } else if (parts[2] == "frames") {
    t.channel = Channel::Frames;
    if (!camera_id_from_string(t.leaf)) throw Error(ErrorKind::Protocol, "topic", "unknown camera");
  } else if (parts[2] == "cmd") {
    t.channel = Channel::Cmd;
    if (!command_kind_from_string(t.leaf)) throw Error(ErrorKind::Protocol, "topic", "unknown command kind");
  } else if (parts[2] == "ack") {
    t.channel = Channel::Ack;
  } else if (parts[2] == "sim" && parts[3] == "control") {
    t.channel = Channel::SimControl;
  } else {
    throw Error(ErrorKind::Protocol, "topic", "unknown channel");
  }
  return t;
}

std::string telemetry_topic(std::string_view tank_id, ReadingKind kind) {
  return join_topic(tank_id, Channel::Telemetry, to_string(kind));
}
std::string frames_topic(std::string_view tank_id, CameraId camera) {
  return join_topic(tank_id, Channel::Frames, to_string(camera));
}
std::string command_topic(std::string_view tank_id, CommandKind kind) {
  return join_topic(tank_id, Channel::Cmd, to_string(kind));
}
std::string ack_topic(std::string_view tank_id, std::string_view command_id) {
  return join_topic(tank_id, Channel::Ack, command_id);
}
std::string sim_control_topic(std::string_view tank_id) {
  return join_topic(tank_id, Channel::SimControl, "control");
}
std::string tank_filter(std::string_view tank_id) {
  std::string out(kRoot);
  out += '/';
  out += tank_id;
  out += "/#";
  return out;
}

std::string topic_for(const Message& msg, std::string_view tank_id) {
  return std::visit(
      [&](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TelemetryReading>) {
          return telemetry_topic(m.tank_id, m.kind);
        } else if constexpr (std::is_same_v<T, CommandMessage>) {
          return command_topic(m.tank_id, m.kind());
        } else if constexpr (std::is_same_v<T, AckMessage>) {
          return ack_topic(tank_id, m.command_id);
        } else {
          return frames_topic(tank_id, m.camera_id);
        }
      },
      msg);
}

// ---- payloads --------------------------------------------------------------

namespace {

ordered_json encode_reading(const TelemetryReading& r) {
  return ordered_json{{"tank_id", r.tank_id}, {"device_id", r.device_id}, {"ts_ms", r.ts_ms},
                      {"seq", r.seq},         {"kind", to_string(r.kind)},  {"value", r.value},
                      {"unit", to_string(r.unit)}};
}

ordered_json encode_command(const CommandMessage& c) {
  ordered_json j{{"tank_id", c.tank_id},
                 {"command_id", c.command_id},
                 {"kind", to_string(c.kind())},
                 {"issued_ts_ms", c.issued_ts_ms}};
  if (const auto* feed = std::get_if<FeedPayload>(&c.payload)) {
    j["grams"] = feed->grams;
  } else {
    const auto& pump = std::get<PhPumpPayload>(c.payload);
    j["direction"] = to_string(pump.direction);
    j["seconds"] = pump.seconds;
  }
  return j;
}

ordered_json encode_ack(const AckMessage& a) {
  ordered_json j{{"command_id", a.command_id}, {"status", to_string(a.status)}, {"detail", a.detail}};
  if (a.measured) j["measured"] = *a.measured;
  return j;
}

TelemetryReading decode_reading(const json& j) {
  constexpr auto K = ErrorKind::Decode;
  TelemetryReading r;
  r.tank_id = ju::get_string(j, "tank_id", "", K);
  r.device_id = ju::get_string(j, "device_id", "", K);
  r.ts_ms = ju::get_int(j, "ts_ms", "", K);
  r.seq = ju::get_int(j, "seq", "", K);
  const auto kind = reading_kind_from_string(ju::get_string(j, "kind", "", K));
  if (!kind) throw Error(K, "kind", "unknown reading kind");
  r.kind = *kind;
  r.value = ju::get_double(j, "value", "", K);
  const auto unit = reading_unit_from_string(ju::get_string(j, "unit", "", K));
  if (!unit) throw Error(K, "unit", "unknown unit");
  r.unit = *unit;
  return r;
}

CommandMessage decode_command(const json& j) {
  constexpr auto K = ErrorKind::Decode;
  CommandMessage c;
  c.tank_id = ju::get_string(j, "tank_id", "", K);
  c.command_id = ju::get_string(j, "command_id", "", K);
  c.issued_ts_ms = ju::get_int(j, "issued_ts_ms", "", K);
  const auto kind = command_kind_from_string(ju::get_string(j, "kind", "", K));
  if (!kind) throw Error(K, "kind", "unknown command kind");
  if (*kind == CommandKind::Feed) {
    c.payload = FeedPayload{ju::get_double(j, "grams", "", K)};
  } else {
    const auto dir = pump_direction_from_string(ju::get_string(j, "direction", "", K));
    if (!dir) throw Error(K, "direction", "must be raise or lower");
    c.payload = PhPumpPayload{*dir, ju::get_double(j, "seconds", "", K)};
  }
  return c;
}

AckMessage decode_ack(const json& j) {
  constexpr auto K = ErrorKind::Decode;
  AckMessage a;
  a.command_id = ju::get_string(j, "command_id", "", K);
  const auto st = ack_status_from_string(ju::get_string(j, "status", "", K));
  if (!st) throw Error(K, "status", "unknown ack status");
  a.status = *st;
  a.detail = ju::get_string(j, "detail", "", K);
  if (j.contains("measured")) a.measured = ju::get_double(j, "measured", "", K);
  return a;
}

template <typename F>
void as_encode_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    throw Error(ErrorKind::Encode, e.field(), e.message());
  }
}

template <typename F>
auto as_decode_error(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Decode || e.kind() == ErrorKind::Protocol) throw;
    throw Error(ErrorKind::Decode, e.field(), e.message());
  }
}

}  // namespace

std::string encode_payload(const Message& msg) {
  as_encode_error([&] {
    std::visit([](const auto& m) { m.validate(); }, msg);
  });
  try {
    return std::visit(
        [](const auto& m) -> std::string {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, TelemetryReading>) {
            return encode_reading(m).dump();
          } else if constexpr (std::is_same_v<T, CommandMessage>) {
            return encode_command(m).dump();
          } else if constexpr (std::is_same_v<T, AckMessage>) {
            return encode_ack(m).dump();
          } else {
            return serialize_frame_detections(m);
          }
        },
        msg);
  } catch (const nlohmann::json::exception& e) {
    // Invalid UTF-8 inside a string field.
    throw Error(ErrorKind::Encode, "payload", e.what());
  }
}

Message decode_payload(std::string_view topic_text, std::string_view bytes) {
  const Topic topic = parse_topic(topic_text);

  if (topic.channel == Channel::Frames) {
    FrameDetections frame = as_decode_error([&] { return parse_frame_detections(bytes); });
    if (frame.camera_id != *camera_id_from_string(topic.leaf)) {
      throw Error(ErrorKind::Protocol, "camera_id", "payload camera does not match topic");
    }
    return frame;
  }

  const json doc = ju::parse_document(bytes, ErrorKind::Decode);
  if (!doc.is_object()) throw Error(ErrorKind::Decode, "$", "expected an object");

  switch (topic.channel) {
    case Channel::Telemetry: {
      TelemetryReading r = as_decode_error([&] {
        auto m = decode_reading(doc);
        m.validate();
        return m;
      });
      if (r.kind != *reading_kind_from_string(topic.leaf)) {
        throw Error(ErrorKind::Protocol, "kind", "payload kind does not match topic");
      }
      if (r.tank_id != topic.tank_id) {
        throw Error(ErrorKind::Protocol, "tank_id", "payload tank does not match topic");
      }
      return r;
    }
    case Channel::Cmd: {
      CommandMessage c = as_decode_error([&] {
        auto m = decode_command(doc);
        m.validate();
        return m;
      });
      if (c.kind() != *command_kind_from_string(topic.leaf)) {
        throw Error(ErrorKind::Protocol, "kind", "payload kind does not match topic");
      }
      if (c.tank_id != topic.tank_id) {
        throw Error(ErrorKind::Protocol, "tank_id", "payload tank does not match topic");
      }
      return c;
    }
    case Channel::Ack: {
      AckMessage a = as_decode_error([&] {
        auto m = decode_ack(doc);
        m.validate();
        return m;
      });
      if (a.command_id != topic.leaf) {
        throw Error(ErrorKind::Protocol, "command_id", "payload command does not match topic");
      }
      return a;
    }
    default:
      throw Error(ErrorKind::Protocol, "topic", "channel carries no typed message");
  }
}

}  // namespace aquafeed
