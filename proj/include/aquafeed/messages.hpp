// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "aquafeed/detection.hpp"

namespace aquafeed {

enum class ReadingKind { Ph, DissolvedOxygen, Temperature };
enum class ReadingUnit { Ph, MgPerL, Celsius };

inline constexpr ReadingKind kAllReadingKinds[] = {ReadingKind::Ph, ReadingKind::DissolvedOxygen,
                                                  ReadingKind::Temperature};

std::string_view to_string(ReadingKind kind);
std::string_view to_string(ReadingUnit unit);
std::optional<ReadingKind> reading_kind_from_string(std::string_view s);
std::optional<ReadingUnit> reading_unit_from_string(std::string_view s);
ReadingUnit unit_for(ReadingKind kind);

struct TelemetryReading {
  std::string tank_id;
  std::string device_id;
  std::int64_t ts_ms = 0;
  std::int64_t seq = 0;
  ReadingKind kind = ReadingKind::Ph;
  double value = 0.0;
  ReadingUnit unit = ReadingUnit::Ph;

  void validate() const;
  bool operator==(const TelemetryReading&) const = default;
};

enum class CommandKind { Feed, PhPump };
enum class PumpDirection { Raise, Lower };

std::string_view to_string(CommandKind kind);
std::string_view to_string(PumpDirection d);
std::optional<CommandKind> command_kind_from_string(std::string_view s);
std::optional<PumpDirection> pump_direction_from_string(std::string_view s);

struct FeedPayload {
  double grams = 0.0;
  bool operator==(const FeedPayload&) const = default;
};

struct PhPumpPayload {
  PumpDirection direction = PumpDirection::Raise;
  double seconds = 0.0;
  bool operator==(const PhPumpPayload&) const = default;
};

struct CommandMessage {
  std::string tank_id;
  std::string command_id;
  std::variant<FeedPayload, PhPumpPayload> payload;
  std::int64_t issued_ts_ms = 0;

  CommandKind kind() const noexcept {
    return std::holds_alternative<FeedPayload>(payload) ? CommandKind::Feed : CommandKind::PhPump;
  }
  void validate() const;
  bool operator==(const CommandMessage&) const = default;
};

enum class AckStatus { Accepted, Completed, Failed };

std::string_view to_string(AckStatus s);
std::optional<AckStatus> ack_status_from_string(std::string_view s);

struct AckMessage {
  std::string command_id;
  AckStatus status = AckStatus::Accepted;
  std::string detail;
  // Grams actually dispensed according to the load cell.
  std::optional<double> measured;

  bool terminal() const noexcept { return status != AckStatus::Accepted; }
  void validate() const;
  bool operator==(const AckMessage&) const = default;
};

using Message = std::variant<TelemetryReading, CommandMessage, AckMessage, FrameDetections>;

// Topic segments may not contain MQTT separators or wildcards.
bool valid_topic_segment(std::string_view s);

}  // namespace aquafeed
