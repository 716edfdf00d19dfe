// SPDX-License-Identifier: Apache-2.0
#pragma once

// MQTT topic schema and canonical payload encoding.
//
//   aqua/{tank_id}/telemetry/{ph|dissolved_oxygen|temperature}
//   aqua/{tank_id}/frames/{A|B}
//   aqua/{tank_id}/cmd/{feed|ph_pump}
//   aqua/{tank_id}/ack/{command_id}
//
// Payloads are compact UTF-8 JSON with a fixed field order, so a message
// always encodes to the same bytes.

#include <string>
#include <string_view>

#include "aquafeed/messages.hpp"

namespace aquafeed {

enum class Channel { Telemetry, Frames, Cmd, Ack, SimControl };

struct Topic {
  std::string tank_id;
  Channel channel = Channel::Telemetry;
  std::string leaf;

  std::string str() const;
  bool operator==(const Topic&) const = default;
};

// Throws Protocol on anything outside the schema.
Topic parse_topic(std::string_view topic);

std::string telemetry_topic(std::string_view tank_id, ReadingKind kind);
std::string frames_topic(std::string_view tank_id, CameraId camera);
std::string command_topic(std::string_view tank_id, CommandKind kind);
std::string ack_topic(std::string_view tank_id, std::string_view command_id);
// Simulator scenario control (pause, resume, hopper refill).
std::string sim_control_topic(std::string_view tank_id);
// Subscription filter covering every topic of one tank.
std::string tank_filter(std::string_view tank_id);

// Topic on which a message is published. Acks need the tank explicitly.
std::string topic_for(const Message& msg, std::string_view tank_id = {});

std::string encode_payload(const Message& msg);
Message decode_payload(std::string_view topic, std::string_view bytes);

}  // namespace aquafeed
