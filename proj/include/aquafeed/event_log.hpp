// SPDX-License-Identifier: Apache-2.0
#pragma once

// Append-only, CRC-framed event log. One file per tank:
//
//   "AQLG" u32 version
//   { u32 length, u32 crc32(payload), payload }*
//
// The payload is a one-byte tag ('E' event, 'S' state snapshot) followed by
// JSON. Recovery stops at the first damaged record and reports where.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aquafeed/tank_state.hpp"

namespace aquafeed {

struct LogCorruption {
  std::uint64_t byte_offset = 0;
  // Sequence number of the last event read intact (0 if none).
  std::uint64_t last_good_seq = 0;
  std::string reason;
};

struct LogScan {
  std::vector<Event> events;
  std::optional<TankState> snapshot;       // latest snapshot seen
  std::size_t events_after_snapshot = 0;   // suffix of `events` not in the snapshot
  std::uint64_t valid_bytes = 0;
  std::optional<LogCorruption> corruption;
};

// Reads every intact record. A missing file yields an empty scan.
LogScan scan_event_log(const std::filesystem::path& path);

struct RecoveryReport {
  TankState state;
  std::uint64_t events_replayed = 0;
  bool used_snapshot = false;
  std::uint64_t valid_bytes = 0;
  std::optional<LogCorruption> corruption;
};

// Rebuilds tank state from the latest snapshot plus the events after it.
RecoveryReport replay_scan(const LogScan& scan, TankState initial);
RecoveryReport recover_tank_state(const std::filesystem::path& path, TankState initial);

class EventLog {
 public:
  // Opens for appending. When `truncate_to` is given the file is cut there
  // first, dropping a damaged tail found by recovery.
  explicit EventLog(std::filesystem::path path, std::optional<std::uint64_t> truncate_to = std::nullopt,
                    bool sync_each_write = false);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void append(const Event& event);
  void append_snapshot(const TankState& state);
  std::uint64_t records_since_snapshot() const noexcept { return since_snapshot_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void write_record(char tag, const std::string& json);

  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  bool sync_;
  std::uint64_t since_snapshot_ = 0;
};

}  // namespace aquafeed
