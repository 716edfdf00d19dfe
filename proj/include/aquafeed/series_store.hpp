// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aquafeed/messages.hpp"

namespace aquafeed {

struct SeriesPoint {
  std::int64_t ts_ms = 0;
  double value = 0.0;

  bool operator==(const SeriesPoint&) const = default;
};

enum class IngestResult { Stored, Duplicate, TooOld };

struct StoreStats {
  std::uint64_t stored = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t dropped_too_old = 0;
};

// Time-series backend behind the control service.
class SeriesStore {
 public:
  virtual ~SeriesStore() = default;

  virtual IngestResult ingest(const TelemetryReading& reading) = 0;
  // Points with from_ts <= ts <= to_ts, ascending. Unknown series -> empty.
  virtual std::vector<SeriesPoint> query_range(const std::string& tank_id, ReadingKind kind,
                                               std::int64_t from_ts, std::int64_t to_ts) const = 0;
  virtual StoreStats stats() const = 0;
};

struct SeriesStoreConfig {
  std::int64_t retention_ms = 7LL * 24 * 3600 * 1000;
  std::int64_t reorder_window_ms = 5000;
  std::size_t max_points_per_series = 1'000'000;
};

class InMemorySeriesStore final : public SeriesStore {
 public:
  explicit InMemorySeriesStore(SeriesStoreConfig config = {});

  IngestResult ingest(const TelemetryReading& reading) override;
  std::vector<SeriesPoint> query_range(const std::string& tank_id, ReadingKind kind,
                                       std::int64_t from_ts, std::int64_t to_ts) const override;
  StoreStats stats() const override;

  // Versioned binary snapshot: "AQSN", u32 version, then series and the
  // per-device sequence state.
  void save_snapshot(const std::filesystem::path& path) const;
  // Replaces the current contents.
  void load_snapshot(const std::filesystem::path& path);

  const SeriesStoreConfig& config() const noexcept { return config_; }

 private:
  struct Series {
    mutable std::shared_mutex mu;
    std::deque<SeriesPoint> points;  // ascending by ts
    std::int64_t latest_ts = INT64_MIN;
  };
  struct DeviceSeq {
    std::int64_t floor_seq = -1;                // everything <= floor has been seen
    std::map<std::int64_t, std::int64_t> seen;  // seq -> ts, inside the reorder window
    std::int64_t latest_ts = INT64_MIN;
  };
  using SeriesKey = std::pair<std::string, ReadingKind>;
  using DeviceKey = std::pair<std::string, std::string>;

  Series& series_for(const SeriesKey& key);
  const Series* find_series(const SeriesKey& key) const;
  bool mark_seen(const TelemetryReading& reading);

  SeriesStoreConfig config_;
  mutable std::shared_mutex series_mu_;
  std::map<SeriesKey, std::unique_ptr<Series>> series_;
  mutable std::mutex dedup_mu_;
  std::map<DeviceKey, DeviceSeq> devices_;
  mutable std::mutex stats_mu_;
  StoreStats stats_;
};

}  // namespace aquafeed
