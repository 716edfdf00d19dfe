// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/series_store.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "aquafeed/error.hpp"
#include "binary_io.hpp"

namespace aquafeed {

namespace {

constexpr std::string_view kSnapshotMagic = "AQSN";
constexpr std::uint32_t kSnapshotVersion = 1;

}  // namespace

InMemorySeriesStore::InMemorySeriesStore(SeriesStoreConfig config) : config_(config) {
  if (config_.retention_ms <= 0) throw Error(ErrorKind::InvalidInput, "retention_ms", "must be > 0");
  if (config_.reorder_window_ms < 0) {
    throw Error(ErrorKind::InvalidInput, "reorder_window_ms", "must be >= 0");
  }
}

InMemorySeriesStore::Series& InMemorySeriesStore::series_for(const SeriesKey& key) {
  {
    std::shared_lock lock(series_mu_);
    if (auto it = series_.find(key); it != series_.end()) return *it->second;
  }
  std::unique_lock lock(series_mu_);
  auto& slot = series_[key];
  if (!slot) slot = std::make_unique<Series>();
  return *slot;
}

const InMemorySeriesStore::Series* InMemorySeriesStore::find_series(const SeriesKey& key) const {
  std::shared_lock lock(series_mu_);
  auto it = series_.find(key);
  return it == series_.end() ? nullptr : it->second.get();
}

bool InMemorySeriesStore::mark_seen(const TelemetryReading& reading) {
  std::lock_guard lock(dedup_mu_);
  DeviceSeq& dev = devices_[{reading.tank_id, reading.device_id}];
  if (reading.seq <= dev.floor_seq || dev.seen.count(reading.seq)) return false;
  dev.seen.emplace(reading.seq, reading.ts_ms);
  dev.latest_ts = std::max(dev.latest_ts, reading.ts_ms);
  // Sequence numbers older than the reorder window collapse into the floor.
  const std::int64_t horizon = dev.latest_ts - config_.reorder_window_ms;
  while (!dev.seen.empty()) {
    auto first = dev.seen.begin();
    if (first->second >= horizon) break;
    dev.floor_seq = std::max(dev.floor_seq, first->first);
    dev.seen.erase(first);
  }
  return true;
}

IngestResult InMemorySeriesStore::ingest(const TelemetryReading& reading) {
  auto count = [&](IngestResult r) {
    std::lock_guard lock(stats_mu_);
    switch (r) {
      case IngestResult::Stored: ++stats_.stored; break;
      case IngestResult::Duplicate: ++stats_.duplicates; break;
      case IngestResult::TooOld: ++stats_.dropped_too_old; break;
    }
    return r;
  };

  Series& s = series_for({reading.tank_id, reading.kind});
  std::unique_lock lock(s.mu);
  if (s.latest_ts != INT64_MIN) {
    const std::int64_t window = std::min(config_.reorder_window_ms, config_.retention_ms);
    if (reading.ts_ms < s.latest_ts - window) return count(IngestResult::TooOld);
  }
  if (!mark_seen(reading)) return count(IngestResult::Duplicate);

  const SeriesPoint p{reading.ts_ms, reading.value};
  auto pos = std::upper_bound(s.points.begin(), s.points.end(), p.ts_ms,
                              [](std::int64_t ts, const SeriesPoint& q) { return ts < q.ts_ms; });
  s.points.insert(pos, p);
  s.latest_ts = std::max(s.latest_ts, reading.ts_ms);

  const std::int64_t cutoff = s.latest_ts - config_.retention_ms;
  while (!s.points.empty() && s.points.front().ts_ms < cutoff) s.points.pop_front();
  while (s.points.size() > config_.max_points_per_series) s.points.pop_front();
  return count(IngestResult::Stored);
}

std::vector<SeriesPoint> InMemorySeriesStore::query_range(const std::string& tank_id, ReadingKind kind,
                                                          std::int64_t from_ts,
                                                          std::int64_t to_ts) const {
  if (from_ts > to_ts) throw Error(ErrorKind::InvalidInput, "from_ts", "must be <= to_ts");
  const Series* s = find_series({tank_id, kind});
  if (!s) return {};
  std::shared_lock lock(s->mu);
  auto lo = std::lower_bound(s->points.begin(), s->points.end(), from_ts,
                             [](const SeriesPoint& q, std::int64_t ts) { return q.ts_ms < ts; });
  auto hi = std::upper_bound(lo, s->points.end(), to_ts,
                             [](std::int64_t ts, const SeriesPoint& q) { return ts < q.ts_ms; });
  return std::vector<SeriesPoint>(lo, hi);
}

StoreStats InMemorySeriesStore::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

void InMemorySeriesStore::save_snapshot(const std::filesystem::path& path) const {
  binary::Writer w;
  w.bytes(kSnapshotMagic);
  w.u32(kSnapshotVersion);
  {
    std::shared_lock lock(series_mu_);
    w.u32(static_cast<std::uint32_t>(series_.size()));
    for (const auto& [key, s] : series_) {
      std::shared_lock slock(s->mu);
      w.str16(key.first);
      w.u8(static_cast<std::uint8_t>(key.second));
      w.i64(s->latest_ts);
      w.u64(s->points.size());
      for (const auto& p : s->points) {
        w.i64(p.ts_ms);
        w.f64(p.value);
      }
    }
  }
  {
    std::lock_guard lock(dedup_mu_);
    w.u32(static_cast<std::uint32_t>(devices_.size()));
    for (const auto& [key, dev] : devices_) {
      w.str16(key.first);
      w.str16(key.second);
      w.i64(dev.floor_seq);
      w.i64(dev.latest_ts);
      w.u32(static_cast<std::uint32_t>(dev.seen.size()));
      for (const auto& [seq, ts] : dev.seen) {
        w.i64(seq);
        w.i64(ts);
      }
    }
  }

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, tmp, "cannot open for writing");
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    if (!out) throw Error(ErrorKind::Io, tmp, "write failed");
  }
  std::filesystem::rename(tmp, path);
}

void InMemorySeriesStore::load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, path.string(), "cannot open file");
  const std::string data((std::istreambuf_iterator<char>(in)), {});
  binary::Reader r(data, path.string());
  if (r.bytes(4) != kSnapshotMagic) r.fail("bad magic, expected AQSN");
  if (const auto v = r.u32(); v != kSnapshotVersion) r.fail("unsupported version " + std::to_string(v));

  std::map<SeriesKey, std::unique_ptr<Series>> series;
  const std::uint32_t n_series = r.u32();
  for (std::uint32_t i = 0; i < n_series; ++i) {
    std::string tank = r.str16();
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(ReadingKind::Temperature)) r.fail("unknown reading kind");
    auto s = std::make_unique<Series>();
    s->latest_ts = r.i64();
    const std::uint64_t n = r.u64();
    if (n > r.remaining() / 16) r.fail("point count exceeds file size");
    for (std::uint64_t k = 0; k < n; ++k) {
      SeriesPoint p;
      p.ts_ms = r.i64();
      p.value = r.f64();
      s->points.push_back(p);
    }
    series[{std::move(tank), static_cast<ReadingKind>(kind)}] = std::move(s);
  }
  std::map<DeviceKey, DeviceSeq> devices;
  const std::uint32_t n_dev = r.u32();
  for (std::uint32_t i = 0; i < n_dev; ++i) {
    std::string tank = r.str16();
    std::string device = r.str16();
    DeviceSeq dev;
    dev.floor_seq = r.i64();
    dev.latest_ts = r.i64();
    const std::uint32_t n = r.u32();
    for (std::uint32_t k = 0; k < n; ++k) {
      const std::int64_t seq = r.i64();
      dev.seen[seq] = r.i64();
    }
    devices[{std::move(tank), std::move(device)}] = std::move(dev);
  }
  if (!r.done()) r.fail("trailing bytes");

  std::unique_lock lock(series_mu_);
  std::lock_guard dlock(dedup_mu_);
  series_ = std::move(series);
  devices_ = std::move(devices);
}

}  // namespace aquafeed
