// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/event_log.hpp"

#include <unistd.h>
#include <zlib.h>

#include <fstream>
#include <iterator>

#include "aquafeed/error.hpp"
#include "binary_io.hpp"

namespace aquafeed {

namespace {

constexpr std::string_view kMagic = "AQLG";
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 8;
constexpr std::uint32_t kMaxRecord = 64u << 20;

std::uint32_t crc_of(std::string_view s) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

std::string header() {
  binary::Writer w;
  w.bytes(kMagic);
  w.u32(kVersion);
  return w.take();
}

std::uint32_t le32(std::string_view s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
  return v;
}

}  // namespace

LogScan scan_event_log(const std::filesystem::path& path) {
  LogScan scan;
  std::ifstream in(path, std::ios::binary);
  if (!in) return scan;
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.empty()) return scan;

  auto corrupt = [&](std::uint64_t offset, std::string reason) {
    scan.corruption = LogCorruption{offset, scan.events.empty() ? 0 : scan.events.back().seq,
                                    std::move(reason)};
  };

  if (data.size() < kHeaderSize || data.compare(0, 4, kMagic) != 0) {
    corrupt(0, "bad header");
    return scan;
  }
  if (le32(data, 4) != kVersion) {
    corrupt(4, "unsupported version " + std::to_string(le32(data, 4)));
    return scan;
  }

  std::size_t pos = kHeaderSize;
  scan.valid_bytes = pos;
  while (pos < data.size()) {
    if (data.size() - pos < 8) {
      corrupt(pos, "truncated record header");
      break;
    }
    const std::uint32_t len = le32(data, pos);
    const std::uint32_t crc = le32(data, pos + 4);
    if (len == 0 || len > kMaxRecord) {
      corrupt(pos, "implausible record length " + std::to_string(len));
      break;
    }
    if (data.size() - pos - 8 < len) {
      corrupt(pos, "truncated record");
      break;
    }
    const std::string_view payload(data.data() + pos + 8, len);
    if (crc_of(payload) != crc) {
      corrupt(pos, "checksum mismatch");
      break;
    }
    const char tag = payload[0];
    try {
      if (tag == 'E') {
        scan.events.push_back(event_from_json(payload.substr(1)));
        ++scan.events_after_snapshot;
      } else if (tag == 'S') {
        scan.snapshot = tank_state_from_json(payload.substr(1));
        scan.events_after_snapshot = 0;
      } else {
        corrupt(pos, "unknown record tag");
        break;
      }
    } catch (const Error& e) {
      corrupt(pos, e.what());
      break;
    }
    pos += 8 + len;
    scan.valid_bytes = pos;
  }
  return scan;
}

RecoveryReport replay_scan(const LogScan& scan, TankState initial) {
  RecoveryReport r;
  r.valid_bytes = scan.valid_bytes;
  r.corruption = scan.corruption;
  if (scan.snapshot) {
    r.state = *scan.snapshot;
    r.used_snapshot = true;
  } else {
    r.state = std::move(initial);
  }
  const std::size_t first = scan.events.size() - scan.events_after_snapshot;
  for (std::size_t i = first; i < scan.events.size(); ++i) {
    apply(r.state, scan.events[i]);
    ++r.events_replayed;
  }
  return r;
}

RecoveryReport recover_tank_state(const std::filesystem::path& path, TankState initial) {
  return replay_scan(scan_event_log(path), std::move(initial));
}

EventLog::EventLog(std::filesystem::path path, std::optional<std::uint64_t> truncate_to,
                   bool sync_each_write)
    : path_(std::move(path)), sync_(sync_each_write) {
  std::error_code ec;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path(), ec);
  const bool exists = std::filesystem::exists(path_, ec);
  if (exists && truncate_to) {
    std::filesystem::resize_file(path_, *truncate_to, ec);
    if (ec) throw Error(ErrorKind::Io, path_.string(), "cannot truncate: " + ec.message());
  }
  const bool fresh = !exists || std::filesystem::file_size(path_, ec) < kHeaderSize;
  file_ = std::fopen(path_.c_str(), fresh ? "wb" : "ab");
  if (file_ == nullptr) throw Error(ErrorKind::Io, path_.string(), "cannot open event log");
  if (fresh) {
    const std::string h = header();
    std::fwrite(h.data(), 1, h.size(), file_);
    std::fflush(file_);
  }
}

EventLog::~EventLog() {
  if (file_ != nullptr) std::fclose(file_);
}

void EventLog::write_record(char tag, const std::string& json) {
  std::string payload;
  payload.reserve(json.size() + 1);
  payload.push_back(tag);
  payload += json;
  binary::Writer w;
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.u32(crc_of(payload));
  w.bytes(payload);
  const std::string& rec = w.data();
  if (std::fwrite(rec.data(), 1, rec.size(), file_) != rec.size() || std::fflush(file_) != 0) {
    throw Error(ErrorKind::Io, path_.string(), "short write");
  }
  if (sync_) ::fdatasync(fileno(file_));
}

void EventLog::append(const Event& event) {
  write_record('E', event_to_json(event));
  ++since_snapshot_;
}

void EventLog::append_snapshot(const TankState& state) {
  write_record('S', tank_state_to_json(state));
  since_snapshot_ = 0;
}

}  // namespace aquafeed
