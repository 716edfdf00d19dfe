// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/detection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "aquafeed/error.hpp"
#include "json_util.hpp"

namespace aquafeed {

using nlohmann::json;
namespace ju = json_util;

std::string_view to_string(CameraId id) { return id == CameraId::A ? "A" : "B"; }

std::optional<CameraId> camera_id_from_string(std::string_view s) {
  if (s == "A") return CameraId::A;
  if (s == "B") return CameraId::B;
  return std::nullopt;
}

void FrameDetections::validate() const {
  if (image_width != kStandardImageSize || image_height != kStandardImageSize) {
    throw Error(ErrorKind::Validation, "image_width",
                "frames must be resized to " + std::to_string(kStandardImageSize) + "x" +
                    std::to_string(kStandardImageSize));
  }
  if (count < 0) throw Error(ErrorKind::Validation, "count", "must be >= 0");
  for (std::size_t i = 0; i < fish.size(); ++i) {
    const auto& f = fish[i];
    const std::string where = "fish[" + std::to_string(i) + "]";
    if (!(f.confidence >= 0.0 && f.confidence <= 1.0)) {
      throw Error(ErrorKind::Validation, where + ".confidence", "must be in [0, 1]");
    }
    for (std::size_t k = 0; k < f.keypoints.size(); ++k) {
      const auto& kp = f.keypoints[k];
      const std::string kp_where = where + ".keypoints." + std::string(to_string(kp.label));
      if (kp.label != static_cast<KeypointLabel>(k)) {
        throw Error(ErrorKind::Validation, kp_where, "keypoint stored under the wrong label");
      }
      if (!(kp.x >= 0.0 && kp.x < image_width && kp.y >= 0.0 && kp.y < image_height)) {
        throw Error(ErrorKind::Validation, kp_where, "keypoint outside image bounds");
      }
    }
  }
}

FrameDetections parse_frame_detections(std::string_view document) {
  const json doc = ju::parse_document(document);
  if (!doc.is_object()) throw Error(ErrorKind::Parse, "$", "expected an object");

  FrameDetections frame;
  const std::string cam = ju::get_string(doc, "camera_id", "");
  const auto cam_id = camera_id_from_string(cam);
  if (!cam_id) throw Error(ErrorKind::Parse, "camera_id", "must be \"A\" or \"B\"");
  frame.camera_id = *cam_id;
  frame.frame_ts_ms = ju::get_int(doc, "frame_ts_ms", "");
  frame.image_width = ju::get_int32(doc, "image_width", "");
  frame.image_height = ju::get_int32(doc, "image_height", "");
  frame.count = ju::get_int32(doc, "count", "");

  const json& fish = ju::get_array(doc, "fish", "");
  frame.fish.reserve(fish.size());
  for (std::size_t i = 0; i < fish.size(); ++i) {
    const std::string path = "fish[" + std::to_string(i) + "]";
    const json& f = fish[i];
    FishKeypointSet set;
    set.fish_id = ju::get_int32(f, "fish_id", path);
    set.confidence = ju::get_double(f, "confidence", path);

    std::array<bool, 4> seen{};
    const json& kps = ju::get_array(f, "keypoints", path);
    for (std::size_t k = 0; k < kps.size(); ++k) {
      const std::string kp_path = path + ".keypoints[" + std::to_string(k) + "]";
      const std::string label_text = ju::get_string(kps[k], "label", kp_path);
      const auto label = keypoint_label_from_string(label_text);
      if (!label) throw Error(ErrorKind::Parse, kp_path + ".label", "unknown label \"" + label_text + "\"");
      const auto idx = static_cast<std::size_t>(*label);
      if (seen[idx]) throw Error(ErrorKind::Parse, kp_path + ".label", "duplicate label \"" + label_text + "\"");
      seen[idx] = true;
      set.keypoints[idx] = PixelKeypoint{ju::get_double(kps[k], "x", kp_path),
                                         ju::get_double(kps[k], "y", kp_path), *label};
    }
    for (std::size_t idx = 0; idx < seen.size(); ++idx) {
      if (!seen[idx]) {
        throw Error(ErrorKind::Parse,
                    path + ".keypoints." + std::string(to_string(static_cast<KeypointLabel>(idx))),
                    "missing keypoint");
      }
    }
    frame.fish.push_back(set);
  }

  frame.validate();
  return frame;
}

std::string serialize_frame_detections(const FrameDetections& frame) {
  nlohmann::ordered_json fish = nlohmann::ordered_json::array();
  for (const auto& f : frame.fish) {
    nlohmann::ordered_json kps = nlohmann::ordered_json::array();
    for (const auto& kp : f.keypoints) {
      kps.push_back(nlohmann::ordered_json{{"label", to_string(kp.label)}, {"x", kp.x}, {"y", kp.y}});
    }
    fish.push_back(nlohmann::ordered_json{{"fish_id", f.fish_id}, {"confidence", f.confidence}, {"keypoints", kps}});
  }
  nlohmann::ordered_json doc{{"camera_id", to_string(frame.camera_id)},
           {"frame_ts_ms", frame.frame_ts_ms},
           {"image_width", frame.image_width},
           {"image_height", frame.image_height},
           {"count", frame.count},
           {"fish", fish}};
  return doc.dump();
}

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, path.string(), "cannot open file");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t load_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

constexpr std::size_t kDepthHeaderSize = 12;

}  // namespace

FrameDetections read_frame_detections(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  try {
    return parse_frame_detections(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.field(), e.message());
  }
}

DepthMap parse_depth_map(std::span<const std::uint8_t> bytes, const std::string& source) {
  auto fail = [&](std::size_t offset, const std::string& msg) {
    return Error(ErrorKind::Corrupt, source + " @ byte offset " + std::to_string(offset), msg);
  };
  if (bytes.size() < kDepthHeaderSize) throw fail(bytes.size(), "truncated header");
  if (std::memcmp(bytes.data(), "DPTH", 4) != 0) throw fail(0, "bad magic, expected DPTH");
  const std::uint32_t width = load_u32_le(bytes.data() + 4);
  const std::uint32_t height = load_u32_le(bytes.data() + 8);
  if (width == 0 || height == 0 || width > 1u << 15 || height > 1u << 15) {
    throw fail(4, "implausible dimensions " + std::to_string(width) + "x" + std::to_string(height));
  }
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() < kDepthHeaderSize + 4 * n) {
    throw fail(bytes.size(), "truncated samples, expected " + std::to_string(kDepthHeaderSize + 4 * n) +
                                 " bytes");
  }
  if (bytes.size() > kDepthHeaderSize + 4 * n) throw fail(kDepthHeaderSize + 4 * n, "trailing bytes");

  std::vector<float> depth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t offset = kDepthHeaderSize + 4 * i;
    const float v = std::bit_cast<float>(load_u32_le(bytes.data() + offset));
    if (!(std::isfinite(v) && v > 0.0f)) throw fail(offset, "depth must be finite and > 0");
    depth[i] = v;
  }
  return DepthMap(static_cast<int>(width), static_cast<int>(height), std::move(depth));
}

std::vector<std::uint8_t> serialize_depth_map(const DepthMap& map) {
  std::vector<std::uint8_t> out{'D', 'P', 'T', 'H'};
  out.reserve(kDepthHeaderSize + 4 * map.values().size());
  store_u32_le(out, static_cast<std::uint32_t>(map.width()));
  store_u32_le(out, static_cast<std::uint32_t>(map.height()));
  for (float v : map.values()) store_u32_le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

DepthMap read_depth_map(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return parse_depth_map(bytes, path.string());
}

void write_depth_map(const std::filesystem::path& path, const DepthMap& map) {
  const auto bytes = serialize_depth_map(map);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, path.string(), "write failed");
}

FrameMeasurement measure_frame(const FrameDetections& frame, const CameraGeometry& geometry,
                               LengthMethod method) {
  FrameMeasurement out;
  for (const auto& fish : frame.fish) {
    try {
      out.lengths.push_back(
          estimate_length(fish.mouth(), fish.peduncle(), geometry.depth, geometry.intrinsics, method));
    } catch (const Error& e) {
      out.rejected.push_back(RejectedFish{fish.fish_id, e.what()});
    }
  }
  return out;
}

int fuse_counts(int a, int b) {
  if (a < 0 || b < 0) throw Error(ErrorKind::InvalidInput, "count", "must be >= 0");
  const auto sum = static_cast<std::int64_t>(a) + b;
  return static_cast<int>((sum + 1) / 2);
}

FusedObservation fuse_dual_camera(const FrameDetections& a, const FrameDetections& b,
                                  std::int64_t pairing_tolerance_ms,
                                  std::span<const LengthEstimate> lengths_a,
                                  std::span<const LengthEstimate> lengths_b) {
  const std::int64_t gap = a.frame_ts_ms > b.frame_ts_ms ? a.frame_ts_ms - b.frame_ts_ms
                                                         : b.frame_ts_ms - a.frame_ts_ms;
  if (gap > pairing_tolerance_ms) {
    throw Error(ErrorKind::UnpairedFrame, "frame_ts_ms",
                "gap of " + std::to_string(gap) + " ms exceeds tolerance of " +
                    std::to_string(pairing_tolerance_ms) + " ms");
  }
  const FrameDetections& cam_a = a.camera_id == CameraId::B && b.camera_id == CameraId::A ? b : a;
  const FrameDetections& cam_b = &cam_a == &a ? b : a;

  FusedObservation obs;
  obs.frame_ts_ms = std::max(a.frame_ts_ms, b.frame_ts_ms);
  obs.fused_count = fuse_counts(a.count, b.count);
  obs.count_a = cam_a.count;
  obs.count_b = cam_b.count;
  obs.lengths_cm.assign(lengths_a.begin(), lengths_a.end());
  obs.lengths_cm.insert(obs.lengths_cm.end(), lengths_b.begin(), lengths_b.end());
  return obs;
}

FusedObservation single_camera_observation(const FrameDetections& frame,
                                           std::span<const LengthEstimate> lengths) {
  FusedObservation obs;
  obs.frame_ts_ms = frame.frame_ts_ms;
  obs.fused_count = frame.count;
  (frame.camera_id == CameraId::A ? obs.count_a : obs.count_b) = frame.count;
  obs.lengths_cm.assign(lengths.begin(), lengths.end());
  obs.degraded = true;
  return obs;
}

void StubNoiseModel::validate() const {
  if (!(p_miss >= 0.0 && p_miss <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "p_miss", "must be in [0, 1]");
  }
  if (!(pixel_noise_std >= 0.0 && std::isfinite(pixel_noise_std))) {
    throw Error(ErrorKind::InvalidInput, "pixel_noise_std", "must be >= 0");
  }
}

StubDetector::StubDetector(StubNoiseModel noise, std::uint64_t seed) : noise_(noise), rng_(seed) {
  noise_.validate();
}

FrameDetections StubDetector::detect(std::span<const TruthFish> truth, CameraId camera,
                                     std::int64_t frame_ts_ms) {
  FrameDetections frame;
  frame.camera_id = camera;
  frame.frame_ts_ms = frame_ts_ms;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, noise_.pixel_noise_std > 0 ? noise_.pixel_noise_std : 1.0);
  const double kMaxCoord = std::nextafter(static_cast<double>(kStandardImageSize), 0.0);

  for (const auto& fish : truth) {
    // Always draw, so the sequence does not depend on p_miss edge values.
    const double u = unit(rng_);
    if (u < noise_.p_miss) continue;
    FishKeypointSet set;
    set.fish_id = fish.fish_id;
    set.confidence = 1.0;
    set.keypoints = fish.keypoints;
    if (noise_.pixel_noise_std > 0.0) {
      for (auto& kp : set.keypoints) {
        kp.x = std::clamp(kp.x + jitter(rng_), 0.0, kMaxCoord);
        kp.y = std::clamp(kp.y + jitter(rng_), 0.0, kMaxCoord);
      }
    }
    frame.fish.push_back(set);
  }
  frame.count = static_cast<int>(frame.fish.size());
  return frame;
}

FrameDetections stub_detect(std::span<const TruthFish> truth, const StubNoiseModel& noise,
                            std::uint64_t seed, CameraId camera, std::int64_t frame_ts_ms) {
  StubDetector detector(noise, seed);
  return detector.detect(truth, camera, frame_ts_ms);
}

}  // namespace aquafeed
