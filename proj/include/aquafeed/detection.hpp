// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aquafeed/biometrics.hpp"

namespace aquafeed {

// Detection files carry coordinates in the resized frame only.
inline constexpr int kStandardImageSize = 416;

enum class CameraId { A, B };

std::string_view to_string(CameraId id);
std::optional<CameraId> camera_id_from_string(std::string_view s);

struct FishKeypointSet {
  int fish_id = 0;
  double confidence = 1.0;
  // Indexed by KeypointLabel: mouth, peduncle, belly, back.
  std::array<PixelKeypoint, 4> keypoints{};

  const PixelKeypoint& mouth() const { return keypoints[0]; }
  const PixelKeypoint& peduncle() const { return keypoints[1]; }
  bool operator==(const FishKeypointSet&) const = default;
};

struct FrameDetections {
  CameraId camera_id = CameraId::A;
  std::int64_t frame_ts_ms = 0;
  int image_width = kStandardImageSize;
  int image_height = kStandardImageSize;
  std::vector<FishKeypointSet> fish;
  // From the counting model; independent of fish.size().
  int count = 0;

  void validate() const;
  bool operator==(const FrameDetections&) const = default;
};

FrameDetections parse_frame_detections(std::string_view document);
std::string serialize_frame_detections(const FrameDetections& frame);
FrameDetections read_frame_detections(const std::filesystem::path& path);

// Depth map file: "DPTH", u32 width, u32 height (LE), then width*height LE
// float32 meters, row-major. `source` is used in error messages.
DepthMap parse_depth_map(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");
std::vector<std::uint8_t> serialize_depth_map(const DepthMap& map);
DepthMap read_depth_map(const std::filesystem::path& path);
void write_depth_map(const std::filesystem::path& path, const DepthMap& map);

struct CameraGeometry {
  CameraIntrinsics intrinsics;
  DepthMap depth;
};

struct RejectedFish {
  int fish_id = 0;
  std::string reason;

  bool operator==(const RejectedFish&) const = default;
};

struct FrameMeasurement {
  std::vector<LengthEstimate> lengths;
  std::vector<RejectedFish> rejected;
};

// Mouth-to-peduncle length for every fish in the frame. Degenerate fish are
// rejected individually and the rest still contribute.
FrameMeasurement measure_frame(const FrameDetections& frame, const CameraGeometry& geometry,
                               LengthMethod method = LengthMethod::WorldEuclidean);

struct FusedObservation {
  std::int64_t frame_ts_ms = 0;
  int fused_count = 0;
  std::vector<LengthEstimate> lengths_cm;
  std::optional<int> count_a;
  std::optional<int> count_b;
  // Single-camera observation (no partner frame within tolerance).
  bool degraded = false;

  bool operator==(const FusedObservation&) const = default;
};

// (a + b) / 2 rounded half up, for non-negative counts.
int fuse_counts(int a, int b);

// Throws UnpairedFrame when the timestamps differ by more than the tolerance.
FusedObservation fuse_dual_camera(const FrameDetections& a, const FrameDetections& b,
                                  std::int64_t pairing_tolerance_ms,
                                  std::span<const LengthEstimate> lengths_a = {},
                                  std::span<const LengthEstimate> lengths_b = {});

FusedObservation single_camera_observation(const FrameDetections& frame,
                                           std::span<const LengthEstimate> lengths = {});

struct StubNoiseModel {
  double p_miss = 0.0;
  double pixel_noise_std = 0.0;

  void validate() const;
};

// Ground-truth keypoints for one fish as rendered into a camera view.
struct TruthFish {
  int fish_id = 0;
  std::array<PixelKeypoint, 4> keypoints{};
};

// Stands in for the keypoint and counting networks: drops each fish with
// probability p_miss and jitters surviving keypoints with gaussian pixel noise.
class StubDetector {
 public:
  StubDetector(StubNoiseModel noise, std::uint64_t seed);

  FrameDetections detect(std::span<const TruthFish> truth, CameraId camera,
                         std::int64_t frame_ts_ms);

 private:
  StubNoiseModel noise_;
  std::mt19937_64 rng_;
};

FrameDetections stub_detect(std::span<const TruthFish> truth, const StubNoiseModel& noise,
                            std::uint64_t seed, CameraId camera = CameraId::A,
                            std::int64_t frame_ts_ms = 0);

}  // namespace aquafeed
