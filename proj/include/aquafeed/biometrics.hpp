// SPDX-License-Identifier: Apache-2.0
#pragma once

// Pixel keypoints -> world coordinates -> standard length -> weight -> daily
// feed ration. Everything here is a pure function over immutable inputs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aquafeed {

// Length-weight relation W = a * L^b, L in centimeters, W in grams.
struct BiometricCoefficients {
  double a = 0.014;
  double b = 3.02;

  void validate() const;
  bool operator==(const BiometricCoefficients&) const = default;
};

enum class KeypointLabel { Mouth, Peduncle, Belly, Back };

std::string_view to_string(KeypointLabel label);
std::optional<KeypointLabel> keypoint_label_from_string(std::string_view s);

struct PixelKeypoint {
  double x = 0.0;  // column, px
  double y = 0.0;  // row, px
  KeypointLabel label = KeypointLabel::Mouth;

  bool operator==(const PixelKeypoint&) const = default;
};

struct CameraIntrinsics {
  double focal_px = 0.0;
  int image_width = 0;
  int image_height = 0;

  void validate() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

// Row-major per-pixel depth in meters.
class DepthMap {
 public:
  DepthMap(int width, int height, std::vector<float> depth);
  static DepthMap uniform(int width, int height, float depth_m);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const float> values() const noexcept { return depth_; }

  bool contains(double x, double y) const noexcept;
  // Depth at the pixel containing (x, y); throws InvalidInput when outside.
  double at(double x, double y) const;

 private:
  int width_;
  int height_;
  std::vector<float> depth_;
};

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const WorldPoint&) const = default;
};

enum class LengthMethod { WorldEuclidean, Eq3Literal };

std::string_view to_string(LengthMethod m);
std::optional<LengthMethod> length_method_from_string(std::string_view s);

struct LengthEstimate {
  double length_cm = 0.0;
  LengthMethod method = LengthMethod::WorldEuclidean;

  bool operator==(const LengthEstimate&) const = default;
};

struct WeightEstimate {
  double weight_g = 0.0;

  bool operator==(const WeightEstimate&) const = default;
};

struct FeedingBand {
  double lower_g = 0.0;
  std::optional<double> upper_g;  // nullopt: open above
  double percent_min = 0.0;
  double percent_max = 0.0;
  // Point estimate used for rations; midpoint of the range unless overridden.
  std::optional<double> percent_override;

  double percent() const noexcept {
    return percent_override ? *percent_override : 0.5 * (percent_min + percent_max);
  }
  bool operator==(const FeedingBand&) const = default;
};

class FeedingBandTable {
 public:
  explicit FeedingBandTable(std::vector<FeedingBand> bands);

  // Daily allowances for tilapia, % of body weight per day.
  static FeedingBandTable tilapia_default();

  const std::vector<FeedingBand>& bands() const noexcept { return bands_; }
  bool operator==(const FeedingBandTable&) const = default;

 private:
  std::vector<FeedingBand> bands_;
};

struct RationPercent {
  std::size_t band_index = 0;
  double percent = 0.0;

  bool operator==(const RationPercent&) const = default;
};

struct FishRation {
  double weight_g = 0.0;
  std::size_t band_index = 0;
  double percent_used = 0.0;
  double grams_per_day = 0.0;

  bool operator==(const FishRation&) const = default;
};

struct RationPlan {
  std::vector<FishRation> per_fish;
  double average_grams_per_day = 0.0;
  int fish_count = 0;
  double total_grams_per_day = 0.0;
  bool no_fish_detected = false;

  // Mean measured weight times the count.
  double estimated_biomass_g() const;
  bool operator==(const RationPlan&) const = default;
};

WorldPoint project_to_world(const PixelKeypoint& kp, double depth_m, const CameraIntrinsics& cam);

LengthEstimate estimate_length(const PixelKeypoint& mouth, const PixelKeypoint& peduncle,
                               const DepthMap& depth, const CameraIntrinsics& cam,
                               LengthMethod method = LengthMethod::WorldEuclidean);

WeightEstimate weight_from_length(const LengthEstimate& length,
                                  const BiometricCoefficients& coeffs = {});

// Inverse of weight_from_length: L = (W / a)^(1 / b).
LengthEstimate length_from_weight(const WeightEstimate& weight,
                                  const BiometricCoefficients& coeffs = {});

RationPercent ration_percent(double weight_g, const FeedingBandTable& table);

RationPlan build_ration_plan(std::span<const WeightEstimate> weights, int fish_count,
                             const FeedingBandTable& table);

}  // namespace aquafeed
