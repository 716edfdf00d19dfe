// SPDX-License-Identifier: Apache-2.0
#include "aquafeed/biometrics.hpp"

#include <cmath>
#include <numeric>

#include "aquafeed/error.hpp"

namespace aquafeed {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void BiometricCoefficients::validate() const {
  if (!positive_finite(a)) throw Error(ErrorKind::InvalidInput, "a", "must be > 0");
  if (!positive_finite(b)) throw Error(ErrorKind::InvalidInput, "b", "must be > 0");
}

std::string_view to_string(KeypointLabel label) {
  switch (label) {
    case KeypointLabel::Mouth: return "mouth";
    case KeypointLabel::Peduncle: return "peduncle";
    case KeypointLabel::Belly: return "belly";
    case KeypointLabel::Back: return "back";
  }
  return "?";
}

std::optional<KeypointLabel> keypoint_label_from_string(std::string_view s) {
  if (s == "mouth") return KeypointLabel::Mouth;
  if (s == "peduncle") return KeypointLabel::Peduncle;
  if (s == "belly") return KeypointLabel::Belly;
  if (s == "back") return KeypointLabel::Back;
  return std::nullopt;
}

std::string_view to_string(LengthMethod m) {
  return m == LengthMethod::WorldEuclidean ? "world-euclidean" : "eq3-literal";
}

std::optional<LengthMethod> length_method_from_string(std::string_view s) {
  if (s == "world-euclidean") return LengthMethod::WorldEuclidean;
  if (s == "eq3-literal") return LengthMethod::Eq3Literal;
  return std::nullopt;
}

void CameraIntrinsics::validate() const {
  if (!positive_finite(focal_px)) throw Error(ErrorKind::InvalidInput, "focal_px", "must be > 0");
  if (image_width <= 0) throw Error(ErrorKind::InvalidInput, "image_width", "must be > 0");
  if (image_height <= 0) throw Error(ErrorKind::InvalidInput, "image_height", "must be > 0");
}

DepthMap::DepthMap(int width, int height, std::vector<float> depth)
    : width_(width), height_(height), depth_(std::move(depth)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::InvalidInput, "depth_map", "dimensions must be positive");
  }
  if (depth_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::InvalidInput, "depth_map", "grid size does not match width x height");
  }
  for (std::size_t i = 0; i < depth_.size(); ++i) {
    if (!(std::isfinite(depth_[i]) && depth_[i] > 0.0f)) {
      throw Error(ErrorKind::InvalidInput, "depth_map[" + std::to_string(i) + "]",
                  "depth must be finite and > 0");
    }
  }
}

DepthMap DepthMap::uniform(int width, int height, float depth_m) {
  return DepthMap(width, height,
                  std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                         static_cast<std::size_t>(std::max(height, 0)),
                                     depth_m));
}

bool DepthMap::contains(double x, double y) const noexcept {
  return x >= 0.0 && y >= 0.0 && x < width_ && y < height_;
}

double DepthMap::at(double x, double y) const {
  if (!contains(x, y)) {
    throw Error(ErrorKind::InvalidInput, "keypoint", "outside depth map bounds");
  }
  const auto col = static_cast<std::size_t>(x);
  const auto row = static_cast<std::size_t>(y);
  return depth_[row * static_cast<std::size_t>(width_) + col];
}

WorldPoint project_to_world(const PixelKeypoint& kp, double depth_m, const CameraIntrinsics& cam) {
  if (!positive_finite(depth_m)) throw Error(ErrorKind::InvalidInput, "depth", "must be > 0");
  if (!positive_finite(cam.focal_px)) {
    throw Error(ErrorKind::InvalidInput, "focal_px", "must be > 0");
  }
  // No principal-point offset: for equal-depth pairs it cancels in the length.
  return WorldPoint{kp.x * depth_m / cam.focal_px, kp.y * depth_m / cam.focal_px, depth_m};
}

LengthEstimate estimate_length(const PixelKeypoint& mouth, const PixelKeypoint& peduncle,
                               const DepthMap& depth, const CameraIntrinsics& cam,
                               LengthMethod method) {
  cam.validate();
  for (const auto* kp : {&mouth, &peduncle}) {
    if (!depth.contains(kp->x, kp->y)) {
      throw Error(ErrorKind::InvalidInput, std::string(to_string(kp->label)),
                  "keypoint outside depth map bounds");
    }
  }
  const WorldPoint head = project_to_world(mouth, depth.at(mouth.x, mouth.y), cam);
  const WorldPoint tail = project_to_world(peduncle, depth.at(peduncle.x, peduncle.y), cam);
  const double distance_m = std::hypot(head.x - tail.x, head.y - tail.y, head.z - tail.z);
  if (!(distance_m > 0.0)) {
    throw Error(ErrorKind::DegenerateDetection, "keypoints", "mouth and peduncle coincide");
  }

  LengthEstimate out;
  out.method = method;
  out.length_cm = method == LengthMethod::WorldEuclidean ? distance_m * 100.0
                                                         : cam.focal_px / distance_m;
  if (!positive_finite(out.length_cm)) {
    throw Error(ErrorKind::DegenerateDetection, "length_cm", "non-finite length");
  }
  return out;
}

WeightEstimate weight_from_length(const LengthEstimate& length, const BiometricCoefficients& coeffs) {
  if (!positive_finite(length.length_cm)) {
    throw Error(ErrorKind::InvalidInput, "length_cm", "must be > 0");
  }
  coeffs.validate();
  return WeightEstimate{coeffs.a * std::pow(length.length_cm, coeffs.b)};
}

LengthEstimate length_from_weight(const WeightEstimate& weight, const BiometricCoefficients& coeffs) {
  if (!positive_finite(weight.weight_g)) {
    throw Error(ErrorKind::InvalidInput, "weight_g", "must be > 0");
  }
  coeffs.validate();
  return LengthEstimate{std::pow(weight.weight_g / coeffs.a, 1.0 / coeffs.b),
                        LengthMethod::WorldEuclidean};
}

FeedingBandTable::FeedingBandTable(std::vector<FeedingBand> bands) : bands_(std::move(bands)) {
  if (bands_.empty()) throw Error(ErrorKind::InvalidInput, "bands", "table is empty");
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    const auto& band = bands_[i];
    const std::string where = "bands[" + std::to_string(i) + "]";
    if (!(band.percent_min >= 0.0 && band.percent_min <= band.percent_max)) {
      throw Error(ErrorKind::InvalidInput, where, "percent_min must be <= percent_max");
    }
    if (band.percent_override && !(*band.percent_override >= 0.0)) {
      throw Error(ErrorKind::InvalidInput, where, "percent override must be >= 0");
    }
    const bool last = i + 1 == bands_.size();
    if (last != !band.upper_g.has_value()) {
      throw Error(ErrorKind::InvalidInput, where, "only the last band is open above");
    }
    if (band.upper_g && !(*band.upper_g > band.lower_g)) {
      throw Error(ErrorKind::InvalidInput, where, "upper must exceed lower");
    }
    if (i == 0 && band.lower_g != 0.0) {
      throw Error(ErrorKind::InvalidInput, where, "first band must start at 0 g");
    }
    if (i > 0 && bands_[i - 1].upper_g != band.lower_g) {
      throw Error(ErrorKind::InvalidInput, where, "bands must be contiguous");
    }
  }
}

FeedingBandTable FeedingBandTable::tilapia_default() {
  return FeedingBandTable({
      {0.0, 1.0, 10.0, 30.0, std::nullopt},
      {1.0, 5.0, 6.0, 10.0, std::nullopt},
      {5.0, 20.0, 4.0, 6.0, std::nullopt},
      {20.0, 100.0, 3.0, 4.0, std::nullopt},
      {100.0, std::nullopt, 1.5, 3.0, std::nullopt},
  });
}

RationPercent ration_percent(double weight_g, const FeedingBandTable& table) {
  if (!positive_finite(weight_g)) throw Error(ErrorKind::InvalidInput, "weight_g", "must be > 0");
  const auto& bands = table.bands();
  // Half-open [lower, upper); the last band is open above.
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (!bands[i].upper_g || weight_g < *bands[i].upper_g) {
      return RationPercent{i, bands[i].percent()};
    }
  }
  return RationPercent{bands.size() - 1, bands.back().percent()};
}

double RationPlan::estimated_biomass_g() const {
  if (per_fish.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& f : per_fish) sum += f.weight_g;
  return fish_count * (sum / static_cast<double>(per_fish.size()));
}

RationPlan build_ration_plan(std::span<const WeightEstimate> weights, int fish_count,
                             const FeedingBandTable& table) {
  if (weights.empty()) throw Error(ErrorKind::InvalidInput, "weights", "no measured fish");
  if (fish_count < 0) throw Error(ErrorKind::InvalidInput, "fish_count", "must be >= 0");

  RationPlan plan;
  plan.per_fish.reserve(weights.size());
  double sum = 0.0;
  for (const auto& w : weights) {
    const RationPercent rp = ration_percent(w.weight_g, table);
    FishRation fr{w.weight_g, rp.band_index, rp.percent, w.weight_g * rp.percent / 100.0};
    sum += fr.grams_per_day;
    plan.per_fish.push_back(fr);
  }
  plan.average_grams_per_day = sum / static_cast<double>(weights.size());
  plan.fish_count = fish_count;
  plan.total_grams_per_day = fish_count * plan.average_grams_per_day;
  plan.no_fish_detected = fish_count == 0;
  return plan;
}

}  // namespace aquafeed
