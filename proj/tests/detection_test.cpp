// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "aquafeed/detection.hpp"
#include "aquafeed/error.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace aquafeed {
namespace {

using testing::fixture;
using testing::slurp;

constexpr const char* kMinimal = R"({
  "camera_id": "A", "frame_ts_ms": 1000, "image_width": 416, "image_height": 416, "count": 1,
  "fish": [{"fish_id": 7, "confidence": 0.9, "keypoints": [
    {"label": "mouth", "x": 10, "y": 20}, {"label": "peduncle", "x": 50, "y": 20},
    {"label": "belly", "x": 30, "y": 30}, {"label": "back", "x": 30, "y": 10}]}],
  "extra": "ignored"
})";

std::vector<TruthFish> grid_truth(int n) {
  std::vector<TruthFish> truth;
  for (int i = 0; i < n; ++i) {
    const double x = 20.0 + 25.0 * (i % 10), y = 30.0 + 60.0 * (i / 10);
    truth.push_back({i + 1,
                     {{{x, y, KeypointLabel::Mouth},
                       {x + 15, y, KeypointLabel::Peduncle},
                       {x + 7, y + 4, KeypointLabel::Belly},
                       {x + 7, y - 4, KeypointLabel::Back}}}});
  }
  return truth;
}

TEST(Parse, MinimalDocument) {
  const FrameDetections f = parse_frame_detections(kMinimal);
  EXPECT_EQ(f.camera_id, CameraId::A);
  EXPECT_EQ(f.frame_ts_ms, 1000);
  ASSERT_EQ(f.fish.size(), 1u);
  EXPECT_EQ(f.fish[0].fish_id, 7);
  EXPECT_EQ(f.fish[0].peduncle(), (PixelKeypoint{50, 20, KeypointLabel::Peduncle}));
  EXPECT_EQ(f.count, 1);
}

TEST(Parse, MissingPeduncleIsNamed) {
  auto doc = nlohmann::json::parse(kMinimal);
  doc["fish"][0]["keypoints"].erase(1);
  try {
    parse_frame_detections(doc.dump());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("peduncle"), std::string::npos) << e.what();
  }
}

TEST(Parse, MissingRequiredFieldsAndBadValues) {
  for (const char* key : {"camera_id", "frame_ts_ms", "image_width", "count", "fish"}) {
    auto doc = nlohmann::json::parse(kMinimal);
    doc.erase(key);
    try {
      parse_frame_detections(doc.dump());
      FAIL() << key;
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  }
  auto out_of_bounds = nlohmann::json::parse(kMinimal);
  out_of_bounds["fish"][0]["keypoints"][0]["x"] = 416;
  EXPECT_THROW(parse_frame_detections(out_of_bounds.dump()), Error);
  auto wrong_size = nlohmann::json::parse(kMinimal);
  wrong_size["image_width"] = 640;
  EXPECT_THROW(parse_frame_detections(wrong_size.dump()), Error);
  auto dup = nlohmann::json::parse(kMinimal);
  dup["fish"][0]["keypoints"][1]["label"] = "mouth";
  EXPECT_THROW(parse_frame_detections(dup.dump()), Error);
  EXPECT_THROW(parse_frame_detections("{not json"), Error);
  EXPECT_THROW(parse_frame_detections("[]"), Error);
}

TEST(Parse, ThreeFishFixture) {
  const FrameDetections f = read_frame_detections(fixture("three_fish.json"));
  EXPECT_EQ(f.fish.size(), 3u);
  EXPECT_EQ(f.count, 3);
}

TEST(Parse, SerializeRoundTrip) {
  for (const char* name : {"three_fish.json", "detections_a.json", "detections_b.json", "detections_empty_a.json"}) {
    const FrameDetections f = read_frame_detections(fixture(name));
    const std::string text = serialize_frame_detections(f);
    EXPECT_EQ(parse_frame_detections(text), f) << name;
    EXPECT_EQ(nlohmann::json::parse(text), nlohmann::json::parse(slurp(fixture(name)))) << name;
  }
}

TEST(Depth, RoundTripAndCorruption) {
  const DepthMap m(3, 2, {0.5f, 0.6f, 0.7f, 0.8f, 0.9f, 1.0f});
  auto bytes = serialize_depth_map(m);
  const DepthMap back = parse_depth_map(bytes);
  EXPECT_EQ(std::vector<float>(back.values().begin(), back.values().end()),
            std::vector<float>(m.values().begin(), m.values().end()));

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(parse_depth_map(bad_magic), Error);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 2);
  try {
    parse_depth_map(truncated, "d.dpth");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Corrupt);
    EXPECT_NE(e.field().find("d.dpth"), std::string::npos);
    EXPECT_NE(e.field().find("byte offset"), std::string::npos);
  }
  auto negative = bytes;
  negative[12 + 4 * 2 + 3] = 0xBF;  // third sample becomes negative
  try {
    parse_depth_map(negative, "d.dpth");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(e.field().find("byte offset 20"), std::string::npos) << e.what();
  }
}

TEST(Fusion, WorkedExamples) {
  EXPECT_EQ(fuse_counts(12, 13), 13);
  EXPECT_EQ(fuse_counts(10, 10), 10);
  EXPECT_EQ(fuse_counts(0, 1), 1);
  EXPECT_EQ(fuse_counts(0, 0), 0);
  FrameDetections a, b;
  a.frame_ts_ms = 0;
  b.camera_id = CameraId::B;
  b.frame_ts_ms = 600;
  try {
    fuse_dual_camera(a, b, 500);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnpairedFrame);
  }
  EXPECT_NO_THROW(fuse_dual_camera(a, b, 600));
}

TEST(Fusion, SymmetryAndBounds) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cd(0, 1000);
  for (int i = 0; i < 10000; ++i) {
    const int x = cd(rng), y = cd(rng);
    const int f = fuse_counts(x, y);
    EXPECT_EQ(f, fuse_counts(y, x));
    EXPECT_GE(f, std::min(x, y));
    EXPECT_LE(f, std::max(x, y));
  }
}

TEST(Fusion, PoolsLengthsFromBothCameras) {
  FrameDetections a, b;
  a.count = 4;
  b.camera_id = CameraId::B;
  b.count = 5;
  b.frame_ts_ms = 10;
  const LengthEstimate la[] = {{10.0}}, lb[] = {{11.0}, {12.0}};
  const FusedObservation obs = fuse_dual_camera(a, b, 100, la, lb);
  EXPECT_EQ(obs.fused_count, 5);
  EXPECT_EQ(obs.lengths_cm.size(), 3u);
  EXPECT_EQ(obs.count_a, 4);
  EXPECT_EQ(obs.count_b, 5);
  EXPECT_FALSE(obs.degraded);
  const FusedObservation single = single_camera_observation(b, lb);
  EXPECT_TRUE(single.degraded);
  EXPECT_EQ(single.fused_count, 5);
}

TEST(MeasureFrame, RejectsDegenerateFishIndividually) {
  FrameDetections f = parse_frame_detections(kMinimal);
  FishKeypointSet degenerate = f.fish[0];
  degenerate.fish_id = 8;
  degenerate.keypoints[1].x = degenerate.keypoints[0].x;
  degenerate.keypoints[1].y = degenerate.keypoints[0].y;
  f.fish.push_back(degenerate);
  const CameraGeometry geo{{500.0, 416, 416}, DepthMap::uniform(416, 416, 0.5f)};
  const FrameMeasurement m = measure_frame(f, geo);
  ASSERT_EQ(m.lengths.size(), 1u);
  EXPECT_NEAR(m.lengths[0].length_cm, 40.0 * 0.5 / 500.0 * 100.0, 1e-12);
  ASSERT_EQ(m.rejected.size(), 1u);
  EXPECT_EQ(m.rejected[0].fish_id, 8);
}

TEST(Stub, ZeroNoiseIsIdentity) {
  const auto truth = grid_truth(13);
  const FrameDetections f = stub_detect(truth, {0.0, 0.0}, 42, CameraId::B, 77);
  ASSERT_EQ(f.fish.size(), truth.size());
  EXPECT_EQ(f.count, 13);
  EXPECT_EQ(f.camera_id, CameraId::B);
  for (std::size_t i = 0; i < truth.size(); ++i) EXPECT_EQ(f.fish[i].keypoints, truth[i].keypoints);
}

TEST(Stub, AllMissed) {
  const FrameDetections f = stub_detect(grid_truth(13), {1.0, 0.0}, 42);
  EXPECT_TRUE(f.fish.empty());
  EXPECT_EQ(f.count, 0);
}

TEST(Stub, MissRateMonteCarlo) {
  const auto truth = grid_truth(13);
  StubDetector det({0.05, 0.5}, 2024);
  std::size_t kept = 0;
  for (int i = 0; i < 1000; ++i) kept += det.detect(truth, CameraId::A, i).fish.size();
  const double miss = 1.0 - static_cast<double>(kept) / (1000.0 * 13);
  EXPECT_NEAR(miss, 0.05, 0.02);
}

TEST(Stub, DeterministicBytes) {
  const auto truth = grid_truth(20);
  const std::string x = serialize_frame_detections(stub_detect(truth, {0.1, 1.5}, 9));
  const std::string y = serialize_frame_detections(stub_detect(truth, {0.1, 1.5}, 9));
  EXPECT_EQ(x, y);
  EXPECT_NE(x, serialize_frame_detections(stub_detect(truth, {0.1, 1.5}, 10)));
}

TEST(Stub, NoiseValidation) {
  EXPECT_THROW((StubNoiseModel{1.5, 0.0}.validate()), Error);
  EXPECT_THROW((StubNoiseModel{0.1, -1.0}.validate()), Error);
}

}  // namespace
}  // namespace aquafeed
