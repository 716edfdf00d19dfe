// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aquafeed/biometrics.hpp"
#include "aquafeed/error.hpp"

namespace aquafeed {
namespace {

const CameraIntrinsics kCam{500.0, 416, 416};

PixelKeypoint kp(double x, double y, KeypointLabel l = KeypointLabel::Mouth) { return {x, y, l}; }

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorKind::Conflict;
}

TEST(Projection, OriginMapsToDepthAxis) {
  EXPECT_EQ(project_to_world(kp(0, 0), 2.0, kCam), (WorldPoint{0, 0, 2.0}));
}

TEST(Projection, WorkedValues) {
  const WorldPoint p = project_to_world(kp(100, 200), 2.0, kCam);
  EXPECT_DOUBLE_EQ(p.x, 0.4);
  EXPECT_DOUBLE_EQ(p.y, 0.8);
  EXPECT_DOUBLE_EQ(p.z, 2.0);
  const WorldPoint q = project_to_world(kp(100, 200), 4.0, kCam);
  EXPECT_DOUBLE_EQ(q.x, 0.8);
  EXPECT_DOUBLE_EQ(q.y, 1.6);
  EXPECT_DOUBLE_EQ(q.z, 4.0);
}

TEST(Projection, RejectsBadDepthAndFocal) {
  try {
    project_to_world(kp(1, 1), 0.0, kCam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    EXPECT_EQ(e.field(), "depth");
  }
  try {
    project_to_world(kp(1, 1), 1.0, CameraIntrinsics{-1.0, 416, 416});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field(), "focal_px");
  }
}

TEST(Length, WorldEuclideanThreeFourFive) {
  // The example needs a 600 px tall frame to hold the peduncle at row 500.
  const DepthMap tall = DepthMap::uniform(416, 600, 2.0f);
  const CameraIntrinsics cam{500.0, 416, 600};
  const LengthEstimate e = estimate_length(kp(100, 100), kp(400, 500, KeypointLabel::Peduncle), tall, cam);
  EXPECT_NEAR(e.length_cm, 200.0, 1e-9);
  EXPECT_EQ(e.method, LengthMethod::WorldEuclidean);
  const LengthEstimate lit =
      estimate_length(kp(100, 100), kp(400, 500, KeypointLabel::Peduncle), tall, cam, LengthMethod::Eq3Literal);
  EXPECT_NEAR(lit.length_cm, 250.0, 1e-9);
}

TEST(Length, CoincidentKeypointsAreDegenerate) {
  const DepthMap depth = DepthMap::uniform(416, 416, 1.0f);
  EXPECT_EQ(kind_of([&] { estimate_length(kp(50, 50), kp(50, 50), depth, kCam); }),
            ErrorKind::DegenerateDetection);
}

TEST(Length, OutOfBoundsKeypoint) {
  const DepthMap depth = DepthMap::uniform(416, 416, 1.0f);
  EXPECT_EQ(kind_of([&] { estimate_length(kp(50, 50), kp(416, 50), depth, kCam); }),
            ErrorKind::InvalidInput);
}

TEST(Weight, WorkedValues) {
  EXPECT_DOUBLE_EQ(weight_from_length({1.0}).weight_g, 0.014);
  // Oracle: mpmath, 40 digits.
  EXPECT_LT(rel_err(weight_from_length({10.0}).weight_g, 14.65979967271259346850303), 1e-12);
  EXPECT_LT(rel_err(weight_from_length({20.0}).weight_g, 118.9155427997576055909251), 1e-12);
}

TEST(Weight, RejectsNonPositiveLength) {
  EXPECT_EQ(kind_of([] { weight_from_length({0.0}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { weight_from_length({-3.0}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { weight_from_length({NAN}); }), ErrorKind::InvalidInput);
}

TEST(Weight, CoefficientValidation) {
  EXPECT_EQ(kind_of([] { BiometricCoefficients{0.0, 3.0}.validate(); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { BiometricCoefficients{0.01, -1.0}.validate(); }), ErrorKind::InvalidInput);
}

TEST(Weight, StrictlyIncreasingAndInverse) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> len(0.1, 100.0);
  for (int i = 0; i < 2000; ++i) {
    const double l = len(rng);
    const double w = weight_from_length({l}).weight_g;
    EXPECT_LT(w, weight_from_length({l * (1 + 1e-9)}).weight_g);
    EXPECT_LT(rel_err(length_from_weight({w}).length_cm, l), 1e-9);
  }
}

TEST(Bands, DefaultTableMatchesAllowances) {
  const auto t = FeedingBandTable::tilapia_default();
  ASSERT_EQ(t.bands().size(), 5u);
  const double lower[] = {0, 1, 5, 20, 100};
  const double pmin[] = {10, 6, 4, 3, 1.5};
  const double pmax[] = {30, 10, 6, 4, 3};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(t.bands()[i].lower_g, lower[i]);
    EXPECT_EQ(t.bands()[i].percent_min, pmin[i]);
    EXPECT_EQ(t.bands()[i].percent_max, pmax[i]);
  }
  EXPECT_FALSE(t.bands().back().upper_g.has_value());
}

TEST(Bands, WorkedExamples) {
  const auto t = FeedingBandTable::tilapia_default();
  EXPECT_EQ(ration_percent(14.66, t), (RationPercent{2, 5.0}));
  EXPECT_EQ(ration_percent(0.5, t), (RationPercent{0, 20.0}));
  EXPECT_EQ(ration_percent(5.0, t), (RationPercent{2, 5.0}));
  EXPECT_EQ(ration_percent(1.0, t), (RationPercent{1, 8.0}));
  EXPECT_EQ(ration_percent(20.0, t), (RationPercent{3, 3.5}));
  EXPECT_EQ(ration_percent(100.0, t), (RationPercent{4, 2.25}));
  EXPECT_EQ(ration_percent(1e6, t), (RationPercent{4, 2.25}));
  EXPECT_EQ(kind_of([&] { ration_percent(0.0, t); }), ErrorKind::InvalidInput);
}

TEST(Bands, PercentOverride) {
  auto bands = FeedingBandTable::tilapia_default().bands();
  bands[2].percent_override = 4.5;
  EXPECT_EQ(ration_percent(10.0, FeedingBandTable(bands)).percent, 4.5);
}

TEST(Bands, RejectsMalformedTables) {
  EXPECT_EQ(kind_of([] { FeedingBandTable({}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { FeedingBandTable({{0, 5.0, 1, 2, {}}, {6, {}, 1, 2, {}}}); }),
            ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { FeedingBandTable({{0, 5.0, 3, 2, {}}, {5, {}, 1, 2, {}}}); }),
            ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { FeedingBandTable({{0, {}, 1, 2, {}}, {5, {}, 1, 2, {}}}); }),
            ErrorKind::InvalidInput);
}

TEST(Bands, PartitionIsTotal) {
  const auto t = FeedingBandTable::tilapia_default();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> exp10(-6.0, 6.0);
  for (int i = 0; i < 20000; ++i) {
    const double w = std::pow(10.0, exp10(rng));
    int matches = 0;
    for (const auto& b : t.bands()) matches += (w >= b.lower_g && (!b.upper_g || w < *b.upper_g));
    ASSERT_EQ(matches, 1) << w;
    const auto& chosen = t.bands()[ration_percent(w, t).band_index];
    EXPECT_TRUE(w >= chosen.lower_g && (!chosen.upper_g || w < *chosen.upper_g));
  }
}

TEST(Ration, WorkedExamples) {
  const auto t = FeedingBandTable::tilapia_default();
  const WeightEstimate w1[] = {{14.66}};
  const RationPlan p = build_ration_plan(w1, 13, t);
  EXPECT_NEAR(p.per_fish[0].grams_per_day, 0.733, 1e-12);
  EXPECT_NEAR(p.total_grams_per_day, 9.529, 1e-12);
  EXPECT_FALSE(p.no_fish_detected);

  const WeightEstimate w2[] = {{1.0}};
  EXPECT_NEAR(build_ration_plan(w2, 1, t).total_grams_per_day, 0.08, 1e-15);

  const RationPlan zero = build_ration_plan(w1, 0, t);
  EXPECT_EQ(zero.total_grams_per_day, 0.0);
  EXPECT_TRUE(zero.no_fish_detected);

  EXPECT_EQ(kind_of([&] { build_ration_plan({}, 3, t); }), ErrorKind::InvalidInput);
}

TEST(Ration, TotalEqualsCountTimesAverage) {
  const auto t = FeedingBandTable::tilapia_default();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> wd(0.01, 500.0);
  std::uniform_int_distribution<int> nd(1, 40), cd(0, 200);
  for (int i = 0; i < 2000; ++i) {
    std::vector<WeightEstimate> ws(static_cast<std::size_t>(nd(rng)));
    for (auto& w : ws) w.weight_g = wd(rng);
    const int count = cd(rng);
    const RationPlan p = build_ration_plan(ws, count, t);
    EXPECT_NEAR(p.total_grams_per_day, count * p.average_grams_per_day,
                1e-12 * std::max(1.0, p.total_grams_per_day));
    double sum = 0;
    for (const auto& f : p.per_fish) sum += f.grams_per_day;
    EXPECT_NEAR(p.average_grams_per_day, sum / static_cast<double>(ws.size()), 1e-12 * std::max(1.0, sum));
  }
}

TEST(Ration, NonDecreasingWithinBand) {
  const auto t = FeedingBandTable::tilapia_default();
  for (double w = 5.0; w < 19.99; w += 0.01) {
    const WeightEstimate a[] = {{w}}, b[] = {{w + 0.01}};
    EXPECT_LE(build_ration_plan(a, 1, t).total_grams_per_day, build_ration_plan(b, 1, t).total_grams_per_day);
  }
}

TEST(Depth, Validation) {
  EXPECT_EQ(kind_of([] { DepthMap(2, 2, {1, 1, 1}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { DepthMap(2, 1, {1, 0}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { DepthMap(1, 1, {NAN}); }), ErrorKind::InvalidInput);
  const DepthMap m(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(m.at(1.5, 0.2), 2.0);
  EXPECT_EQ(m.at(0.0, 1.9), 3.0);
  EXPECT_FALSE(m.contains(2.0, 0.0));
  EXPECT_FALSE(m.contains(-0.1, 0.0));
}

}  // namespace
}  // namespace aquafeed
