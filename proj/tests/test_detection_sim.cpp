#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "vflock/camera_geometry.hpp"
#include "vflock/detection_sim.hpp"

using namespace vflock;

TEST(RangeNoise, AffineLaw) {
  DetectionNoiseModel m;
  m.range_noise = {0.1, 0.05};
  EXPECT_NEAR(range_noise_sigma(m, 2.0), 0.2, 1e-15);
  m.range_noise = {0.3, 0.0};
  EXPECT_EQ(range_noise_sigma(m, 1.0), range_noise_sigma(m, 8.0));
}

TEST(RangeNoise, Monotone) {
  DetectionNoiseModel m;
  for (double d = 0.5; d < 10.0; d += 0.25)
    EXPECT_GE(range_noise_sigma(m, d + 0.25), range_noise_sigma(m, d));
}

// The default slope reproduces a least-squares fit (intercept pinned at 0)
// of the size-based range error with 2 px Gaussian jitter on every box edge.
TEST(RangeNoise, DefaultsMatchSyntheticFit) {
  const CameraRig rig = CameraRig::right_angle_default();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> az(-kPi, kPi);
  std::normal_distribution<double> jitter(0.0, 2.0);
  double num = 0.0, den = 0.0;
  for (int d = 1; d <= 8; ++d) {
    double se = 0.0;
    int n = 0;
    for (int i = 0; i < 4000; ++i) {
      const double a = az(rng);
      auto proj = project_cube_to_bbox(rig, d * Vec2(std::cos(a), std::sin(a)), 0.5);
      ASSERT_TRUE(proj);
      BoundingBox b = proj->box;
      const double l = b.left() + jitter(rng), r = b.right() + jitter(rng);
      const double t = b.top() + jitter(rng), btm = b.bottom() + jitter(rng);
      if (r - l < 1.0 || btm - t < 1.0) continue;
      b.center = {0.5 * (l + r), 0.5 * (t + btm)};
      b.width = r - l;
      b.height = btm - t;
      const double err = bbox_to_range_bearing(rig, proj->camera_index, b, 0.5).range - d;
      se += err * err;
      ++n;
    }
    const double rms = std::sqrt(se / n);
    num += d * rms;
    den += d * d;
  }
  const double c1 = num / den;
  const DetectionNoiseModel defaults;
  EXPECT_EQ(defaults.range_noise.c0, 0.0);
  EXPECT_NEAR(defaults.range_noise.c1, c1, 0.01) << "fitted c1 = " << c1;
}

TEST(GenerateFrame, NoiseFreeLimit) {
  DetectionNoiseModel m;
  m.p_d = 1.0;
  m.sigma_beta = 0.0;
  m.range_noise = {0.0, 0.0};
  m.clutter_rate = 0.0;
  auto rng = make_rng_stream(1, 0);
  const std::vector<Vec2> truth{{2.0, 0.0}, {0.0, -3.0}, {-1.0, 1.0}};
  const auto f = generate_frame(truth, m, rng, 1.0);
  ASSERT_EQ(f.measurements.size(), 3u);
  std::vector<bool> seen(3, false);
  for (const auto& z : f.measurements) {
    EXPECT_EQ(z.timestamp, 1.0);
    for (std::size_t i = 0; i < 3; ++i)
      if (std::abs(z.range - truth[i].norm()) < 1e-12 &&
          std::abs(wrap_angle(z.bearing - std::atan2(truth[i].y(), truth[i].x()))) < 1e-12)
        seen[i] = true;
  }
  EXPECT_TRUE(seen[0] && seen[1] && seen[2]);
  EXPECT_NEAR(f.emit_time, 1.0 + m.latency, 1e-15);
}

TEST(GenerateFrame, ClutterDensity) {
  DetectionNoiseModel m;
  m.clutter_rate = 1.0;
  m.arena_side = 10.0;
  EXPECT_NEAR(m.clutter_density(), 0.01, 1e-15);
}

TEST(GenerateFrame, DetectionRate) {
  DetectionNoiseModel m;
  m.clutter_rate = 0.0;
  auto rng = make_rng_stream(5, 0);
  const std::vector<Vec2> truth{{2.0, 0.0}, {0.0, 3.0}, {-2.0, -2.0}};
  const int frames = 10000;
  std::size_t total = 0;
  for (int i = 0; i < frames; ++i) total += generate_frame(truth, m, rng, i * 0.2).measurements.size();
  const double mean = static_cast<double>(total) / frames;
  EXPECT_NEAR(mean, 2.7, 0.05);
  const double rate = mean / 3.0;
  const double se = std::sqrt(0.9 * 0.1 / (3.0 * frames));
  EXPECT_LT(std::abs(rate - 0.9), 3.0 * se);
}

TEST(GenerateFrame, ClutterIsPoisson) {
  DetectionNoiseModel m;
  m.p_d = 0.0;
  m.clutter_rate = 1.0;
  auto rng = make_rng_stream(9, 0);
  const int frames = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < frames; ++i) {
    const auto f = generate_frame({}, m, rng, 0.0);
    const double n = static_cast<double>(f.measurements.size());
    s += n;
    s2 += n * n;
    for (const auto& z : f.measurements) {
      const Vec2 p = z.position();
      ASSERT_LE(std::abs(p.x()), 5.0 + 1e-9);
      ASSERT_LE(std::abs(p.y()), 5.0 + 1e-9);
    }
  }
  const double mean = s / frames, var = s2 / frames - mean * mean;
  EXPECT_NEAR(mean, 1.0, 0.05);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(GenerateFrame, BearingNoiseStd) {
  DetectionNoiseModel m;
  m.p_d = 1.0;
  m.clutter_rate = 0.0;
  auto rng = make_rng_stream(13, 0);
  const std::vector<Vec2> truth{{3.0, 0.0}};
  double s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double b = generate_frame(truth, m, rng, 0.0).measurements.at(0).bearing;
    s2 += b * b;
  }
  EXPECT_NEAR(std::sqrt(s2 / n), m.sigma_beta, 0.05 * m.sigma_beta);
}

TEST(GenerateFrame, RangesStayPositive) {
  DetectionNoiseModel m;
  m.p_d = 1.0;
  m.clutter_rate = 0.0;
  m.range_noise = {0.5, 0.5};
  auto rng = make_rng_stream(17, 0);
  const std::vector<Vec2> truth{{0.3, 0.0}};
  for (int i = 0; i < 20000; ++i)
    ASSERT_GT(generate_frame(truth, m, rng, 0.0).measurements.at(0).range, 0.0);
}

TEST(GenerateFrame, ReplayDeterminism) {
  DetectionNoiseModel m;
  const std::vector<Vec2> truth{{2.0, 1.0}, {-3.0, 0.5}};
  auto a = make_rng_stream(42, 2), b = make_rng_stream(42, 2), c = make_rng_stream(42, 3);
  bool differs_from_other_stream = false;
  for (int i = 0; i < 200; ++i) {
    const auto fa = generate_frame(truth, m, a, i * 0.2);
    const auto fb = generate_frame(truth, m, b, i * 0.2);
    const auto fc = generate_frame(truth, m, c, i * 0.2);
    ASSERT_EQ(fa.measurements.size(), fb.measurements.size());
    for (std::size_t k = 0; k < fa.measurements.size(); ++k) {
      EXPECT_EQ(fa.measurements[k].range, fb.measurements[k].range);
      EXPECT_EQ(fa.measurements[k].bearing, fb.measurements[k].bearing);
    }
    if (fa.measurements.size() != fc.measurements.size() ||
        (!fa.measurements.empty() && fa.measurements[0].range != fc.measurements[0].range))
      differs_from_other_stream = true;
  }
  EXPECT_TRUE(differs_from_other_stream);
}

TEST(DetectionNoiseModel, Validation) {
  DetectionNoiseModel m;
  EXPECT_NO_THROW(m.validate());
  m.p_d = 1.3;
  EXPECT_THROW(m.validate(), ValidationError);
  m = {};
  m.arena_side = 0.0;
  EXPECT_THROW(m.validate(), ValidationError);
  m = {};
  m.latency = -0.1;
  EXPECT_THROW(m.validate(), ValidationError);
}
