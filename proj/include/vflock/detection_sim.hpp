#pragma once

// Statistical stand-in for the onboard detector: misses, range/bearing
// noise, Poisson clutter and a constant pipeline latency.

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vflock/camera_geometry.hpp"
#include "vflock/common.hpp"

namespace vflock {

/// sigma_d(d) = c0 + c1 * d. The defaults are the nonnegative least-squares
/// fit of range errors from synthetic cube boxes with 2 px edge jitter,
/// d in [1, 8] m (see test_detection_sim).
struct RangeNoiseLaw {
  double c0 = 0.0;  // meters
  double c1 = 0.1;  // per meter

  double operator()(double range) const { return c0 + c1 * range; }
  bool operator==(const RangeNoiseLaw&) const = default;
};

struct DetectionNoiseModel {
  double p_d = 0.9;
  double sigma_beta = deg2rad(3.0);
  RangeNoiseLaw range_noise;
  double clutter_rate = 1.0;  // expected false returns per frame
  double arena_side = 10.0;   // clutter is uniform over this square around the observer
  double frame_period = 0.2;
  double latency = 0.2;  // one inference period at 5 Hz

  bool operator==(const DetectionNoiseModel&) const = default;

  /// Spatial density implied by the clutter model, 1 / a^2.
  double clutter_density() const { return 1.0 / (arena_side * arena_side); }

  void validate() const {
    if (!(p_d >= 0.0 && p_d <= 1.0)) throw ValidationError("noise.p_d", "must be in [0, 1]");
    if (!(sigma_beta >= 0.0)) throw ValidationError("noise.sigma_beta_deg", "must be >= 0");
    if (!(range_noise.c0 >= 0.0)) throw ValidationError("noise.range_noise_c0", "must be >= 0");
    if (!(range_noise.c1 >= 0.0)) throw ValidationError("noise.range_noise_c1", "must be >= 0");
    if (!(clutter_rate >= 0.0)) throw ValidationError("noise.clutter_rate", "must be >= 0");
    if (!(arena_side > 0.0)) throw ValidationError("noise.arena_side", "must be > 0");
    if (!(frame_period > 0.0)) throw ValidationError("sensor_period", "must be > 0");
    if (!(latency >= 0.0)) throw ValidationError("noise.latency", "must be >= 0");
  }
};

/// Every neighbor detected exactly, no clutter, no delay.
inline DetectionNoiseModel perfect_sensing(double frame_period = 0.2) {
  DetectionNoiseModel m;
  m.p_d = 1.0;
  m.sigma_beta = 0.0;
  m.range_noise = {0.0, 0.0};
  m.clutter_rate = 0.0;
  m.frame_period = frame_period;
  m.latency = 0.0;
  return m;
}

inline double range_noise_sigma(const DetectionNoiseModel& model, double range) {
  return model.range_noise(range);
}

struct SensorFrame {
  std::vector<RangeBearing> measurements;
  double frame_time = 0.0;
  double emit_time = 0.0;  // frame_time + latency
};

using RngStream = std::mt19937_64;

/// Independent stream for one agent of one run.
inline RngStream make_rng_stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), 0x76666cU};
  return RngStream(seq);
}

/// One detector frame for a focal agent given the true body-frame
/// positions of its neighbors. Deterministic in the stream state.
inline SensorFrame generate_frame(std::span<const Vec2> true_relative_positions,
                                  const DetectionNoiseModel& model, RngStream& rng,
                                  double frame_time) {
  std::bernoulli_distribution detected(model.p_d);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  SensorFrame frame;
  frame.frame_time = frame_time;
  frame.emit_time = frame_time + model.latency;

  for (const Vec2& p : true_relative_positions) {
    const double range = p.norm();
    if (!(range > 0.0)) throw DomainError("true neighbor range must be > 0");
    if (!detected(rng)) continue;
    const double sigma_d = range_noise_sigma(model, range);
    double noisy = range + sigma_d * unit_normal(rng);
    while (noisy <= 0.0) noisy = range + sigma_d * unit_normal(rng);
    const double bearing = std::atan2(p.y(), p.x()) + model.sigma_beta * unit_normal(rng);
    frame.measurements.push_back({noisy, wrap_angle(bearing), frame_time});
  }

  if (model.clutter_rate > 0.0) {
    std::poisson_distribution<int> clutter_count(model.clutter_rate);
    std::uniform_real_distribution<double> coord(-model.arena_side / 2.0, model.arena_side / 2.0);
    const int n = clutter_count(rng);
    for (int i = 0; i < n; ++i) {
      Vec2 c(coord(rng), coord(rng));
      while (c.squaredNorm() == 0.0) c = {coord(rng), coord(rng)};
      frame.measurements.push_back(RangeBearing::from_position(c, frame_time));
    }
  }

  std::shuffle(frame.measurements.begin(), frame.measurements.end(), rng);
  return frame;
}

}  // namespace vflock
