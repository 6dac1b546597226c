#pragma once

// Gaussian-mixture PHD tracker over relative planar states
// [p_x, p_y, v_x, v_y] with range/bearing measurements, adaptive
// measurement-driven birth and egomotion compensation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vflock/camera_geometry.hpp"
#include "vflock/common.hpp"
#include "vflock/detection_sim.hpp"

namespace vflock {

struct GaussianComponent {
  double weight = 0.0;
  Vec4 mean = Vec4::Zero();
  Mat4 cov = Mat4::Identity();
};

/// The PHD intensity: a weighted Gaussian mixture plus the timestamp it
/// refers to (empty until the first frame).
struct Intensity {
  std::vector<GaussianComponent> components;
  std::optional<double> time;
};

struct TrackerParams {
  double p_s = 1.0;
  double p_d = 0.9;
  double sigma_v = 1.0;  // process noise scale, m/s^2
  RangeNoiseLaw range_noise;
  double sigma_beta = deg2rad(3.0);
  double clutter_density = 0.01;  // 1/a^2 with a = 10 m
  double birth_weight = 1e-5;
  double birth_sigma_p = 1.0;
  double birth_sigma_v = 10.0;
  double truncation = 1e-5;
  double merge_threshold = 0.5;
  std::size_t max_components = 100;
  double extraction_threshold = 0.5;
  double singularity_radius = 1e-6;

  bool operator==(const TrackerParams&) const = default;

  void validate() const {
    auto fraction = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(name, "must be in [0, 1]");
    };
    fraction(p_s, "tracker.p_s");
    fraction(p_d, "tracker.p_d");
    if (!(sigma_v >= 0.0)) throw ValidationError("tracker.sigma_v", "must be >= 0");
    if (!(range_noise.c0 >= 0.0)) throw ValidationError("tracker.range_noise_c0", "must be >= 0");
    if (!(range_noise.c1 >= 0.0)) throw ValidationError("tracker.range_noise_c1", "must be >= 0");
    if (!(sigma_beta > 0.0)) throw ValidationError("tracker.sigma_beta_deg", "must be > 0");
    if (!(clutter_density >= 0.0))
      throw ValidationError("tracker.clutter_density", "must be >= 0");
    if (!(birth_weight >= 0.0)) throw ValidationError("tracker.birth_weight", "must be >= 0");
    if (!(birth_sigma_p > 0.0)) throw ValidationError("tracker.birth_sigma_p", "must be > 0");
    if (!(birth_sigma_v > 0.0)) throw ValidationError("tracker.birth_sigma_v", "must be > 0");
    if (!(truncation >= 0.0)) throw ValidationError("tracker.truncation", "must be >= 0");
    if (!(merge_threshold > 0.0)) throw ValidationError("tracker.merge_threshold", "must be > 0");
    if (max_components < 1) throw ValidationError("tracker.max_components", "must be >= 1");
    if (!(extraction_threshold > 0.0))
      throw ValidationError("tracker.extraction_threshold", "must be > 0");
  }
};

/// Observer motion since the previous frame: body-frame linear velocity
/// and elapsed time.
struct EgoMotion {
  Vec2 velocity = Vec2::Zero();
  double dt = 0.0;
};

struct TrackEstimate {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double weight = 0.0;
};

inline double expected_cardinality(const Intensity& intensity) {
  double sum = 0.0;
  for (const auto& c : intensity.components) sum += c.weight;
  return sum;
}

namespace tracker_detail {

inline bool positive_definite(const Mat4& p) {
  return Eigen::LLT<Mat4>(p).info() == Eigen::Success;
}

inline Mat4 symmetrize(const Mat4& p) { return 0.5 * (p + p.transpose()); }

}  // namespace tracker_detail

/// Constant-velocity prediction. The observer's own displacement u*dt is
/// subtracted from every relative position.
inline Intensity predict(const Intensity& intensity, const EgoMotion& ego,
                         const TrackerParams& params) {
  const double dt = ego.dt;
  if (!(dt > 0.0)) throw DomainError("prediction interval must be > 0, got " + std::to_string(dt));

  Mat4 F = Mat4::Identity();
  F(0, 2) = F(1, 3) = dt;

  const double s2 = params.sigma_v * params.sigma_v;
  const double q_pp = s2 * dt * dt * dt * dt / 4.0;
  const double q_pv = s2 * dt * dt * dt / 2.0;
  const double q_vv = s2 * dt * dt;
  Mat4 Q = Mat4::Zero();
  Q(0, 0) = Q(1, 1) = q_pp;
  Q(2, 2) = Q(3, 3) = q_vv;
  Q(0, 2) = Q(2, 0) = Q(1, 3) = Q(3, 1) = q_pv;

  Vec4 control = Vec4::Zero();
  control.head<2>() = -dt * ego.velocity;

  Intensity out;
  out.time = intensity.time ? std::optional<double>(*intensity.time + dt) : std::nullopt;
  out.components.reserve(intensity.components.size());
  for (std::size_t i = 0; i < intensity.components.size(); ++i) {
    const auto& c = intensity.components[i];
    GaussianComponent p;
    p.weight = params.p_s * c.weight;
    p.mean = F * c.mean + control;
    p.cov = tracker_detail::symmetrize(F * c.cov * F.transpose() + Q);
    if (!tracker_detail::positive_definite(p.cov))
      throw NumericError("predicted covariance of component " + std::to_string(i) +
                         " is not positive-definite");
    out.components.push_back(std::move(p));
  }
  return out;
}

/// One birth component per measurement, at the measured position with
/// zero velocity.
inline std::vector<GaussianComponent> birth(std::span<const RangeBearing> measurements,
                                            const TrackerParams& params) {
  std::vector<GaussianComponent> born;
  born.reserve(measurements.size());
  const double vp = params.birth_sigma_p * params.birth_sigma_p;
  const double vv = params.birth_sigma_v * params.birth_sigma_v;
  for (const auto& z : measurements) {
    GaussianComponent c;
    c.weight = params.birth_weight;
    c.mean << z.range * std::cos(z.bearing), z.range * std::sin(z.bearing), 0.0, 0.0;
    c.cov = Vec4(vp, vp, vv, vv).asDiagonal();
    born.push_back(c);
  }
  return born;
}

/// Range/bearing of a state mean.
inline Vec2 measurement_model(const Vec4& state) {
  return {std::hypot(state(0), state(1)), std::atan2(state(1), state(0))};
}

/// Jacobian of measurement_model with respect to the state.
inline Mat24 measurement_jacobian(const Vec4& state, double singularity_radius = 1e-6) {
  const double px = state(0), py = state(1);
  const double d2 = px * px + py * py;
  const double d = std::sqrt(d2);
  if (!(d > singularity_radius))
    throw DomainError("measurement Jacobian is singular at range " + std::to_string(d));
  Mat24 H = Mat24::Zero();
  H(0, 0) = px / d;
  H(0, 1) = py / d;
  H(1, 0) = -py / d2;
  H(1, 1) = px / d2;
  return H;
}

/// PHD measurement update. Expects `predicted` to already contain the
/// births spawned by this frame. Components closer than the singularity
/// radius to the observer pass through unchanged.
inline Intensity update(const Intensity& predicted, const SensorFrame& frame,
                        const TrackerParams& params) {
  if (predicted.time && std::abs(*predicted.time - frame.frame_time) > 1e-9)
    throw ContractError("intensity is predicted to t=" + std::to_string(*predicted.time) +
                        " but the frame was taken at t=" + std::to_string(frame.frame_time));

  struct Prepared {
    std::size_t index;
    Vec2 z_pred;
    Mat24 H;
    Mat42 PHt;
    Mat2 HPHt;
  };

  const auto& comps = predicted.components;
  Intensity out;
  out.time = frame.frame_time;

  std::vector<Prepared> active;
  active.reserve(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    if (std::hypot(c.mean(0), c.mean(1)) <= params.singularity_radius) {
      out.components.push_back(c);
      continue;
    }
    Prepared p;
    p.index = i;
    p.z_pred = measurement_model(c.mean);
    p.H = measurement_jacobian(c.mean, params.singularity_radius);
    p.PHt = c.cov * p.H.transpose();
    p.HPHt = p.H * p.PHt;
    active.push_back(p);
  }

  for (const auto& p : active) {
    GaussianComponent missed = comps[p.index];
    missed.weight *= 1.0 - params.p_d;
    out.components.push_back(std::move(missed));
  }

  const double norm_const = 1.0 / (2.0 * kPi);
  const Mat4 I = Mat4::Identity();
  for (const auto& z : frame.measurements) {
    const double sd = params.range_noise(z.range);
    Mat2 R = Mat2::Zero();
    R(0, 0) = sd * sd;
    R(1, 1) = params.sigma_beta * params.sigma_beta;

    const std::size_t start = out.components.size();
    double denom = params.clutter_density;
    for (const auto& p : active) {
      const auto& c = comps[p.index];
      const Mat2 S = p.HPHt + R;
      const double det = S.determinant();
      if (!(det > 0.0))
        throw NumericError("innovation covariance of component " + std::to_string(p.index) +
                           " is singular");
      const Mat2 S_inv = S.inverse();
      Vec2 nu(z.range - p.z_pred(0), wrap_angle(z.bearing - p.z_pred(1)));
      const Mat42 K = p.PHt * S_inv;
      const Mat4 A = I - K * p.H;

      GaussianComponent u;
      u.weight = params.p_d * c.weight * norm_const / std::sqrt(det) *
                 std::exp(-0.5 * nu.dot(S_inv * nu));
      u.mean = c.mean + K * nu;
      u.cov = tracker_detail::symmetrize(A * c.cov * A.transpose() + K * R * K.transpose());
      denom += u.weight;
      out.components.push_back(std::move(u));
    }
    for (std::size_t k = start; k < out.components.size(); ++k)
      out.components[k].weight = denom > 0.0 ? out.components[k].weight / denom : 0.0;
  }
  return out;
}

/// Truncation, greedy moment-preserving merge and capping.
inline Intensity prune(const Intensity& intensity, const TrackerParams& params) {
  std::vector<GaussianComponent> kept;
  kept.reserve(intensity.components.size());
  for (const auto& c : intensity.components)
    if (c.weight >= params.truncation) kept.push_back(c);

  // Heaviest first; ties keep their original order.
  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return kept[a].weight > kept[b].weight; });

  // d' P^-1 d >= |d|^2 / trace(P) for SPD P, so distant pairs skip the solve.
  std::vector<double> trace(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) trace[i] = kept[i].cov.trace();
  std::vector<std::optional<Eigen::LLT<Mat4>>> factors(kept.size());

  std::vector<bool> used(kept.size(), false);
  std::vector<GaussianComponent> merged;
  std::vector<std::size_t> group;
  for (std::size_t best : order) {
    if (used[best]) continue;
    group.clear();
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (used[i]) continue;
      const Vec4 diff = kept[i].mean - kept[best].mean;
      const double d2 = diff.squaredNorm();
      if (d2 > params.merge_threshold * trace[i]) continue;
      if (!factors[i]) factors[i].emplace(kept[i].cov);
      if (diff.dot(factors[i]->solve(diff)) <= params.merge_threshold) group.push_back(i);
    }
    if (group.empty()) group.push_back(best);  // non-finite covariance

    GaussianComponent m;
    m.weight = 0.0;
    m.mean.setZero();
    for (std::size_t i : group) {
      m.weight += kept[i].weight;
      m.mean += kept[i].weight * kept[i].mean;
      used[i] = true;
    }
    if (group.size() == 1) {
      merged.push_back(kept[group.front()]);
      continue;
    }
    m.mean /= m.weight;
    m.cov.setZero();
    for (std::size_t i : group) {
      const Vec4 d = m.mean - kept[i].mean;
      m.cov += kept[i].weight * (kept[i].cov + d * d.transpose());
    }
    m.cov = tracker_detail::symmetrize(m.cov / m.weight);
    merged.push_back(std::move(m));
  }

  std::stable_sort(merged.begin(), merged.end(),
                   [](const auto& a, const auto& b) { return a.weight > b.weight; });
  if (merged.size() > params.max_components) merged.resize(params.max_components);
  return {std::move(merged), intensity.time};
}

/// Components at or above the extraction threshold, heaviest first.
inline std::vector<TrackEstimate> extract_states(const Intensity& intensity,
                                                 const TrackerParams& params) {
  std::vector<TrackEstimate> out;
  for (const auto& c : intensity.components)
    if (c.weight >= params.extraction_threshold)
      out.push_back({c.mean.head<2>(), c.mean.tail<2>(), c.weight});
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.weight > b.weight; });
  return out;
}

/// One agent's tracker: predict, birth, update, prune per frame.
class GmPhdTracker {
 public:
  explicit GmPhdTracker(TrackerParams params = {}) : params_(params) { params_.validate(); }

  /// Consumes a frame. `ego_velocity` is the observer's body-frame velocity
  /// over the interval since the previous frame.
  const Intensity& step(const SensorFrame& frame, const Vec2& ego_velocity) {
    Intensity predicted;
    if (!intensity_.time) {
      predicted.time = frame.frame_time;
    } else {
      const double dt = frame.frame_time - *intensity_.time;
      if (!(dt > 0.0))
        throw ContractError("frame at t=" + std::to_string(frame.frame_time) +
                            " does not follow t=" + std::to_string(*intensity_.time));
      predicted = predict(intensity_, {ego_velocity, dt}, params_);
      predicted.time = frame.frame_time;
    }
    auto born = birth(frame.measurements, params_);
    predicted.components.insert(predicted.components.end(), born.begin(), born.end());
    intensity_ = prune(update(predicted, frame, params_), params_);
    return intensity_;
  }

  std::vector<TrackEstimate> estimates() const { return extract_states(intensity_, params_); }
  double cardinality() const { return expected_cardinality(intensity_); }
  const Intensity& intensity() const { return intensity_; }
  Intensity& mutable_intensity() { return intensity_; }
  const TrackerParams& params() const { return params_; }

 private:
  TrackerParams params_;
  Intensity intensity_;
};

}  // namespace vflock
