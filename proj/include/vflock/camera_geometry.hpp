#pragma once

// Equidistant fisheye geometry: pixel <-> bearing conversion and range
// recovery from the apparent size of a detected agent.

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "vflock/common.hpp"

namespace vflock {

/// Equidistant (Kannala-Brandt) intrinsics. The image radius of a ray with
/// incidence angle theta is f * theta * (1 + k1 theta^2 + ... + k4 theta^8).
struct CameraIntrinsics {
  double focal_length = 0.0;
  Vec2 principal_point = Vec2::Zero();
  std::array<double, 4> distortion{0.0, 0.0, 0.0, 0.0};
  int width = 0;
  int height = 0;

  void validate() const {
    if (!(focal_length > 0.0)) throw ValidationError("focal_length", "must be > 0");
    if (width <= 0 || height <= 0) throw ValidationError("resolution", "components must be > 0");
    const double cx = principal_point.x(), cy = principal_point.y();
    if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height))
      throw ValidationError("principal_point", "must lie inside the image rectangle");
    for (double k : distortion)
      if (!std::isfinite(k)) throw ValidationError("distortion", "coefficients must be finite");
  }

  bool contains(const Vec2& px) const {
    return px.x() >= 0.0 && px.x() <= width && px.y() >= 0.0 && px.y() <= height;
  }

  /// 720x540 undistorted lens whose horizontal field of view is 166 degrees.
  static CameraIntrinsics wide_angle_default() {
    CameraIntrinsics c;
    c.width = 720;
    c.height = 540;
    c.principal_point = {360.0, 270.0};
    c.focal_length = 360.0 / deg2rad(83.0);
    return c;
  }
};

struct Camera {
  CameraIntrinsics intrinsics;
  double yaw_offset = 0.0;  // optical axis azimuth in the body frame
};

/// Four horizontally mounted cameras.
///
/// Body frame: x forward, y left, z up. Camera frame: z along the optical
/// axis, x to the image right, y to the image bottom.
struct CameraRig {
  std::array<Camera, 4> cameras;

  static CameraRig right_angle_default() {
    CameraRig rig;
    for (std::size_t i = 0; i < 4; ++i) {
      rig.cameras[i].intrinsics = CameraIntrinsics::wide_angle_default();
      rig.cameras[i].yaw_offset = static_cast<double>(i) * kPi / 2.0;
    }
    return rig;
  }

  void validate() const {
    for (std::size_t i = 0; i < cameras.size(); ++i) {
      cameras[i].intrinsics.validate();
      for (std::size_t j = 0; j < i; ++j) {
        if (std::abs(wrap_angle(cameras[i].yaw_offset - cameras[j].yaw_offset)) < 1e-9)
          throw ValidationError("cameras[" + std::to_string(i) + "].yaw_offset",
                                "duplicates camera " + std::to_string(j));
      }
    }
  }
};

struct BoundingBox {
  Vec2 center = Vec2::Zero();
  double width = 0.0;
  double height = 0.0;
  double confidence = 1.0;

  double left() const { return center.x() - width / 2.0; }
  double right() const { return center.x() + width / 2.0; }
  double top() const { return center.y() - height / 2.0; }
  double bottom() const { return center.y() + height / 2.0; }
};

/// Polar observation of a neighbor in the observer's body frame.
struct RangeBearing {
  double range = 0.0;    // meters
  double bearing = 0.0;  // radians, (-pi, pi]
  double timestamp = 0.0;

  Vec2 position() const { return {range * std::cos(bearing), range * std::sin(bearing)}; }
  static RangeBearing from_position(const Vec2& p, double timestamp = 0.0) {
    return {p.norm(), std::atan2(p.y(), p.x()), timestamp};
  }
};

namespace geometry_detail {

inline constexpr int kMaxUndistortIterations = 20;
inline constexpr double kUndistortTolerance = 1e-10;

inline double distort(const std::array<double, 4>& k, double theta) {
  const double t2 = theta * theta;
  return theta * (1.0 + t2 * (k[0] + t2 * (k[1] + t2 * (k[2] + t2 * k[3]))));
}

inline double distort_derivative(const std::array<double, 4>& k, double theta) {
  const double t2 = theta * theta;
  return 1.0 + t2 * (3.0 * k[0] + t2 * (5.0 * k[1] + t2 * (7.0 * k[2] + t2 * 9.0 * k[3])));
}

/// Largest incidence angle for which the distortion polynomial is still
/// monotone, capped just below pi. Beyond it projection is ambiguous.
inline double max_incidence(const std::array<double, 4>& k) {
  constexpr double cap = kPi - 1e-6;
  constexpr double step = 1e-3;
  if (k[0] >= 0.0 && k[1] >= 0.0 && k[2] >= 0.0 && k[3] >= 0.0) return cap;
  double lo = 0.0;
  for (double t = step; t < cap; t += step) {
    if (distort_derivative(k, t) <= 0.0) {
      double hi = t;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (distort_derivative(k, mid) > 0.0 ? lo : hi) = mid;
      }
      return lo;
    }
    lo = t;
  }
  return cap;
}

/// Inverts theta_d = distort(theta) by Newton iteration.
inline double undistort(const std::array<double, 4>& k, double theta_d) {
  if (k == std::array<double, 4>{0.0, 0.0, 0.0, 0.0}) return theta_d;
  double theta = theta_d;
  for (int it = 1; it <= kMaxUndistortIterations; ++it) {
    const double step = (distort(k, theta) - theta_d) / distort_derivative(k, theta);
    theta -= step;
    if (std::abs(step) < kUndistortTolerance) return theta;
  }
  throw NumericError("distortion inversion did not converge after " +
                     std::to_string(kMaxUndistortIterations) + " iterations (theta_d = " +
                     std::to_string(theta_d) + ")");
}

/// Unprojection without the image-bounds check.
inline Vec3 unproject(const CameraIntrinsics& c, const Vec2& px) {
  const Vec2 m = (px - c.principal_point) / c.focal_length;
  const double theta_d = m.norm();
  if (theta_d == 0.0) return {0.0, 0.0, 1.0};
  const double theta = undistort(c.distortion, theta_d);
  const double s = std::sin(theta) / theta_d;
  return Vec3(s * m.x(), s * m.y(), std::cos(theta)).normalized();
}

/// Projection without the image-bounds check; nullopt outside the
/// monotone part of the lens model.
inline std::optional<Vec2> project(const CameraIntrinsics& c, const Vec3& ray) {
  const double n = ray.norm();
  if (!(n > 0.0)) return std::nullopt;
  const double rho = std::hypot(ray.x(), ray.y());
  const double theta = std::atan2(rho, ray.z());
  if (theta > max_incidence(c.distortion)) return std::nullopt;
  if (rho == 0.0) return c.principal_point;
  const double r = c.focal_length * distort(c.distortion, theta);
  return Vec2(c.principal_point.x() + r * ray.x() / rho, c.principal_point.y() + r * ray.y() / rho);
}

inline Vec3 camera_to_body(double yaw, const Vec3& v) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  // columns: camera x -> (s, -c, 0), camera y -> (0, 0, -1), camera z -> (c, s, 0)
  return {s * v.x() + c * v.z(), -c * v.x() + s * v.z(), -v.y()};
}

inline Vec3 body_to_camera(double yaw, const Vec3& v) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {s * v.x() - c * v.y(), -v.z(), c * v.x() + s * v.y()};
}

inline double angle_between(const Vec3& a, const Vec3& b) {
  // atan2 form stays accurate for tiny angles where acos loses digits
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace geometry_detail

/// Unit bearing (camera frame) of an in-bounds pixel.
inline Vec3 pixel_to_bearing(const CameraIntrinsics& intrinsics, const Vec2& pixel) {
  if (!intrinsics.contains(pixel))
    throw DomainError("pixel (" + std::to_string(pixel.x()) + ", " + std::to_string(pixel.y()) +
                      ") is outside the image");
  return geometry_detail::unproject(intrinsics, pixel);
}

/// Pixel of a camera-frame bearing, or nullopt when it falls outside the
/// field of view.
inline std::optional<Vec2> bearing_to_pixel(const CameraIntrinsics& intrinsics, const Vec3& bearing) {
  auto px = geometry_detail::project(intrinsics, bearing);
  if (!px || !intrinsics.contains(*px)) return std::nullopt;
  return px;
}

/// Distance to the center of a cube of side `object_size` whose visible
/// half-face subtends `alpha`.
inline double range_from_subtended_angle(double alpha, double object_size) {
  if (!(alpha > 0.0 && alpha < kPi / 2.0))
    throw DegenerateError("subtended angle " + std::to_string(alpha) + " rad outside (0, pi/2)");
  if (!(object_size > 0.0)) throw DomainError("object size must be > 0");
  return (object_size / 2.0) / std::tan(alpha) + object_size / 2.0;
}

/// Angular center of a box: the normalized sum of the rays through its
/// four corners and four edge midpoints. The pixel midpoint of a fisheye
/// box is biased toward the principal point at short range; this is not.
inline Vec3 box_center_ray(const CameraIntrinsics& intrinsics, const BoundingBox& box) {
  pixel_to_bearing(intrinsics, box.center);  // the center itself must be in view
  Vec3 sum = Vec3::Zero();
  for (double u : {box.left(), box.center.x(), box.right()})
    for (double v : {box.top(), box.center.y(), box.bottom()})
      if (u != box.center.x() || v != box.center.y())
        sum += geometry_detail::unproject(intrinsics, {u, v});
  return sum.normalized();
}

/// Half of the angle the detected object subtends, measured between the
/// box's center ray and one extreme point.
///
/// The extreme point is the midpoint of one of the two shorter box sides,
/// picking the side whose image radius is closest to the center's radius
/// (that direction is least stretched by the lens). When width and height
/// disagree by more than 25% the box is treated as partially occluded and
/// the angle is taken from half the diagonal, rescaled to the half-side of
/// the equivalent square.
inline double subtended_half_angle(const CameraIntrinsics& intrinsics, const BoundingBox& box) {
  using geometry_detail::angle_between;
  using geometry_detail::unproject;
  if (!(box.width > 0.0 && box.height > 0.0))
    throw DegenerateError("bounding box must have positive width and height");

  const Vec3 center = box_center_ray(intrinsics, box);
  const double longer = std::max(box.width, box.height);
  const double shorter = std::min(box.width, box.height);
  if (longer > 1.25 * shorter) {
    const double diag = angle_between(unproject(intrinsics, {box.left(), box.top()}),
                                      unproject(intrinsics, {box.right(), box.bottom()}));
    return 0.5 * diag / std::sqrt(2.0);
  }

  // The shorter sides are the vertical edges when the box is wider than tall.
  std::array<Vec2, 2> candidates;
  if (box.height <= box.width)
    candidates = {Vec2{box.left(), box.center.y()}, Vec2{box.right(), box.center.y()}};
  else
    candidates = {Vec2{box.center.x(), box.top()}, Vec2{box.center.x(), box.bottom()}};

  const double r_center = (box.center - intrinsics.principal_point).norm();
  const auto radius_gap = [&](const Vec2& p) {
    return std::abs((p - intrinsics.principal_point).norm() - r_center);
  };
  const Vec2& extreme =
      radius_gap(candidates[1]) < radius_gap(candidates[0]) ? candidates[1] : candidates[0];
  return angle_between(center, unproject(intrinsics, extreme));
}

/// Range and body-frame bearing of an agent detected as `box` in camera
/// `camera_index`. Elevation is dropped.
inline RangeBearing bbox_to_range_bearing(const CameraRig& rig, std::size_t camera_index,
                                          const BoundingBox& box, double object_size,
                                          double timestamp = 0.0) {
  if (camera_index >= rig.cameras.size())
    throw DomainError("camera index " + std::to_string(camera_index) + " out of range");
  if (!(object_size > 0.0)) throw DomainError("object size must be > 0");
  const Camera& cam = rig.cameras[camera_index];
  const double alpha = subtended_half_angle(cam.intrinsics, box);
  const Vec3 ray = geometry_detail::camera_to_body(cam.yaw_offset, box_center_ray(cam.intrinsics, box));
  return {range_from_subtended_angle(alpha, object_size), wrap_angle(std::atan2(ray.y(), ray.x())),
          timestamp};
}

/// Camera whose optical axis is closest to the body-frame direction;
/// ties go to the lowest index.
inline std::size_t select_camera(const CameraRig& rig, const Vec3& body_direction) {
  std::size_t best = 0;
  double best_angle = 10.0;
  for (std::size_t i = 0; i < rig.cameras.size(); ++i) {
    const double yaw = rig.cameras[i].yaw_offset;
    const double a =
        geometry_detail::angle_between(body_direction, Vec3(std::cos(yaw), std::sin(yaw), 0.0));
    if (a < best_angle - 1e-12) {
      best_angle = a;
      best = i;
    }
  }
  return best;
}

struct CubeProjection {
  std::size_t camera_index = 0;
  BoundingBox box;
};

/// Synthesizes the detection box of a cube of side `object_size` centered
/// at a planar body-frame position (altitude of the observer). The cube
/// faces the observer. Returns nullopt when the box misses the image or a
/// corner leaves the lens model's valid range. `camera` forces a camera
/// instead of the nearest-axis choice.
inline std::optional<CubeProjection> project_cube_to_bbox(
    const CameraRig& rig, const Vec2& relative_position, double object_size,
    std::optional<std::size_t> camera = std::nullopt) {
  if (!(object_size > 0.0)) throw DomainError("object size must be > 0");
  const double dist = relative_position.norm();
  if (!(dist > object_size / 2.0))
    throw DegenerateError("target at " + std::to_string(dist) +
                          " m is inside its own bounding cube");

  const Vec2 forward = relative_position / dist;
  const Vec2 lateral(-forward.y(), forward.x());
  const Vec3 center(relative_position.x(), relative_position.y(), 0.0);
  if (camera && *camera >= rig.cameras.size())
    throw DomainError("camera index " + std::to_string(*camera) + " out of range");
  const std::size_t idx = camera ? *camera : select_camera(rig, center);
  const Camera& cam = rig.cameras[idx];

  const double h = object_size / 2.0;
  double u0 = 1e300, v0 = 1e300, u1 = -1e300, v1 = -1e300;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) {
        const Vec2 planar = relative_position + sx * h * forward + sy * h * lateral;
        const Vec3 corner(planar.x(), planar.y(), sz * h);
        auto px = geometry_detail::project(cam.intrinsics,
                                           geometry_detail::body_to_camera(cam.yaw_offset, corner));
        if (!px) return std::nullopt;
        u0 = std::min(u0, px->x());
        u1 = std::max(u1, px->x());
        v0 = std::min(v0, px->y());
        v1 = std::max(v1, px->y());
      }

  const auto& in = cam.intrinsics;
  if (u1 < 0.0 || v1 < 0.0 || u0 > in.width || v0 > in.height) return std::nullopt;
  CubeProjection out;
  out.camera_index = idx;
  out.box.center = {0.5 * (u0 + u1), 0.5 * (v0 + v1)};
  out.box.width = u1 - u0;
  out.box.height = v1 - v0;
  out.box.confidence = 1.0;
  return out;
}

}  // namespace vflock
