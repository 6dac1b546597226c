#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vflock {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Mat42 = Eigen::Matrix<double, 4, 2>;

inline constexpr double kPi = std::numbers::pi;

// Error hierarchy. Everything derives from std::runtime_error or
// std::invalid_argument so callers can catch coarse or fine.

/// Input outside the mathematical domain of an operation.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Geometry that cannot produce a meaningful result (zero-size boxes,
/// targets inside their own bounding cube, ...).
struct DegenerateError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: non-convergence, loss of positive-definiteness,
/// singular matrices.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Violated call contract between pipeline stages.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Rejected configuration value. `field()` names the offending key.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Rotates a planar vector by `angle` radians (counter-clockwise).
inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

}  // namespace vflock
