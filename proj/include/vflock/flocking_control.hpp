#pragma once

// Reynolds separation/cohesion/migration velocity command and the shared
// migration waypoint list.

#include <span>
#include <string>
#include <vector>

#include "vflock/common.hpp"

namespace vflock {

struct FlockParams {
  double k_sep = 7.0;
  double k_coh = 1.0;
  double k_mig = 1.0;
  double v_max = 0.5;
  // Separation uses -r / |r|^e. e = 1 is the unit-vector form.
  double separation_exponent = 1.0;

  bool operator==(const FlockParams&) const = default;

  void validate() const {
    if (!(k_sep >= 0.0)) throw ValidationError("flocking.k_sep", "must be >= 0");
    if (!(k_coh >= 0.0)) throw ValidationError("flocking.k_coh", "must be >= 0");
    if (!(k_mig >= 0.0)) throw ValidationError("flocking.k_mig", "must be >= 0");
    if (!(v_max > 0.0)) throw ValidationError("flocking.v_max", "must be > 0");
    if (!(separation_exponent >= 0.0))
      throw ValidationError("flocking.separation_exponent", "must be >= 0");
  }
};

struct ReynoldsTerms {
  Vec2 separation = Vec2::Zero();
  Vec2 cohesion = Vec2::Zero();
  Vec2 migration = Vec2::Zero();

  Vec2 sum() const { return separation + cohesion + migration; }
};

/// Individual velocity terms in the focal agent's frame. With no neighbors
/// separation and cohesion are zero; a migration point at the origin
/// yields zero migration.
inline ReynoldsTerms reynolds_terms(std::span<const Vec2> neighbors, const Vec2& migration_rel,
                                    const FlockParams& params) {
  ReynoldsTerms t;
  if (!neighbors.empty()) {
    for (const Vec2& r : neighbors) {
      const double n = r.norm();
      if (!(n > 0.0)) throw DomainError("neighbor at zero distance");
      t.separation -= r / std::pow(n, params.separation_exponent);
      t.cohesion += r;
    }
    const double inv = 1.0 / static_cast<double>(neighbors.size());
    t.separation *= params.k_sep * inv;
    t.cohesion *= params.k_coh * inv;
  }
  const double m = migration_rel.norm();
  if (m > 0.0) t.migration = params.k_mig * migration_rel / m;
  return t;
}

/// Clamps `v` to length `v_max`, keeping its direction.
inline Vec2 saturate(const Vec2& v, double v_max) {
  const double n = v.norm();
  if (n == 0.0) return Vec2::Zero();
  if (n <= v_max) return v;
  // Rounding can leave the rescaled norm an ulp above v_max.
  double scale = v_max / n;
  Vec2 out = v * scale;
  while (out.norm() > v_max) {
    scale = std::nextafter(scale, 0.0);
    out = v * scale;
  }
  return out;
}

inline Vec2 command(std::span<const Vec2> neighbors, const Vec2& migration_rel,
                    const FlockParams& params) {
  return saturate(reynolds_terms(neighbors, migration_rel, params).sum(), params.v_max);
}

/// Ordered world-frame waypoints. `finished` is set once a non-cyclic plan
/// runs past its last waypoint.
struct MigrationPlan {
  std::vector<Vec2> waypoints;
  double acceptance_radius = 3.0;
  bool cyclic = true;
  std::size_t current_index = 0;
  bool finished = false;
  std::size_t completions = 0;  // number of waypoints reached so far

  bool operator==(const MigrationPlan&) const = default;

  const Vec2& current() const { return waypoints.at(current_index); }

  void validate() const {
    if (waypoints.empty()) throw ValidationError("migration.waypoints", "at least one required");
    if (!(acceptance_radius > 0.0))
      throw ValidationError("migration.acceptance_radius", "must be > 0");
  }
};

/// Unconditionally moves to the next waypoint.
inline MigrationPlan next_waypoint(MigrationPlan plan) {
  if (plan.finished) return plan;
  ++plan.completions;
  if (plan.current_index + 1 < plan.waypoints.size()) {
    ++plan.current_index;
  } else if (plan.cyclic) {
    plan.current_index = 0;
  } else {
    plan.finished = true;
  }
  return plan;
}

inline bool within_acceptance(const Vec2& world_position, const MigrationPlan& plan) {
  return (world_position - plan.current()).norm() < plan.acceptance_radius;
}

/// Advances when `world_position` is strictly inside the acceptance radius.
inline MigrationPlan advance_waypoint(const Vec2& world_position, MigrationPlan plan) {
  if (plan.finished || !within_acceptance(world_position, plan)) return plan;
  return next_waypoint(std::move(plan));
}

}  // namespace vflock
