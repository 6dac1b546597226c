#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "vflock/common.hpp"

namespace vflock {

/// Minimum-cost assignment of every row to a distinct column of a
/// rows x cols cost matrix (rows <= cols), Hungarian method with
/// potentials. Returns the column chosen for each row.
inline std::vector<std::size_t> min_cost_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  if (n == 0) return {};
  const std::size_t m = cost.front().size();
  if (m < n) throw DomainError("assignment needs at least as many columns as rows");

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is a virtual start.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

/// Optimal subpattern assignment distance with cutoff `cutoff` and order
/// `order`. Zero for two empty sets.
inline double ospa_distance(std::span<const Vec2> estimates, std::span<const Vec2> truth,
                            double cutoff, double order) {
  if (!(cutoff > 0.0)) throw DomainError("OSPA cutoff must be > 0");
  if (!(order >= 1.0)) throw DomainError("OSPA order must be >= 1");

  std::span<const Vec2> small = estimates, large = truth;
  if (small.size() > large.size()) std::swap(small, large);
  const std::size_t n = large.size();
  if (n == 0) return 0.0;

  double total = std::pow(cutoff, order) * static_cast<double>(n - small.size());
  if (!small.empty()) {
    std::vector<std::vector<double>> cost(small.size(), std::vector<double>(n));
    for (std::size_t i = 0; i < small.size(); ++i)
      for (std::size_t j = 0; j < n; ++j)
        cost[i][j] = std::pow(std::min(cutoff, (small[i] - large[j]).norm()), order);
    const auto assignment = min_cost_assignment(cost);
    for (std::size_t i = 0; i < small.size(); ++i) total += cost[i][assignment[i]];
  }
  return std::pow(total / static_cast<double>(n), 1.0 / order);
}

}  // namespace vflock
