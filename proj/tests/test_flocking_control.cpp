#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "vflock/flocking_control.hpp"

using namespace vflock;

TEST(Reynolds, SingleNeighborDefaults) {
  const std::vector<Vec2> n{{2.0, 0.0}};
  const auto t = reynolds_terms(n, Vec2::Zero(), FlockParams{});
  EXPECT_TRUE(t.separation.isApprox(Vec2(-7.0, 0.0)));
  EXPECT_TRUE(t.cohesion.isApprox(Vec2(2.0, 0.0)));
  EXPECT_EQ(t.migration, Vec2::Zero());
}

TEST(Reynolds, SymmetricNeighborsCancel) {
  const std::vector<Vec2> n{{1.7, 0.0}, {-1.7, 0.0}};
  const auto t = reynolds_terms(n, Vec2::Zero(), FlockParams{});
  EXPECT_EQ(t.separation, Vec2::Zero());
  EXPECT_EQ(t.cohesion, Vec2::Zero());
}

TEST(Reynolds, MigrationIsUnit) {
  const auto t = reynolds_terms({}, Vec2(10.0, 0.0), FlockParams{});
  EXPECT_TRUE(t.migration.isApprox(Vec2(1.0, 0.0)));
  EXPECT_EQ(t.separation, Vec2::Zero());
}

TEST(Reynolds, SeparationExponent) {
  FlockParams p;
  p.separation_exponent = 2.0;
  const std::vector<Vec2> n{{2.0, 0.0}};
  EXPECT_TRUE(reynolds_terms(n, Vec2::Zero(), p).separation.isApprox(Vec2(-3.5, 0.0)));
}

TEST(Reynolds, ZeroNeighborThrows) {
  const std::vector<Vec2> n{{0.0, 0.0}};
  EXPECT_THROW(reynolds_terms(n, Vec2::Zero(), FlockParams{}), DomainError);
}

TEST(Command, ClampPreservesDirection) {
  const Vec2 v = saturate({3.0, 4.0}, 0.5);
  EXPECT_NEAR(v.norm(), 0.5, 1e-15);
  EXPECT_TRUE(v.isApprox(Vec2(0.3, 0.4)));
  EXPECT_EQ(saturate({0.12, 0.16}, 0.5), Vec2(0.12, 0.16));
  EXPECT_EQ(saturate(Vec2::Zero(), 0.5), Vec2::Zero());
}

TEST(Command, NeverExceedsVmax) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> c(-20.0, 20.0), vm(0.01, 3.0);
  for (int i = 0; i < 1000000; ++i) {
    const double v_max = vm(rng);
    const Vec2 v = saturate({c(rng), c(rng)}, v_max);
    ASSERT_LE(v.norm(), v_max);
  }
}

TEST(Command, RotationEquivariance) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> c(-6.0, 6.0), a(-kPi, kPi);
  FlockParams p;
  p.v_max = 100.0;  // keep the clamp out of the way for some trials
  for (int i = 0; i < 2000; ++i) {
    if (i == 1000) p.v_max = 0.5;
    std::vector<Vec2> n(1 + i % 5);
    for (auto& x : n) x = {c(rng), c(rng)};
    const Vec2 mig(c(rng), c(rng));
    const double th = a(rng);
    std::vector<Vec2> rn;
    for (const auto& x : n) rn.push_back(rotate(x, th));
    const Vec2 lhs = command(rn, rotate(mig, th), p);
    const Vec2 rhs = rotate(command(n, mig, p), th);
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST(Command, PermutationInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(-6.0, 6.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<Vec2> n(2 + i % 4);
    for (auto& x : n) x = {c(rng), c(rng)};
    const Vec2 mig(c(rng), c(rng));
    const auto base = reynolds_terms(n, mig, FlockParams{}).sum();
    std::shuffle(n.begin(), n.end(), rng);
    EXPECT_LE((reynolds_terms(n, mig, FlockParams{}).sum() - base).norm(), 1e-12);
  }
}

TEST(Reynolds, ScalingProperties) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> c(-6.0, 6.0), sc(0.1, 10.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<Vec2> n(1 + i % 4);
    for (auto& x : n) x = {c(rng), c(rng)};
    const double s = sc(rng);
    std::vector<Vec2> scaled;
    for (const auto& x : n) scaled.push_back(s * x);
    const auto a = reynolds_terms(n, Vec2::Zero(), FlockParams{});
    const auto b = reynolds_terms(scaled, Vec2::Zero(), FlockParams{});
    EXPECT_LE((a.separation - b.separation).norm(), 1e-12 * std::max(1.0, a.separation.norm()));
    EXPECT_LE((s * a.cohesion - b.cohesion).norm(), 1e-12 * std::max(1.0, b.cohesion.norm()));
  }
}

TEST(Waypoints, AcceptanceRadius) {
  MigrationPlan plan{{{0.0, 0.0}, {10.0, 0.0}}, 3.0, true};
  EXPECT_EQ(advance_waypoint({2.9, 0.0}, plan).current_index, 1u);
  EXPECT_EQ(advance_waypoint({3.1, 0.0}, plan).current_index, 0u);
  EXPECT_EQ(advance_waypoint({3.0, 0.0}, plan).current_index, 0u);
}

TEST(Waypoints, CyclicWraps) {
  MigrationPlan plan{{{0.0, 0.0}, {10.0, 0.0}}, 3.0, true, 1};
  const auto next = advance_waypoint({10.0, 1.0}, plan);
  EXPECT_EQ(next.current_index, 0u);
  EXPECT_FALSE(next.finished);
  EXPECT_EQ(next.completions, 1u);
}

TEST(Waypoints, NonCyclicFinishes) {
  MigrationPlan plan{{{0.0, 0.0}, {10.0, 0.0}}, 3.0, false, 1};
  const auto next = advance_waypoint({10.0, 1.0}, plan);
  EXPECT_TRUE(next.finished);
  EXPECT_EQ(advance_waypoint({10.0, 1.0}, next), next);
}

TEST(Waypoints, Validation) {
  MigrationPlan plan;
  EXPECT_THROW(plan.validate(), ValidationError);
  plan.waypoints = {{1.0, 1.0}};
  plan.acceptance_radius = 0.0;
  EXPECT_THROW(plan.validate(), ValidationError);
}
