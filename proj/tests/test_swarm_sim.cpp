#include <gtest/gtest.h>

#include <limits>

#include "vflock/config.hpp"
#include "vflock/swarm_sim.hpp"

using namespace vflock;

namespace {

ScenarioConfig scenario(const std::string& name) {
  return parse_config(std::string(VFLOCK_SOURCE_DIR) + "/scenarios/" + name + ".json");
}

bool same_records(const MetricsLog& a, const MetricsLog& b) {
  if (a.steps.size() != b.steps.size()) return false;
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    const auto &x = a.steps[k], &y = b.steps[k];
    if (x.time != y.time || x.positions != y.positions || x.velocities != y.velocities ||
        x.commands != y.commands || x.ospa != y.ospa || x.cardinality != y.cardinality ||
        x.pair_distances != y.pair_distances || x.tracks != y.tracks)
      return false;
  }
  return a.collision_steps == b.collision_steps && a.waypoint_completions == b.waypoint_completions;
}

}  // namespace

TEST(WorldStep, IdealTracking) {
  WorldState w{0.0, {AgentState{}}};
  const std::vector<Vec2> cmd{{0.5, 0.0}};
  const auto next = step(w, cmd, 0.0, 0.1);
  EXPECT_TRUE(next.agents[0].position.isApprox(Vec2(0.05, 0.0)));
  EXPECT_NEAR(next.time, 0.1, 1e-15);
}

TEST(WorldStep, FixedPoint) {
  WorldState w{0.0, {AgentState{{1.0, 2.0}, {0.3, -0.1}, 0.4}}};
  const std::vector<Vec2> cmd{{0.3, -0.1}};
  const auto next = step(w, cmd, 0.3, 0.02);
  EXPECT_EQ(next.agents[0].velocity, w.agents[0].velocity);
  EXPECT_TRUE(next.agents[0].position.isApprox(Vec2(1.006, 1.998)));
  EXPECT_EQ(next.agents[0].heading, 0.4);
}

TEST(WorldStep, FirstOrderResponse) {
  WorldState w{0.0, {AgentState{}}};
  const std::vector<Vec2> cmd{{1.0, 0.0}};
  for (int k = 0; k < 25; ++k) w = step(w, cmd, 0.5, 0.02);
  EXPECT_NEAR(w.agents[0].velocity.x(), 1.0 - std::exp(-1.0), 0.02);
}

TEST(WorldStep, Errors) {
  WorldState w{0.0, {AgentState{}}};
  const std::vector<Vec2> none;
  EXPECT_THROW(step(w, none, 0.3, 0.02), ContractError);
  const std::vector<Vec2> cmd{{1.0, 0.0}};
  EXPECT_THROW(step(w, cmd, 0.3, 0.0), DomainError);
}

TEST(Scenario, InitialFormation) {
  ScenarioConfig c;
  c.migration.waypoints = {{5.0, 0.0}};
  const auto p = c.resolved_initial_positions();
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR((p[0] - p[1]).norm(), 2.5, 1e-12);
  EXPECT_NEAR((p[1] - p[2]).norm(), 2.5, 1e-12);
  EXPECT_NEAR((p[0] + p[1] + p[2]).norm(), 0.0, 1e-12);
}

TEST(Scenario, ValidationNamesField) {
  ScenarioConfig c;
  c.migration.waypoints = {{5.0, 0.0}};
  c.sensor_period = 0.21;
  try {
    c.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "sensor_period");
  }
  c.sensor_period = 0.2;
  c.initial_positions = {{0, 0}, {1, std::numeric_limits<double>::quiet_NaN()}, {2, 0}};
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(RunScenario, LoneAgentTour) {
  ScenarioConfig c;
  c.agent_count = 1;
  c.migration.waypoints = {{5.0, 0.0}, {5.0, 5.0}, {0.0, 5.0}};
  c.migration.cyclic = false;
  c.max_duration = 200.0;
  const auto log = run_scenario(c);
  EXPECT_FALSE(log.aborted);
  EXPECT_EQ(log.waypoint_completions, 3u);
  EXPECT_LT(log.steps.size(), c.step_count());  // stopped when the plan ran out
  for (const auto& r : log.steps) {
    EXPECT_TRUE(r.tracks[0].empty()) << "t=" << r.time;
    EXPECT_TRUE(r.pair_distances.empty());
  }
  EXPECT_THROW(inter_agent_stats(log), DomainError);
}

TEST(RunScenario, CircularPerfectSensing) {
  auto c = scenario("circular");
  c.noise = perfect_sensing(c.sensor_period);
  const auto log = run_scenario(c);
  const auto s = inter_agent_stats(log);
  EXPECT_EQ(log.collision_steps, 0u);
  EXPECT_GE(s.min, 1.0);
  EXPECT_LE(s.min, 2.0) << "min inter-agent distance " << s.min << " m, mean " << s.mean;
}

TEST(RunScenario, LinearMeanDistance) {
  double mean = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = scenario("linear");
    c.seed = seed;
    mean += inter_agent_stats(run_scenario(c)).mean / 5.0;
  }
  EXPECT_NEAR(mean, 2.4, 0.4);
}

TEST(RunScenario, Deterministic) {
  auto c = scenario("rectangular");
  c.max_duration = 60.0;
  const auto a = run_scenario(c), b = run_scenario(c);
  EXPECT_TRUE(same_records(a, b));
  c.threads = 3;
  EXPECT_TRUE(same_records(a, run_scenario(c)));
  c.threads = 1;
  c.seed = 2;
  EXPECT_FALSE(same_records(a, run_scenario(c)));
}

TEST(RunScenario, NonFiniteStateAborts) {
  auto c = scenario("linear");
  c.max_duration = 10.0;
  Swarm swarm(c);
  for (int k = 0; k < 12; ++k) swarm.advance();  // step 12 consumes no frame
  swarm.mutable_world().agents[1].velocity.x() = std::numeric_limits<double>::quiet_NaN();
  const auto log = run_swarm(swarm);
  EXPECT_TRUE(log.aborted);
  ASSERT_FALSE(log.diagnostics.empty());
  EXPECT_NE(log.diagnostics[0].find("non-finite"), std::string::npos);
}

TEST(Decentralization, OtherAgentsTrackerDoesNotAffectCommand) {
  auto c = scenario("circular");
  Swarm base(c);
  for (int k = 0; k < 59; ++k) base.advance();  // next step is a sensing step
  Swarm perturbed = base;
  GaussianComponent ghost;
  ghost.weight = 50.0;  // survives the missed-detection discount
  ghost.mean << 0.8, -0.4, 0.0, 0.0;
  ghost.cov = 0.01 * Mat4::Identity();
  perturbed.mutable_agent(1).mutable_tracker().mutable_intensity().components.push_back(ghost);

  // Let the latency elapse so frames are consumed and commands refresh.
  for (int k = 0; k < 11; ++k) {
    const auto ra = base.advance();
    const auto rb = perturbed.advance();
    EXPECT_EQ(ra.commands[0], rb.commands[0]) << "step " << k;
    EXPECT_EQ(ra.tracks[0], rb.tracks[0]);
    if (k == 0) {
      EXPECT_EQ(ra.commands[2], rb.commands[2]);
    }
  }
  EXPECT_NE(base.agents()[1].command_world(), perturbed.agents()[1].command_world());
}

TEST(InterAgentStats, StaticPair) {
  ScenarioConfig c;
  c.agent_count = 2;
  c.initial_positions = {{0.0, 0.0}, {2.0, 0.0}};
  c.flock.k_sep = c.flock.k_coh = c.flock.k_mig = 0.0;
  c.migration.waypoints = {{50.0, 0.0}};
  c.max_duration = 5.0;
  const auto s = inter_agent_stats(run_scenario(c));
  EXPECT_NEAR(s.min, 2.0, 1e-12);
  EXPECT_NEAR(s.mean, 2.0, 1e-12);
}

TEST(InterAgentStats, MinNotAboveMean) {
  auto c = scenario("rectangular");
  c.max_duration = 60.0;
  const auto log = run_scenario(c);
  const auto s = inter_agent_stats(log);
  EXPECT_LE(s.min, s.mean);
  ASSERT_EQ(s.series_min.size(), log.steps.size());
  for (std::size_t k = 0; k < s.series_min.size(); ++k) {
    EXPECT_LE(s.series_min[k], s.series_mean[k]);
    EXPECT_LE(s.series_mean[k], s.series_max[k]);
  }
}

TEST(Waypoints, IndependentTrigger) {
  auto c = scenario("linear");
  c.trigger = WaypointTrigger::independent;
  c.max_duration = 60.0;
  Swarm swarm(c);
  bool diverged = false;
  while (!swarm.finished()) {
    swarm.advance();
    const auto& a = swarm.agents();
    if (a[0].plan().current_index != a[1].plan().current_index ||
        a[1].plan().current_index != a[2].plan().current_index)
      diverged = true;
  }
  EXPECT_TRUE(diverged);
}
