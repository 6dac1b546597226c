#pragma once

// Ground-truth world and the decentralized per-agent pipeline:
// simulated detector -> GM-PHD tracker -> Reynolds controller.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "vflock/common.hpp"
#include "vflock/detection_sim.hpp"
#include "vflock/flocking_control.hpp"
#include "vflock/gmphd_tracker.hpp"
#include "vflock/metrics.hpp"

namespace vflock {

enum class WaypointTrigger { global, independent };

struct ScenarioConfig {
  std::string name = "scenario";
  std::size_t agent_count = 3;
  std::vector<Vec2> initial_positions;  // empty: regular formation with initial_spacing sides
  double initial_spacing = 2.5;
  std::vector<double> headings;  // empty: all zero
  DetectionNoiseModel noise;
  TrackerParams tracker;
  FlockParams flock;
  MigrationPlan migration;
  WaypointTrigger trigger = WaypointTrigger::global;
  double physics_step = 0.02;
  double sensor_period = 0.2;
  double max_duration = 300.0;
  double velocity_time_constant = 0.3;
  double collision_radius = 0.5;
  double ospa_cutoff = 2.0;
  double ospa_order = 1.0;
  double convergence_time = 5.0;  // OSPA statistics ignore earlier steps
  std::uint64_t seed = 1;
  unsigned threads = 1;

  bool operator==(const ScenarioConfig&) const = default;

  std::size_t steps_per_frame() const {
    return static_cast<std::size_t>(std::llround(sensor_period / physics_step));
  }

  std::size_t step_count() const {
    return static_cast<std::size_t>(std::floor(max_duration / physics_step + 1e-9));
  }

  void validate() const {
    if (agent_count < 1) throw ValidationError("agent_count", "must be >= 1");
    if (!initial_positions.empty() && initial_positions.size() != agent_count)
      throw ValidationError("initial_positions", "must list exactly agent_count positions");
    if (!headings.empty() && headings.size() != agent_count)
      throw ValidationError("headings_deg", "must list exactly agent_count headings");
    for (const auto& p : initial_positions)
      if (!p.allFinite()) throw ValidationError("initial_positions", "must be finite");
    for (double h : headings)
      if (!std::isfinite(h)) throw ValidationError("headings_deg", "must be finite");
    if (!(initial_spacing > 0.0)) throw ValidationError("initial_spacing", "must be > 0");
    if (!(physics_step > 0.0)) throw ValidationError("physics_step", "must be > 0");
    if (!(sensor_period >= physics_step))
      throw ValidationError("sensor_period", "must be >= physics_step");
    const double ratio = sensor_period / physics_step;
    if (std::abs(ratio - std::round(ratio)) > 1e-6)
      throw ValidationError("sensor_period", "must be an integer multiple of physics_step");
    if (!(max_duration > 0.0)) throw ValidationError("max_duration", "must be > 0");
    if (!(velocity_time_constant >= 0.0))
      throw ValidationError("velocity_time_constant", "must be >= 0");
    if (!(collision_radius >= 0.0)) throw ValidationError("collision_radius", "must be >= 0");
    if (!(ospa_cutoff > 0.0)) throw ValidationError("metrics.ospa_cutoff", "must be > 0");
    if (!(ospa_order >= 1.0)) throw ValidationError("metrics.ospa_order", "must be >= 1");
    if (!(convergence_time >= 0.0))
      throw ValidationError("metrics.convergence_time", "must be >= 0");
    if (threads < 1) throw ValidationError("threads", "must be >= 1");
    noise.validate();
    tracker.validate();
    flock.validate();
    migration.validate();
  }

  /// Explicit positions, or a regular polygon (a segment for two agents)
  /// with side `initial_spacing` centered on the origin.
  std::vector<Vec2> resolved_initial_positions() const {
    if (!initial_positions.empty()) return initial_positions;
    std::vector<Vec2> out;
    if (agent_count == 1) return {Vec2::Zero()};
    if (agent_count == 2) return {Vec2(0.0, initial_spacing / 2.0), Vec2(0.0, -initial_spacing / 2.0)};
    const double n = static_cast<double>(agent_count);
    const double radius = initial_spacing / (2.0 * std::sin(kPi / n));
    for (std::size_t i = 0; i < agent_count; ++i) {
      const double a = 2.0 * kPi * static_cast<double>(i) / n;
      out.emplace_back(radius * std::cos(a), radius * std::sin(a));
    }
    return out;
  }
};

struct AgentState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double heading = 0.0;
};

struct WorldState {
  double time = 0.0;
  std::vector<AgentState> agents;
};

/// First-order velocity response followed by position integration.
/// `tau` = 0 tracks the command exactly.
inline WorldState step(const WorldState& world, std::span<const Vec2> commands, double tau,
                       double dt) {
  if (!(dt > 0.0)) throw DomainError("physics step must be > 0");
  if (!(tau >= 0.0)) throw DomainError("velocity time constant must be >= 0");
  if (commands.size() != world.agents.size())
    throw ContractError("one command per agent required");
  WorldState next = world;
  next.time = world.time + dt;
  for (std::size_t i = 0; i < next.agents.size(); ++i) {
    auto& a = next.agents[i];
    if (tau == 0.0)
      a.velocity = commands[i];
    else
      a.velocity += (dt / tau) * (commands[i] - a.velocity);
    a.position += dt * a.velocity;
  }
  return next;
}

/// Everything one agent runs onboard. It sees its own frames, its own
/// velocity and pose, and the shared waypoint list; nothing else.
class AgentPipeline {
 public:
  AgentPipeline(const TrackerParams& tracker, const FlockParams& flock, MigrationPlan plan,
                RngStream rng)
      : tracker_(tracker), flock_(flock), plan_(std::move(plan)), rng_(std::move(rng)) {}

  RngStream& rng() { return rng_; }
  void enqueue(SensorFrame frame) { pending_.push_back(std::move(frame)); }

  /// Runs the tracker on every frame emitted by `now`, then refreshes the
  /// held command. Returns true when at least one frame was consumed.
  bool process(double now, const AgentState& self) {
    bool consumed = false;
    const Vec2 ego_body = rotate(self.velocity, -self.heading);
    while (!pending_.empty() && pending_.front().emit_time <= now + 1e-9) {
      tracker_.step(pending_.front(), ego_body);
      pending_.pop_front();
      consumed = true;
    }
    if (consumed || !has_command_) {
      tracks_ = tracker_.estimates();
      std::vector<Vec2> neighbors;
      neighbors.reserve(tracks_.size());
      for (const auto& t : tracks_)
        if (t.position.norm() > 0.0) neighbors.push_back(t.position);
      const Vec2 mig = rotate(plan_.current() - self.position, -self.heading);
      command_body_ = command(neighbors, mig, flock_);
      command_world_ = rotate(command_body_, self.heading);
      has_command_ = true;
    }
    return consumed;
  }

  const Vec2& command_world() const { return command_world_; }
  const std::vector<TrackEstimate>& tracks() const { return tracks_; }
  const GmPhdTracker& tracker() const { return tracker_; }
  GmPhdTracker& mutable_tracker() { return tracker_; }
  const MigrationPlan& plan() const { return plan_; }
  void set_plan(MigrationPlan plan) { plan_ = std::move(plan); }

 private:
  GmPhdTracker tracker_;
  FlockParams flock_;
  MigrationPlan plan_;
  RngStream rng_;
  std::deque<SensorFrame> pending_;
  std::vector<TrackEstimate> tracks_;
  Vec2 command_body_ = Vec2::Zero();
  Vec2 command_world_ = Vec2::Zero();
  bool has_command_ = false;
};

struct StepRecord {
  double time = 0.0;
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  std::vector<Vec2> commands;
  std::vector<std::vector<Vec2>> tracks;  // body frame, per agent
  std::vector<double> pair_distances;     // (i, j), i < j, lexicographic
  std::vector<double> ospa;
  std::vector<double> cardinality;
  std::vector<std::size_t> component_count;
  std::size_t waypoint_index = 0;
};

struct MetricsLog {
  std::size_t agent_count = 0;
  std::vector<StepRecord> steps;
  std::size_t collision_steps = 0;
  std::size_t waypoint_completions = 0;
  double wall_clock_s = 0.0;
  bool aborted = false;
  std::vector<std::string> diagnostics;
};

/// Lexicographic (i, j), i < j, pair order used everywhere distances are
/// flattened.
inline std::vector<std::pair<std::size_t, std::size_t>> agent_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
  return out;
}

/// Step-wise simulation of one scenario.
class Swarm {
 public:
  explicit Swarm(ScenarioConfig config) : config_(std::move(config)) {
    config_.validate();
    config_.noise.frame_period = config_.sensor_period;
    const auto positions = config_.resolved_initial_positions();
    world_.agents.resize(config_.agent_count);
    for (std::size_t i = 0; i < config_.agent_count; ++i) {
      world_.agents[i].position = positions[i];
      world_.agents[i].heading = config_.headings.empty() ? 0.0 : config_.headings[i];
      agents_.emplace_back(config_.tracker, config_.flock, config_.migration,
                           make_rng_stream(config_.seed, i));
    }
    ospa_.assign(config_.agent_count, 0.0);
    pairs_ = agent_pairs(config_.agent_count);
  }

  const ScenarioConfig& config() const { return config_; }
  const WorldState& world() const { return world_; }
  const std::vector<AgentPipeline>& agents() const { return agents_; }
  AgentPipeline& mutable_agent(std::size_t i) { return agents_.at(i); }
  WorldState& mutable_world() { return world_; }
  std::size_t step_index() const { return step_index_; }

  bool finished() const {
    if (step_index_ >= config_.step_count()) return true;
    return std::all_of(agents_.begin(), agents_.end(),
                       [](const AgentPipeline& a) { return a.plan().finished; });
  }

  /// True body-frame positions of everyone but `i`.
  std::vector<Vec2> relative_truth(std::size_t i) const {
    std::vector<Vec2> out;
    const auto& self = world_.agents[i];
    for (std::size_t j = 0; j < world_.agents.size(); ++j)
      if (j != i) out.push_back(rotate(world_.agents[j].position - self.position, -self.heading));
    return out;
  }

  /// Advances one physics step and returns its record.
  StepRecord advance() {
    const double now = world_.time;
    const bool sensing = step_index_ % config_.steps_per_frame() == 0;
    const std::size_t n = agents_.size();

    if (sensing) {
      for (std::size_t i = 0; i < n; ++i) {
        auto truth = relative_truth(i);
        agents_[i].enqueue(generate_frame(truth, config_.noise, agents_[i].rng(), now));
      }
    }

    std::vector<char> consumed(n, 0);
    auto work = [&](std::size_t i) { consumed[i] = agents_[i].process(now, world_.agents[i]); };
    const unsigned threads = std::min<unsigned>(config_.threads, static_cast<unsigned>(n));
    if (threads <= 1) {
      for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          for (std::size_t i = t; i < n; i += threads) work(i);
        });
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (!consumed[i]) continue;
      std::vector<Vec2> est;
      for (const auto& tr : agents_[i].tracks()) est.push_back(tr.position);
      const auto truth = relative_truth(i);
      ospa_[i] = ospa_distance(est, truth, config_.ospa_cutoff, config_.ospa_order);
    }

    std::vector<Vec2> commands(n);
    for (std::size_t i = 0; i < n; ++i) commands[i] = agents_[i].command_world();
    world_ = step(world_, commands, config_.velocity_time_constant, config_.physics_step);
    world_.time = static_cast<double>(step_index_ + 1) * config_.physics_step;
    ++step_index_;

    update_waypoints();

    StepRecord rec;
    rec.time = world_.time;
    for (std::size_t i = 0; i < n; ++i) {
      rec.positions.push_back(world_.agents[i].position);
      rec.velocities.push_back(world_.agents[i].velocity);
      rec.commands.push_back(commands[i]);
      std::vector<Vec2> tr;
      for (const auto& t : agents_[i].tracks()) tr.push_back(t.position);
      rec.tracks.push_back(std::move(tr));
      rec.cardinality.push_back(agents_[i].tracker().cardinality());
      rec.component_count.push_back(agents_[i].tracker().intensity().components.size());
    }
    rec.ospa = ospa_;
    for (const auto& [i, j] : pairs_)
      rec.pair_distances.push_back((world_.agents[i].position - world_.agents[j].position).norm());
    rec.waypoint_index = agents_.front().plan().current_index;
    return rec;
  }

 private:
  void update_waypoints() {
    if (config_.trigger == WaypointTrigger::global) {
      const MigrationPlan& shared = agents_.front().plan();
      if (shared.finished) return;
      const bool fire = std::any_of(world_.agents.begin(), world_.agents.end(),
                                    [&](const AgentState& a) { return within_acceptance(a.position, shared); });
      if (fire)
        for (auto& a : agents_) a.set_plan(next_waypoint(a.plan()));
    } else {
      for (std::size_t i = 0; i < agents_.size(); ++i)
        agents_[i].set_plan(advance_waypoint(world_.agents[i].position, agents_[i].plan()));
    }
  }

  ScenarioConfig config_;
  WorldState world_;
  std::vector<AgentPipeline> agents_;
  std::vector<double> ospa_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::size_t step_index_ = 0;
};

inline bool record_is_finite(const StepRecord& r) {
  auto ok = [](const std::vector<Vec2>& vs) {
    return std::all_of(vs.begin(), vs.end(), [](const Vec2& v) { return v.allFinite(); });
  };
  return ok(r.positions) && ok(r.velocities) && ok(r.commands) &&
         std::all_of(r.cardinality.begin(), r.cardinality.end(),
                     [](double c) { return std::isfinite(c); });
}

/// Runs an already constructed swarm until it finishes. A non-finite state
/// stops the run with `aborted` set and a diagnostic; the offending record
/// is kept.
inline MetricsLog run_swarm(Swarm& swarm) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& config = swarm.config();
  MetricsLog log;
  log.agent_count = config.agent_count;
  log.steps.reserve(config.step_count());
  while (!swarm.finished()) {
    StepRecord rec = swarm.advance();
    if (std::any_of(rec.pair_distances.begin(), rec.pair_distances.end(),
                    [&](double d) { return d < config.collision_radius; }))
      ++log.collision_steps;
    const bool finite = record_is_finite(rec);
    log.steps.push_back(std::move(rec));
    if (!finite) {
      log.aborted = true;
      log.diagnostics.push_back("non-finite state at step " + std::to_string(swarm.step_index()) +
                                ", t=" + std::to_string(swarm.world().time));
      break;
    }
  }
  log.waypoint_completions = swarm.agents().front().plan().completions;
  log.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

inline MetricsLog run_scenario(const ScenarioConfig& config) {
  Swarm swarm(config);
  return run_swarm(swarm);
}

struct InterAgentStats {
  double min = 0.0;
  double mean = 0.0;
  std::vector<double> series_min, series_max, series_mean;
};

/// Minimum and mean pairwise distance over all pairs and steps, plus the
/// per-step min/max/mean series.
inline InterAgentStats inter_agent_stats(const MetricsLog& log) {
  if (log.agent_count < 2)
    throw DomainError("inter-agent statistics are undefined for fewer than two agents");
  InterAgentStats s;
  s.min = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : log.steps) {
    const auto& d = r.pair_distances;
    if (d.empty()) continue;
    double lo = d.front(), hi = d.front(), acc = 0.0;
    for (double x : d) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      acc += x;
    }
    s.series_min.push_back(lo);
    s.series_max.push_back(hi);
    s.series_mean.push_back(acc / static_cast<double>(d.size()));
    s.min = std::min(s.min, lo);
    sum += acc;
    count += d.size();
  }
  if (count == 0) throw DomainError("log has no distance samples");
  s.mean = sum / static_cast<double>(count);
  return s;
}

}  // namespace vflock
