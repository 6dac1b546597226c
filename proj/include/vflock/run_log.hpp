#pragma once

// Run-log persistence (steps.csv + summary.json) and cross-run
// aggregation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vflock/config.hpp"
#include "vflock/swarm_sim.hpp"

namespace vflock {

inline constexpr int kRunLogSchemaVersion = 1;

struct RunLogFiles {
  std::filesystem::path steps_csv;
  std::filesystem::path summary_json;
};

/// %.9g rendering used for every CSV number.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// The value a reader of the CSV will see.
inline double as_written(double v) { return std::strtod(format_number(v).c_str(), nullptr); }

/// Linear-interpolation quantile (the numpy default) of unsorted data.
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline std::vector<std::string> steps_csv_columns(std::size_t agent_count) {
  std::vector<std::string> cols{"time"};
  for (std::size_t i = 0; i < agent_count; ++i)
    for (const char* f : {"px", "py", "vx", "vy", "cmd_x", "cmd_y", "ospa", "cardinality"})
      cols.push_back("a" + std::to_string(i) + "_" + f);
  for (const auto& [i, j] : agent_pairs(agent_count))
    cols.push_back("d_" + std::to_string(i) + "_" + std::to_string(j));
  return cols;
}

/// OSPA samples (all agents) at or after the convergence time.
inline std::vector<double> post_convergence_ospa(const MetricsLog& log, double convergence_time) {
  std::vector<double> out;
  for (const auto& r : log.steps)
    if (r.time >= convergence_time - 1e-9)
      for (double o : r.ospa) out.push_back(as_written(o));
  return out;
}

inline json summarize_log(const MetricsLog& log, const ScenarioConfig& config) {
  json s;
  s["schema_version"] = kRunLogSchemaVersion;
  s["scenario"] = config.name;
  s["seed"] = config.seed;
  s["config_hash"] = config_hash(config);
  s["agent_count"] = log.agent_count;
  s["steps"] = log.steps.size();
  s["duration_s"] = log.steps.empty() ? 0.0 : as_written(log.steps.back().time);

  // Distance statistics are computed from the values exactly as written to
  // the CSV so they can be recomputed from it.
  if (log.agent_count >= 2 && !log.steps.empty()) {
    double lo = std::numeric_limits<double>::infinity(), sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : log.steps)
      for (double d : r.pair_distances) {
        const double w = as_written(d);
        lo = std::min(lo, w);
        sum += w;
        ++n;
      }
    s["min_distance"] = lo;
    s["mean_distance"] = sum / static_cast<double>(n);
  } else {
    s["min_distance"] = nullptr;
    s["mean_distance"] = nullptr;
  }

  const auto ospa = post_convergence_ospa(log, config.convergence_time);
  if (ospa.empty() || log.agent_count < 2) {
    s["ospa_median"] = nullptr;
    s["ospa_p90"] = nullptr;
  } else {
    s["ospa_median"] = quantile(ospa, 0.5);
    s["ospa_p90"] = quantile(ospa, 0.9);
  }
  double card = 0.0;
  std::size_t nc = 0;
  for (const auto& r : log.steps)
    for (double c : r.cardinality) {
      card += as_written(c);
      ++nc;
    }
  s["convergence_time"] = config.convergence_time;
  s["mean_cardinality"] = nc ? card / static_cast<double>(nc) : 0.0;
  s["collision_steps"] = log.collision_steps;
  s["collision_radius"] = config.collision_radius;
  s["waypoint_completions"] = log.waypoint_completions;
  s["aborted"] = log.aborted;
  s["diagnostics"] = log.diagnostics;
  s["wall_clock_s"] = log.wall_clock_s;
  return s;
}

/// Writes `steps.csv` and `summary.json` into `dir` (created if needed).
/// steps.csv depends only on the log; summary.json additionally carries
/// the wall-clock time.
inline RunLogFiles write_log(const MetricsLog& log, const ScenarioConfig& config,
                             const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  RunLogFiles files{dir / "steps.csv", dir / "summary.json"};
  {
    std::ofstream out(files.steps_csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + files.steps_csv.string());
    out << "# vflock run log schema=" << kRunLogSchemaVersion << " config_hash=" << config_hash(config)
        << " seed=" << config.seed << "\n";
    const auto cols = steps_csv_columns(log.agent_count);
    for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
    out << "\n";
    std::string line;
    for (const auto& r : log.steps) {
      line = format_number(r.time);
      for (std::size_t i = 0; i < log.agent_count; ++i) {
        for (double v : {r.positions[i].x(), r.positions[i].y(), r.velocities[i].x(),
                         r.velocities[i].y(), r.commands[i].x(), r.commands[i].y(), r.ospa[i],
                         r.cardinality[i]}) {
          line += ',';
          line += format_number(v);
        }
      }
      for (double d : r.pair_distances) {
        line += ',';
        line += format_number(d);
      }
      line += '\n';
      out << line;
    }
    if (!out) throw std::runtime_error("write failed for " + files.steps_csv.string());
  }
  {
    std::ofstream out(files.summary_json, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + files.summary_json.string());
    out << summarize_log(log, config).dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed for " + files.summary_json.string());
  }
  return files;
}

struct ScenarioAggregate {
  std::string scenario;
  std::size_t runs = 0;
  double min_of_mins = 0.0;
  std::array<double, 2> min_of_mins_ci{0.0, 0.0};
  double mean_of_means = 0.0;
  std::array<double, 2> mean_of_means_ci{0.0, 0.0};
  double mean_of_mins = 0.0;
  std::size_t collision_steps = 0;
  std::size_t runs_with_collisions = 0;
  double ospa_median_p50 = std::numeric_limits<double>::quiet_NaN();
  double ospa_median_p90 = std::numeric_limits<double>::quiet_NaN();
};

struct AggregateReport {
  std::vector<ScenarioAggregate> scenarios;
  std::string table;
  json machine;
};

namespace run_log_detail {

inline std::vector<std::filesystem::path> find_summaries(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> out;
  if (fs::is_regular_file(dir / "summary.json")) out.push_back(dir / "summary.json");
  if (fs::is_directory(dir))
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() == "summary.json" &&
          e.path() != dir / "summary.json")
        out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

/// Percentile bootstrap of `stat` over `xs`, fixed seed.
template <typename Stat>
std::array<double, 2> bootstrap_ci(const std::vector<double>& xs, Stat stat,
                                   std::size_t resamples = 2000) {
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  std::vector<double> stats;
  stats.reserve(resamples);
  std::vector<double> sample(xs.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& s : sample) s = xs[pick(rng)];
    stats.push_back(stat(sample));
  }
  return {quantile(stats, 0.025), quantile(stats, 0.975)};
}

inline double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double min_of(const std::vector<double>& xs) { return *std::min_element(xs.begin(), xs.end()); }

}  // namespace run_log_detail

/// Aggregates every summary.json under `dir`, grouped by scenario name.
inline AggregateReport summarize(const std::filesystem::path& dir) {
  using namespace run_log_detail;
  const auto paths = find_summaries(dir);
  if (paths.empty()) throw std::runtime_error("no summary.json found under " + dir.string());

  struct Runs {
    std::vector<double> mins, means, ospa;
    std::size_t collisions = 0, with_collisions = 0, runs = 0;
  };
  std::map<std::string, Runs> groups;
  for (const auto& p : paths) {
    json s = config_detail::read_json_file(p);
    if (!s.contains("schema_version") || s["schema_version"] != kRunLogSchemaVersion)
      throw ValidationError(p.string(), "schema version mismatch (expected " +
                                            std::to_string(kRunLogSchemaVersion) + ")");
    auto& g = groups[s.at("scenario").get<std::string>()];
    ++g.runs;
    if (!s["min_distance"].is_null()) g.mins.push_back(s["min_distance"].get<double>());
    if (!s["mean_distance"].is_null()) g.means.push_back(s["mean_distance"].get<double>());
    if (!s["ospa_median"].is_null()) g.ospa.push_back(s["ospa_median"].get<double>());
    const auto c = s.at("collision_steps").get<std::size_t>();
    g.collisions += c;
    if (c > 0) ++g.with_collisions;
  }

  AggregateReport report;
  report.machine = json::object();
  report.machine["schema_version"] = kRunLogSchemaVersion;
  report.machine["scenarios"] = json::array();
  std::ostringstream table;
  table << std::left << std::setw(16) << "scenario" << std::right << std::setw(5) << "runs"
        << std::setw(10) << "min" << std::setw(22) << "min 95% CI" << std::setw(10) << "mean"
        << std::setw(22) << "mean 95% CI" << std::setw(11) << "collide" << std::setw(10)
        << "ospa50" << "\n";
  table << std::fixed << std::setprecision(3);
  for (const auto& [name, g] : groups) {
    ScenarioAggregate a;
    a.scenario = name;
    a.runs = g.runs;
    a.collision_steps = g.collisions;
    a.runs_with_collisions = g.with_collisions;
    json entry{{"scenario", name},
               {"runs", g.runs},
               {"collision_steps", g.collisions},
               {"runs_with_collisions", g.with_collisions}};
    if (!g.mins.empty()) {
      a.min_of_mins = min_of(g.mins);
      a.mean_of_mins = mean_of(g.mins);
      a.mean_of_means = mean_of(g.means);
      a.min_of_mins_ci = bootstrap_ci(g.mins, min_of);
      a.mean_of_means_ci = bootstrap_ci(g.means, mean_of);
      entry["min_of_mins"] = a.min_of_mins;
      entry["min_of_mins_ci95"] = a.min_of_mins_ci;
      entry["mean_of_mins"] = a.mean_of_mins;
      entry["mean_of_means"] = a.mean_of_means;
      entry["mean_of_means_ci95"] = a.mean_of_means_ci;
    }
    if (!g.ospa.empty()) {
      a.ospa_median_p50 = quantile(g.ospa, 0.5);
      a.ospa_median_p90 = quantile(g.ospa, 0.9);
      entry["ospa_median_p50"] = a.ospa_median_p50;
      entry["ospa_median_p90"] = a.ospa_median_p90;
    }
    report.machine["scenarios"].push_back(entry);

    auto ci = [](const std::array<double, 2>& c) {
      std::ostringstream os;
      os << std::fixed << std::setprecision(3) << "[" << c[0] << ", " << c[1] << "]";
      return os.str();
    };
    table << std::left << std::setw(16) << name << std::right << std::setw(5) << g.runs;
    if (!g.mins.empty())
      table << std::setw(10) << a.min_of_mins << std::setw(22) << ci(a.min_of_mins_ci)
            << std::setw(10) << a.mean_of_means << std::setw(22) << ci(a.mean_of_means_ci);
    else
      table << std::setw(10) << "-" << std::setw(22) << "-" << std::setw(10) << "-"
            << std::setw(22) << "-";
    table << std::setw(11) << g.collisions << std::setw(10);
    if (g.ospa.empty())
      table << "-";
    else
      table << a.ospa_median_p50;
    table << "\n";
    report.scenarios.push_back(a);
  }
  report.table = table.str();
  return report;
}

/// summarize() plus `aggregate.json` written next to the logs.
inline AggregateReport summarize_to_file(const std::filesystem::path& dir) {
  auto report = summarize(dir);
  std::ofstream out(dir / "aggregate.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "aggregate.json").string());
  out << report.machine.dump(2) << "\n";
  return report;
}

}  // namespace vflock
