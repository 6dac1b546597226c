// vflock command line: run a scenario, aggregate run logs, validate files.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vflock/config.hpp"
#include "vflock/run_log.hpp"
#include "vflock/swarm_sim.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kRuntimeError = 2;

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed,
            const std::string& out_dir, std::optional<double> duration,
            std::optional<std::size_t> threads) {
  auto config = vflock::parse_config(path);
  if (seed) config.seed = *seed;
  if (duration) config.max_duration = *duration;
  if (threads) config.threads = *threads;
  config.validate();

  const auto log = vflock::run_scenario(config);
  const auto files = vflock::write_log(log, config, out_dir);
  const auto summary = vflock::summarize_log(log, config);
  std::cout << "scenario " << config.name << " seed " << config.seed << ": " << log.steps.size()
            << " steps, " << log.collision_steps << " collision steps";
  if (!summary["min_distance"].is_null())
    std::cout << ", min " << summary["min_distance"].get<double>() << " m, mean "
              << summary["mean_distance"].get<double>() << " m";
  std::cout << "\nwrote " << files.steps_csv.string() << " and " << files.summary_json.string()
            << "\n";
  if (log.aborted) {
    for (const auto& d : log.diagnostics) std::cerr << "aborted: " << d << "\n";
    return kRuntimeError;
  }
  return kOk;
}

int cmd_summarize(const std::string& dir) {
  const auto report = vflock::summarize_to_file(dir);
  std::cout << report.table;
  std::cout << "wrote " << (std::filesystem::path(dir) / "aggregate.json").string() << "\n";
  return kOk;
}

int cmd_validate(const std::string& path) {
  const auto root = vflock::config_detail::read_json_file(path);
  if (root.is_object() && root.contains("cameras")) {
    const auto cal = vflock::calibration_from_json(root);
    std::cout << path << ": valid calibration, object_size " << cal.object_size << " m\n";
    return kOk;
  }
  const auto config = vflock::config_from_json(root);
  std::cout << path << ": valid scenario '" << config.name << "', " << config.agent_count
            << " agents, " << config.migration.waypoints.size() << " waypoints, config_hash "
            << vflock::config_hash(config) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vision-based drone flocking simulator"};
  app.require_subcommand(1);

  std::string run_config, run_out = "out";
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_duration;
  std::optional<std::size_t> run_threads;
  auto* run = app.add_subcommand("run", "Simulate one scenario and write steps.csv + summary.json");
  run->add_option("config", run_config, "Scenario file")->required();
  run->add_option("--seed", run_seed, "Override the scenario seed");
  run->add_option("--out", run_out, "Output directory")->capture_default_str();
  run->add_option("--duration", run_duration, "Override max_duration (s)");
  run->add_option("--threads", run_threads, "Worker threads for agent pipelines");

  std::string sum_dir;
  auto* sum = app.add_subcommand("summarize", "Aggregate every summary.json under a directory");
  sum->add_option("dir", sum_dir, "Directory of run logs")->required();

  std::string val_path;
  auto* val = app.add_subcommand("validate", "Check a scenario or calibration file");
  val->add_option("config", val_path, "Scenario or calibration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidationError;
  }

  try {
    if (*run) return cmd_run(run_config, run_seed, run_out, run_duration, run_threads);
    if (*sum) return cmd_summarize(sum_dir);
    if (*val) return cmd_validate(val_path);
  } catch (const vflock::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kRuntimeError;
}
