#include <iostream>

#include <CLI11.hpp>

#include "scits/runner.h"
#include "scits/time_util.h"

int main(int argc, char** argv) {
  CLI::App app{"Time-series database benchmark runner", "scits"};
  app.set_version_flag("--version", scits::kScitsVersion);
  app.require_subcommand(1);

  scits::RunOptions opt;
  std::string monitor_period;
  std::string definition;
  std::string out_dir = opt.out_dir.string();
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "Execute a workload definition");
  run->add_option("definition", definition, "Workload definition (XML)")->required();
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  auto* monitor = run->add_option("--monitor", "Glances endpoint, e.g. http://db:61208/api/4/all");
  run->add_option("--monitor-period", monitor_period, "Monitor polling period, e.g. 1s");
  auto* hook = run->add_option("--reset-hook", "Shell command run before every run");
  auto* seed_opt = run->add_option("--seed", seed, "Override the definition's seed");
  run->add_flag("--dry-run", opt.dry_run, "Print the expanded runs and exit");
  run->add_flag("--populate", opt.populate,
                "Load the definition's whole time span before query runs");

  try {
    app.parse(argc, argv);
    if (!monitor_period.empty()) opt.monitor_period = scits::ParseDuration(monitor_period);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : scits::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return scits::kExitConfig;
  }

  opt.definition = definition;
  opt.out_dir = out_dir;
  if (*monitor) opt.monitor = monitor->as<std::string>();
  if (*hook) opt.reset_hook = hook->as<std::string>();
  if (*seed_opt) opt.seed = seed;
  return scits::RunMain(opt, std::cout, std::cerr);
}
