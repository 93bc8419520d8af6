// Command-line front end: run one scenario, run a suite, or list presets.
//
//   shqpsk_sim run <config.json|preset> [--out DIR] [--seed N] [--no-eq]
//   shqpsk_sim suite <configs...> [--jobs N] [--out DIR] [--seed N] [--no-eq]
//   shqpsk_sim presets list
//
// Exit codes: 0 success, 1 scenario error, 2 config error.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shqpsk/scenario.hpp"
#include "shqpsk/version.hpp"

namespace {

using namespace shqpsk;

constexpr int kExitOk = 0;
constexpr int kExitScenarioError = 1;
constexpr int kExitConfigError = 2;

/// A config argument is either a path to a JSON file or a bundled preset name.
ScenarioConfig resolve_config(const std::string& arg) {
  if (std::filesystem::exists(arg)) return load_scenario_file(arg);
  for (const std::string& p : preset_names())
    if (p == arg) return make_preset(arg);
  throw ConfigError("'" + arg + "' is neither a config file nor a preset (see 'presets list')");
}

void apply_overrides(ScenarioConfig& cfg, const std::optional<std::uint64_t>& seed,
                     bool no_eq) {
  if (seed) cfg.seed = *seed;
  if (no_eq) cfg.equalizer.enabled = false;
}

void print_scenario_line(const SuiteRow& row) {
  if (row.ok) {
    std::printf("%-10s %6.1f km   eq %-3s   BER %.3e   EVM %6.2f %%   %.1f s\n",
                row.name.c_str(), row.fiber_length_km,
                row.equalizer_enabled ? "on" : "off", row.ber, row.evm_percent,
                row.runtime_seconds);
  } else {
    std::fprintf(stderr, "%-10s FAILED: %s\n", row.name.c_str(), row.error.c_str());
  }
}

int cmd_run(const std::string& arg, const std::string& out_dir,
            const std::optional<std::uint64_t>& seed, bool no_eq) {
  ScenarioConfig cfg;
  try {
    cfg = resolve_config(arg);
    apply_overrides(cfg, seed, no_eq);
    validate_scenario(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  }
  try {
    const ScenarioResult res = run_scenario(cfg);
    write_scenario_outputs(res, out_dir);
    SuiteRow row;
    row.name = res.name;
    row.fiber_length_km = res.fiber_length_km;
    row.equalizer_enabled = res.equalizer_enabled;
    row.ber = res.ber;
    row.evm_percent = res.evm_percent;
    row.runtime_seconds = res.runtime_seconds;
    row.ok = true;
    print_scenario_line(row);
    std::printf("outputs: %s\n",
                (std::filesystem::path(out_dir) / res.name).string().c_str());
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kExitScenarioError;
  }
}

int cmd_suite(const std::vector<std::string>& args, int jobs, const std::string& out_dir,
              const std::optional<std::uint64_t>& seed, bool no_eq) {
  std::vector<ScenarioConfig> cfgs;
  bool config_errors = false;
  for (const std::string& arg : args) {
    try {
      ScenarioConfig cfg = resolve_config(arg);
      apply_overrides(cfg, seed, no_eq);
      validate_scenario(cfg);
      cfgs.push_back(std::move(cfg));
    } catch (const ConfigError& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      config_errors = true;
    }
  }
  if (cfgs.empty()) {
    std::fprintf(stderr, "suite: no runnable scenarios\n");
    return kExitConfigError;
  }
  try {
    const SuiteOutcome outcome = run_suite(cfgs, jobs, out_dir);
    std::printf("%-10s %9s   %-6s   %-11s %-10s\n", "scenario", "fiber", "eq", "BER",
                "EVM");
    for (const SuiteRow& row : outcome.rows) print_scenario_line(row);
    std::printf("summary: %s\n",
                (std::filesystem::path(out_dir) / "summary.csv").string().c_str());
    if (config_errors) return kExitConfigError;
    return outcome.all_ok ? kExitOk : kExitScenarioError;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "suite error: %s\n", e.what());
    return kExitScenarioError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kToolName) + " " + kToolVersion +
               " - self-homodyne QPSK link simulator"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool no_eq = false;

  std::string run_arg;
  CLI::App* run = app.add_subcommand("run", "run one scenario");
  run->add_option("config", run_arg, "config file or preset name")->required();
  run->add_option("--out", out_dir, "output directory (default: out)");
  run->add_option("--seed", seed, "override the master seed");
  run->add_flag("--no-eq", no_eq, "force the equalizer off");

  std::vector<std::string> suite_args;
  int jobs = 1;
  CLI::App* suite = app.add_subcommand("suite", "run several scenarios");
  suite->add_option("configs", suite_args, "config files or preset names")->required();
  suite->add_option("--jobs", jobs, "max concurrent scenarios (default: 1)");
  suite->add_option("--out", out_dir, "output directory (default: out)");
  suite->add_option("--seed", seed, "override the master seed for every scenario");
  suite->add_flag("--no-eq", no_eq, "force the equalizer off in every scenario");

  CLI::App* presets = app.add_subcommand("presets", "bundled scenario presets");
  CLI::App* presets_list = presets->add_subcommand("list", "list preset names");
  presets->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfigError;
  }

  if (run->parsed()) return cmd_run(run_arg, out_dir, seed, no_eq);
  if (suite->parsed()) return cmd_suite(suite_args, jobs, out_dir, seed, no_eq);
  if (presets->parsed() && presets_list->parsed()) {
    for (const std::string& name : shqpsk::preset_names()) std::printf("%s\n", name.c_str());
    return kExitOk;
  }
  return kExitConfigError;
}
