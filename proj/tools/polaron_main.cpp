// Batch experiment runner: build the model and contour from a config file
// (or a named preset), run the solver and oracles, and write CSV results.
#include "CLI11.hpp"

#include "polaron/runner.hpp"

#include <cstdio>
#include <exception>

using namespace polaron;

int main(int argc, char** argv) {
  CLI::App app{"polaron impurity solver"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "run one configuration");
  run_cmd->add_option("config", config_path, "configuration file")->required();

  std::string sweep_path;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "run a sweep and emit an error table");
  sweep_cmd->add_option("config", sweep_path, "sweep configuration file")
      ->required();

  std::string preset_name, preset_out;
  double preset_chi = 0, preset_dtau = 0, preset_dt = 0;
  auto* preset_cmd =
      app.add_subcommand("preset", "run a named built-in experiment");
  preset_cmd->add_option("name", preset_name, "preset name")->required();
  preset_cmd->add_option("--chi", preset_chi, "override bond cap");
  preset_cmd->add_option("--dtau", preset_dtau, "override imaginary step");
  preset_cmd->add_option("--dt", preset_dt, "override real-time step");
  preset_cmd->add_option("--out", preset_out, "output directory");

  auto* list_cmd = app.add_subcommand("presets", "list preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) {
      runner::run(runner::parse_run_config(config_path));
    } else if (*sweep_cmd) {
      runner::sweep(runner::parse_sweep_config(sweep_path));
    } else if (*preset_cmd) {
      runner::RunConfig cfg = runner::preset_config(preset_name);
      if (preset_chi > 0) cfg.chi = static_cast<long>(preset_chi);
      if (preset_dtau > 0) cfg.dtau = preset_dtau;
      if (preset_dt > 0) cfg.dt = preset_dt;
      if (!preset_out.empty()) cfg.out_dir = preset_out;
      cfg.validate();
      auto out = runner::run(cfg);
      for (const auto& line : out.summary_lines)
        std::printf("%s\n", line.c_str());
    } else if (*list_cmd) {
      for (const auto& n : runner::preset_names())
        std::printf("%s\n", n.c_str());
    }
  } catch (const runner::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
