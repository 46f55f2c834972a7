#include <CLI11.hpp>

#include <iostream>

#include "srclock/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace srclock::cli;
  CLI::App app{"Robust pulse optimization and interferometer simulation for the Sr clock transition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SRCLOCK_VERSION);

  Invocation inv;
  std::string configPath;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"optimize", "Optimize a segmented pulse against sampled noise batches"},
      {"evaluate", "Infidelity and phase deviation of a pulse at one noise point"},
      {"sweep1d", "Scan one noise channel"},
      {"sweep2d", "Scan two noise channels"},
      {"area", "Effective robust area of a 2D infidelity map"},
      {"interferometer", "Run the large-momentum-transfer pulse sequence"},
      {"contrast", "Monte-Carlo fringe contrast from interferometer lookup tables"},
      {"plot-export", "Validate a data CSV and write a figure spec for the plot scripts"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", configPath, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", inv.seed, "Global seed")->capture_default_str();
    sub->add_option("--workers", inv.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--out", inv.out, "Output directory")->capture_default_str();
    sub->add_option("--mini", inv.mini, "Divide interferometer stage counts by this factor")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--pulse", inv.pulsePath, "Pulse waveform file (overrides the config)");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    inv.command = app.get_subcommands().front()->get_name();
    if (!configPath.empty()) {
      inv.config = load_config_file(configPath);
      inv.configDir = std::filesystem::path(configPath).parent_path();
      if (inv.configDir.empty()) inv.configDir = ".";
    }
    return dispatch(inv);
  } catch (const std::exception& e) {
    std::cerr << "srclock " << inv.command << ": " << e.what() << '\n';
    return 2;
  }
}
