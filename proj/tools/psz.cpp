// Command-line runner for scenario files and built-in presets.
#include <iostream>

#include "CLI11.hpp"
#include "psz/error.hpp"
#include "psz/scenario.hpp"

namespace {

int exit_code(psz::ErrorKind kind) {
  switch (kind) {
    case psz::ErrorKind::config:
    case psz::ErrorKind::invalid_argument:
      return 2;
    case psz::ErrorKind::budget:
      return 3;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partition-function zeros from metastable free energies"};
  std::string scenario_path, preset, out_dir = "out";
  int workers = 1;
  std::optional<std::uint64_t> seed;
  app.add_option("--scenario", scenario_path, "scenario INI file")->check(CLI::ExistingFile);
  std::string presets;
  for (const auto& p : psz::preset_names()) presets += (presets.empty() ? "" : ", ") + p;
  app.add_option("--preset", preset, "built-in scenario (" + presets + ")");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "override the scenario seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (scenario_path.empty() == preset.empty()) {
    std::cerr << app.help() << "\nexactly one of --scenario or --preset is required\n";
    return 2;
  }
  try {
    psz::Scenario sc = scenario_path.empty() ? psz::parse_scenario(psz::preset_text(preset), "preset " + preset)
                                             : psz::load_scenario(scenario_path);
    if (seed) sc.seed = *seed;
    const auto result = psz::run_scenario(sc, out_dir, workers);
    for (const auto& c : result.checks)
      std::cout << (c.ok ? "ok    " : "FAIL  ") << c.name << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
    if (result.cap_events) std::cout << "FAIL  truncation cap activated " << result.cap_events << " times\n";
    std::cout << result.files.size() << " files written to " << out_dir << "\n";
    return result.ok() ? 0 : 1;
  } catch (const psz::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
