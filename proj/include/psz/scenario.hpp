#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "psz/metastable.hpp"
#include "psz/models.hpp"

namespace psz {

struct ModelSpec {
  std::string kind = "ising";  // ising, perturbed_ising, blume_capel, potts
  double J = 1.5;
  double lambda = 0.0;
  double plaquette = 0.0;
  int states = 3;
  int dim = 2;
  Normalization normalization = Normalization::shifted;
  SpinModel build() const;
};

struct Scenario {
  std::string name = "scenario";
  std::vector<std::string> pipelines;
  std::uint64_t seed = 1;
  ModelSpec model;
  std::vector<int> sizes{3};

  // Exact pipeline: optional sweep of one model parameter.
  std::string sweep_parameter;
  std::vector<double> sweep_values;
  double circle_tolerance = 1e-6;

  // Metastable settings shared by free-energy, zeros and compare.
  Cutoffs cutoffs;
  std::optional<double> tau;  // estimated when absent
  double c0 = 0.0;

  // Zeros pipeline.
  std::vector<std::pair<int, int>> pairs;  // spin labels
  Complex curve_seed{1.0, 0.0};
  double step = 0.02;
  double length = 8.0;

  // Free-energy pipeline: polar grid.
  double radius_min = 0.95, radius_max = 1.05;
  int radius_points = 5, angle_points = 24;

  // Contour-check pipeline.
  std::uint64_t exhaustive_limit = 1u << 20;
  std::uint64_t samples = 2000;
  int identity_points = 4;
  double identity_tolerance = 1e-10;

  // Compare pipeline.
  int circle_points = 24;
  double circle_radius = 1.0;
  double kappa = 1.0;
};

// Flat INI text; unknown sections or keys are configuration errors.
Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);

struct CheckResult {
  std::string name;
  bool ok = true;
  std::string detail;
};

struct RunResult {
  std::vector<CheckResult> checks;
  std::vector<std::filesystem::path> files;  // relative to the output directory
  std::size_t cap_events = 0;
  bool ok() const;
};

// Runs every pipeline of the scenario, writing artifacts plus summary.json and
// manifest.json (sha256 of each file) into `out`.
RunResult run_scenario(const Scenario& scenario, const std::filesystem::path& out, int workers = 1);

}  // namespace psz
