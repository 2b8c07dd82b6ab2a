#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psz/models.hpp"

namespace psz {

// Components of the boundary graph G_R(sigma).
struct ContourGraph {
  SiteSet boundary;
  std::vector<SiteSet> components;
  std::vector<int> diameters;
  std::vector<bool> small;  // diameter < L/2 (always true on Z^d windows)
};

ContourGraph contour_graph(const Configuration& config, int R);

struct ExteriorInterior {
  SiteSet exterior;
  std::vector<SiteSet> interior;  // components of Int
};

// Complement components of `support`. On the torus the exterior is the unique
// component with more than half the sites; a network has no exterior. In a
// window the exterior is the component touching the window edge.
ExteriorInterior exterior_interior(const Grid& grid, const SiteSet& support, bool network = false);

// A contour, or a contour network when `network` is set.
struct Contour {
  Configuration config;  // sigma_Y on the whole grid
  SiteSet support;
  bool network = false;
  Spin exterior_label = 0;  // unused for networks
  SiteSet exterior;
  std::vector<SiteSet> interior;
  std::vector<Spin> interior_labels;

  std::size_t size() const { return support.size(); }
  SiteSet volume() const;  // support together with the interior
  bool operator==(const Contour& other) const {
    return network == other.network && support == other.support && config == other.config;
  }
};

// Builds sigma_Y from sigma restricted to one boundary component. Throws if a
// complement component does not see a single label.
Contour make_contour(const Configuration& config, const SiteSet& support, bool network);

struct MatchingCollection {
  Grid grid;
  std::vector<Contour> contours;  // sorted by first support site
  std::optional<Contour> network;
  Spin vacuum_label = 0;  // used when both are empty

  bool operator==(const MatchingCollection& other) const = default;
};

MatchingCollection extract(const Configuration& config, int R);

struct MatchingDiagnostics {
  bool ok = true;
  std::vector<std::string> problems;
  explicit operator bool() const { return ok; }
};

MatchingDiagnostics is_matching(const MatchingCollection& collection, int R);
Configuration reconstruct(const MatchingCollection& collection, int R);

struct NestingForest {
  // parent[i] = index of the parent contour, or -1 for the root Lambda_0.
  std::vector<int> parent;
  std::vector<int> depth;
};

NestingForest nesting_order(const MatchingCollection& collection);

Complex contour_weight(const SpinModel& model, const Contour& contour, Complex z);

// Region of Z^d (window grid) or of T_L given as a membership mask over a grid.
struct Region {
  Grid grid;
  std::vector<bool> member;
  std::size_t size() const;
  static Region box(int dim, Coord lower, Coord extent);  // a box of Z^d
  static Region sites(const Grid& grid, const SiteSet& sites);
};

struct EnumerationOptions {
  std::uint64_t budget = std::uint64_t{1} << 22;
};

// Sum over matching collections in the region whose external contours are
// q-contours, enumerated through the configuration bijection.
Complex contour_partition_function(const SpinModel& model, const Region& region, Spin q, Complex z,
                                   const EnumerationOptions& options = {});

// Direct spin sum over configurations equal to q off the region with every
// contour inside it; weight exp(-sum of local energies over the region).
Complex restricted_spin_sum(const SpinModel& model, const Region& region, Spin q, Complex z,
                            const EnumerationOptions& options = {});

// All single q-contours Y with V(Y) inside the region.
std::vector<Contour> contours_in_region(const SpinModel& model, const Region& region, Spin q,
                                        const EnumerationOptions& options = {});

struct IdentityReport {
  Complex exact;
  Complex full_sum;     // contours and network summed per configuration
  Complex network_sum;  // grouped by network with phase partition functions inside
  double max_relative_deviation = 0.0;
  std::size_t configurations = 0;
  std::size_t networks = 0;
};

IdentityReport torus_contour_identity_check(const SpinModel& model, int L, Complex z,
                                            const EnumerationOptions& options = {});

// reconstruct(extract(sigma)) == sigma on T_L: every configuration when there
// are at most `exhaustive_limit` of them, otherwise `samples` seeded draws.
struct RoundTripReport {
  std::uint64_t checked = 0;
  std::uint64_t passed = 0;
  bool exhaustive = false;
  std::vector<std::uint64_t> failures;  // configuration indices or sample numbers, first few
  bool ok() const { return checked == passed; }
};
RoundTripReport round_trip_check(const SpinModel& model, int L, std::uint64_t exhaustive_limit = 1u << 20,
                                 std::uint64_t samples = 2000, std::uint64_t seed = 1, int workers = 1);

// True when supports of distinct objects would merge in a common configuration.
bool supports_close(const Grid& grid, const SiteSet& a, const SiteSet& b, int R);

}  // namespace psz
