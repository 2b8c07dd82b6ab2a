#pragma once

#include <cstdint>
#include <vector>

#include "psz/contours.hpp"

namespace psz {

// Sites differing from the exterior phase, with their spins, translated so the
// lexicographically first one is the origin.
using DeviationKey = std::vector<std::pair<Coord, Spin>>;

// One q-contour of Z^d up to translation. Coordinates are those of the
// contour's window; the lexicographically first deviating site is the origin.
struct CatalogContour {
  Contour contour;
  DeviationKey deviations;
  std::vector<Coord> support;
  std::vector<Coord> volume;  // support and interior
  std::vector<std::vector<Coord>> interior;
  std::vector<Spin> interior_labels;
  Coord support_lower{};
  Coord support_extent{};
  int size() const { return static_cast<int>(support.size()); }
  bool has_interior() const { return !interior.empty(); }
};

struct CatalogOptions {
  int size_cap = 20;
  // Extra room for enclosed sites when pruning by the dilated deviation set;
  // negative means an automatic estimate.
  int interior_slack = -1;
  std::uint64_t budget = std::uint64_t{1} << 24;
};

struct ContourCatalog {
  int dim = 2;
  int range = 1;
  std::size_t num_spins = 2;
  Spin exterior = 0;
  int size_cap = 0;
  std::vector<CatalogContour> entries;  // sorted by size, then support
};

// All q-contours with |supp Y| <= size_cap, generated from connected
// deviation sets and deduplicated by translation.
ContourCatalog build_catalog(int dim, int R, std::size_t num_spins, Spin q, const CatalogOptions& options = {});

// Canonical translation key of a coordinate set (sorted, shifted to start at the origin).
std::vector<Coord> canonical_shape(std::vector<Coord> coords, int dim);

DeviationKey deviation_key(const Configuration& config);

// Deviation keys of all single contours obtained by extracting every
// configuration of a free box; an independent check of catalog completeness.
std::vector<DeviationKey> window_contours(int dim, int R, std::size_t num_spins, Spin q, Coord free_extent,
                                          int size_cap);

}  // namespace psz
