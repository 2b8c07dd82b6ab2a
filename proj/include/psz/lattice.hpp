#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace psz {

using Complex = std::complex<double>;

constexpr int kMaxDim = 4;
using Coord = std::array<int, kMaxDim>;
using Spin = std::uint8_t;  // index into the model's spin set
using SiteSet = std::vector<std::size_t>;  // sorted site indices

Coord operator+(Coord a, const Coord& b);
Coord operator-(Coord a, const Coord& b);
int chebyshev(const Coord& a, const Coord& b, int dim);

// A finite index space of lattice sites: either the torus T_L or a box window
// of Z^d. Outside a window every site carries the configuration's background.
class Grid {
 public:
  static Grid torus(int dim, int side);
  static Grid window(int dim, Coord lower, Coord extent);

  int dim() const { return dim_; }
  bool periodic() const { return periodic_; }
  std::size_t size() const { return size_; }
  int extent(int axis) const { return extent_[axis]; }
  int side() const { return extent_[0]; }
  const Coord& lower() const { return lower_; }

  Coord coord(std::size_t index) const;
  std::optional<std::size_t> index(Coord c) const;
  std::size_t wrap_index(Coord c) const;  // torus only

  // Nearest-neighbour sites inside the grid (2d on the torus, fewer at window edges).
  std::vector<std::size_t> neighbours(std::size_t index) const;
  // True when a window site has a neighbour outside the window.
  bool on_window_edge(std::size_t index) const;

  // Displacement b - a; on the torus the representative in (-L/2, L/2].
  Coord displacement(const Coord& a, const Coord& b) const;

  bool operator==(const Grid& other) const = default;

 private:
  int dim_ = 2;
  bool periodic_ = true;
  Coord lower_{};
  Coord extent_{};
  Coord stride_{};
  std::size_t size_ = 0;
};

// All offsets of the cube [-radius, radius]^dim.
std::vector<Coord> box_offsets(int dim, int radius);
// Nearest-neighbour unit offsets (2*dim of them).
std::vector<Coord> unit_offsets(int dim);

// Diameter (side of the smallest enclosing cubic box, in sites) of a site set.
int diameter(const Grid& grid, const SiteSet& sites);
// Per-axis extent of the smallest enclosing box.
Coord extents(const Grid& grid, const SiteSet& sites);

struct Configuration {
  Grid grid;
  std::vector<Spin> spins;
  Spin background = 0;  // value outside a window; unused on the torus

  Spin at(const Coord& c) const;
  Spin operator[](std::size_t i) const { return spins[i]; }

  static Configuration constant(const Grid& grid, Spin value);
  // The background only matters on a window.
  bool operator==(const Configuration& other) const {
    return grid == other.grid && spins == other.spins && (grid.periodic() || background == other.background);
  }
};

// Connected components of `sites` under nearest-neighbour adjacency.
std::vector<SiteSet> nn_components(const Grid& grid, const std::vector<bool>& member);

}  // namespace psz
