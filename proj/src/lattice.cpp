#include "psz/lattice.hpp"

#include <algorithm>
#include <cstdlib>

#include "psz/error.hpp"

namespace psz {

Coord operator+(Coord a, const Coord& b) {
  for (int i = 0; i < kMaxDim; ++i) a[i] += b[i];
  return a;
}

Coord operator-(Coord a, const Coord& b) {
  for (int i = 0; i < kMaxDim; ++i) a[i] -= b[i];
  return a;
}

int chebyshev(const Coord& a, const Coord& b, int dim) {
  int m = 0;
  for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}


Grid Grid::torus(int dim, int side) {
  require(dim >= 1 && dim <= kMaxDim, "dimension out of range");
  require(side >= 1, "torus side must be positive");
  Coord extent{};
  for (int i = 0; i < dim; ++i) extent[i] = side;
  Grid g = window(dim, Coord{}, extent);
  g.periodic_ = true;
  return g;
}

Grid Grid::window(int dim, Coord lower, Coord extent) {
  require(dim >= 1 && dim <= kMaxDim, "dimension out of range");
  Grid g;
  g.dim_ = dim;
  g.periodic_ = false;
  g.lower_ = lower;
  g.extent_ = extent;
  std::size_t stride = 1;
  for (int i = dim - 1; i >= 0; --i) {
    require(extent[i] >= 1, "window extent must be positive");
    g.stride_[i] = static_cast<int>(stride);
    stride *= static_cast<std::size_t>(extent[i]);
  }
  g.size_ = stride;
  return g;
}

Coord Grid::coord(std::size_t index) const {
  Coord c{};
  for (int i = 0; i < dim_; ++i) {
    c[i] = static_cast<int>(index / stride_[i]) + lower_[i];
    index %= stride_[i];
  }
  return c;
}

std::optional<std::size_t> Grid::index(Coord c) const {
  std::size_t idx = 0;
  for (int i = 0; i < dim_; ++i) {
    int v = c[i] - lower_[i];
    if (periodic_) {
      v %= extent_[i];
      if (v < 0) v += extent_[i];
    } else if (v < 0 || v >= extent_[i]) {
      return std::nullopt;
    }
    idx += static_cast<std::size_t>(v) * stride_[i];
  }
  return idx;
}

std::size_t Grid::wrap_index(Coord c) const {
  auto idx = index(c);
  ensure(idx.has_value(), "site outside grid");
  return *idx;
}

std::vector<std::size_t> Grid::neighbours(std::size_t index_) const {
  std::vector<std::size_t> out;
  out.reserve(2 * dim_);
  const Coord c = coord(index_);
  for (int i = 0; i < dim_; ++i) {
    for (int s : {-1, 1}) {
      Coord n = c;
      n[i] += s;
      if (auto j = index(n)) out.push_back(*j);
    }
  }
  return out;
}

bool Grid::on_window_edge(std::size_t index_) const {
  if (periodic_) return false;
  const Coord c = coord(index_);
  for (int i = 0; i < dim_; ++i) {
    if (c[i] == lower_[i] || c[i] == lower_[i] + extent_[i] - 1) return true;
  }
  return false;
}

Coord Grid::displacement(const Coord& a, const Coord& b) const {
  Coord d = b - a;
  if (periodic_) {
    for (int i = 0; i < dim_; ++i) {
      const int L = extent_[i];
      d[i] %= L;
      if (d[i] < 0) d[i] += L;
      if (2 * d[i] > L) d[i] -= L;
    }
  }
  return d;
}

std::vector<Coord> box_offsets(int dim, int radius) {
  std::vector<Coord> out;
  const int w = 2 * radius + 1;
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(w);
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Coord c{};
    std::size_t r = k;
    for (int i = dim - 1; i >= 0; --i) {
      c[i] = static_cast<int>(r % w) - radius;
      r /= w;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<Coord> unit_offsets(int dim) {
  std::vector<Coord> out;
  for (int i = 0; i < dim; ++i) {
    for (int s : {-1, 1}) {
      Coord c{};
      c[i] = s;
      out.push_back(c);
    }
  }
  return out;
}

Coord extents(const Grid& grid, const SiteSet& sites) {
  Coord ext{};
  if (sites.empty()) return ext;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    std::vector<int> vals;
    vals.reserve(sites.size());
    for (auto s : sites) vals.push_back(grid.coord(s)[axis]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    if (!grid.periodic()) {
      ext[axis] = vals.back() - vals.front() + 1;
      continue;
    }
    // Circular extent: the complement of the largest unoccupied gap.
    const int L = grid.extent(axis);
    int largest_gap = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const int next = (i + 1 < vals.size()) ? vals[i + 1] : vals.front() + L;
      largest_gap = std::max(largest_gap, next - vals[i] - 1);
    }
    ext[axis] = L - largest_gap;
  }
  return ext;
}

int diameter(const Grid& grid, const SiteSet& sites) {
  const Coord ext = extents(grid, sites);
  int d = 0;
  for (int i = 0; i < grid.dim(); ++i) d = std::max(d, ext[i]);
  return d;
}

Spin Configuration::at(const Coord& c) const {
  auto idx = grid.index(c);
  return idx ? spins[*idx] : background;
}

Configuration Configuration::constant(const Grid& grid, Spin value) {
  return Configuration{grid, std::vector<Spin>(grid.size(), value), value};
}

std::vector<SiteSet> nn_components(const Grid& grid, const std::vector<bool>& member) {
  std::vector<SiteSet> comps;
  std::vector<bool> seen(grid.size(), false);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < grid.size(); ++start) {
    if (!member[start] || seen[start]) continue;
    SiteSet comp;
    stack.push_back(start);
    seen[start] = true;
    while (!stack.empty()) {
      const auto s = stack.back();
      stack.pop_back();
      comp.push_back(s);
      for (auto n : grid.neighbours(s)) {
        if (member[n] && !seen[n]) {
          seen[n] = true;
          stack.push_back(n);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

}  // namespace psz
