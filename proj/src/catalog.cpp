#include "psz/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "psz/error.hpp"

namespace psz {

std::vector<Coord> canonical_shape(std::vector<Coord> coords, int dim) {
  if (coords.empty()) return coords;
  Coord lo = coords.front();
  for (const auto& c : coords)
    for (int a = 0; a < dim; ++a) lo[a] = std::min(lo[a], c[a]);
  for (auto& c : coords) c = c - lo;
  std::sort(coords.begin(), coords.end());
  return coords;
}

DeviationKey deviation_key(const Configuration& config) {
  DeviationKey key;
  for (std::size_t i = 0; i < config.grid.size(); ++i)
    if (config.spins[i] != config.background) key.emplace_back(config.grid.coord(i), config.spins[i]);
  std::sort(key.begin(), key.end());
  if (key.empty()) return key;
  const Coord origin = key.front().first;
  for (auto& [c, s] : key) c = c - origin;
  return key;
}

namespace {

int dilation_slack(int dim, int R, int cap) {
  // Sites enclosed by a support of size `cap` fit in a cube of side cap/(2d(2R+1)).
  const double side = static_cast<double>(cap) / (2.0 * dim * (2 * R + 1));
  return static_cast<int>(std::floor(std::pow(side, dim)));
}

std::vector<Coord> step_offsets(int dim, int step) {
  std::vector<Coord> out;
  for (const auto& o : box_offsets(dim, step))
    if (o != Coord{}) out.push_back(o);
  return out;
}

struct Builder {
  int dim, R;
  std::size_t num_spins;
  Spin q;
  CatalogOptions options;
  int dilation_cap;
  std::vector<Coord> steps, box;
  std::vector<Coord> cells;
  std::map<Coord, int> dilation;
  std::set<Coord> seen;
  std::vector<CatalogContour> found;
  std::uint64_t work = 0;

  void add_dilation(const Coord& c, int sign) {
    for (const auto& o : box) {
      auto it = dilation.find(c + o);
      if (sign > 0) {
        if (it == dilation.end()) dilation.emplace(c + o, 1);
        else ++it->second;
      } else if (--it->second == 0) {
        dilation.erase(it);
      }
    }
  }

  void emit() {
    Coord lo = cells.front(), hi = cells.front();
    for (const auto& c : cells)
      for (int a = 0; a < dim; ++a) {
        lo[a] = std::min(lo[a], c[a]);
        hi[a] = std::max(hi[a], c[a]);
      }
    Coord wl{}, we{};
    for (int a = 0; a < dim; ++a) {
      wl[a] = lo[a] - R - 2;
      we[a] = hi[a] - lo[a] + 1 + 2 * R + 4;
    }
    const Grid g = Grid::window(dim, wl, we);
    std::vector<std::size_t> idx;
    for (const auto& c : cells) idx.push_back(*g.index(c));
    const std::size_t choices = num_spins - 1;
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < cells.size(); ++i) total *= choices;
    for (std::uint64_t k = 0; k < total; ++k) {
      if (++work > options.budget) fail(ErrorKind::budget, "contour catalog exceeds its work budget");
      Configuration config = Configuration::constant(g, q);
      std::uint64_t r = k;
      for (auto i : idx) {
        auto s = static_cast<Spin>(r % choices);
        r /= choices;
        config.spins[i] = s >= q ? static_cast<Spin>(s + 1) : s;
      }
      const ContourGraph graph = contour_graph(config, R);
      if (graph.components.size() != 1) continue;
      if (static_cast<int>(graph.boundary.size()) > options.size_cap) continue;
      CatalogContour entry;
      entry.contour = make_contour(config, graph.boundary, false);
      entry.deviations = deviation_key(config);
      for (auto s : entry.contour.support) entry.support.push_back(g.coord(s));
      for (auto s : entry.contour.volume()) entry.volume.push_back(g.coord(s));
      for (std::size_t c = 0; c < entry.contour.interior.size(); ++c) {
        std::vector<Coord> comp;
        for (auto s : entry.contour.interior[c]) comp.push_back(g.coord(s));
        entry.interior.push_back(std::move(comp));
        entry.interior_labels.push_back(entry.contour.interior_labels[c]);
      }
      Coord slo = entry.support.front(), shi = entry.support.front();
      for (const auto& c : entry.support)
        for (int a = 0; a < dim; ++a) {
          slo[a] = std::min(slo[a], c[a]);
          shi[a] = std::max(shi[a], c[a]);
        }
      entry.support_lower = slo;
      for (int a = 0; a < dim; ++a) entry.support_extent[a] = shi[a] - slo[a] + 1;
      found.push_back(std::move(entry));
    }
  }

  // Redelmeier enumeration of step-connected cell sets whose first cell in
  // lexicographic order is the origin.
  void grow(std::vector<Coord> untried) {
    while (!untried.empty()) {
      const Coord c = untried.back();
      untried.pop_back();
      cells.push_back(c);
      add_dilation(c, +1);
      if (static_cast<int>(dilation.size()) <= dilation_cap) {
        emit();
        std::vector<Coord> added;
        for (const auto& o : steps) {
          const Coord n = c + o;
          if (n > Coord{} && seen.insert(n).second) added.push_back(n);
        }
        std::vector<Coord> next = untried;
        next.insert(next.end(), added.begin(), added.end());
        grow(std::move(next));
        for (const auto& n : added) seen.erase(n);
      }
      add_dilation(c, -1);
      cells.pop_back();
    }
  }
};

}  // namespace

ContourCatalog build_catalog(int dim, int R, std::size_t num_spins, Spin q, const CatalogOptions& options) {
  require(dim >= 1 && dim <= kMaxDim, "dimension out of range");
  require(R >= 1, "range must be positive");
  require(num_spins >= 2, "need at least two spin values");
  require(q < num_spins, "exterior spin out of range");
  ContourCatalog cat{dim, R, num_spins, q, options.size_cap, {}};
  const int slack = options.interior_slack >= 0 ? options.interior_slack : dilation_slack(dim, R, options.size_cap);
  Builder b{dim, R, num_spins, q, options, options.size_cap + slack,
            step_offsets(dim, std::max(2 * R + 1, 3 * R)), box_offsets(dim, R), {}, {}, {}, {}, 0};
  b.seen.insert(Coord{});
  b.grow({Coord{}});
  cat.entries = std::move(b.found);
  std::stable_sort(cat.entries.begin(), cat.entries.end(), [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return x.size() < y.size();
    return x.deviations < y.deviations;
  });
  return cat;
}

std::vector<DeviationKey> window_contours(int dim, int R, std::size_t num_spins, Spin q, Coord free_extent,
                                          int size_cap) {
  Coord lower{}, extent{};
  std::size_t free_count = 1;
  for (int a = 0; a < dim; ++a) {
    lower[a] = -(R + 2);
    extent[a] = free_extent[a] + 2 * (R + 2);
    free_count *= static_cast<std::size_t>(free_extent[a]);
  }
  const Grid g = Grid::window(dim, lower, extent);
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Coord c = g.coord(i);
    bool in = true;
    for (int a = 0; a < dim; ++a) in = in && c[a] >= 0 && c[a] < free_extent[a];
    if (in) free.push_back(i);
  }
  const double states = std::pow(static_cast<double>(num_spins), static_cast<double>(free_count));
  require(states <= 1e8, "window too large for exhaustive contour search");
  std::set<DeviationKey> keys;
  Configuration config = Configuration::constant(g, q);
  for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(states); ++k) {
    std::uint64_t r = k;
    for (auto i : free) {
      config.spins[i] = static_cast<Spin>(r % num_spins);
      r /= num_spins;
    }
    const ContourGraph graph = contour_graph(config, R);
    if (graph.components.size() != 1 || static_cast<int>(graph.boundary.size()) > size_cap) continue;
    keys.insert(deviation_key(config));
  }
  return {keys.begin(), keys.end()};
}

}  // namespace psz
