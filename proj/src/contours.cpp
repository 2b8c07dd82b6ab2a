#include "psz/contours.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "psz/error.hpp"
#include "psz/parallel.hpp"
#include "psz/torus_exact.hpp"

namespace psz {

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::vector<bool> mask_of(std::size_t n, const SiteSet& sites) {
  std::vector<bool> m(n, false);
  for (auto s : sites) m[s] = true;
  return m;
}

bool is_small(const Grid& grid, int diam) { return !grid.periodic() || 2 * diam < grid.side(); }

void check_window_margin(const Configuration& config, int R) {
  if (config.grid.periodic()) return;
  const Grid& g = config.grid;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (config.spins[i] == config.background) continue;
    const Coord c = g.coord(i);
    for (int a = 0; a < g.dim(); ++a) {
      if (c[a] - g.lower()[a] < R + 1 || g.lower()[a] + g.extent(a) - 1 - c[a] < R + 1)
        fail(ErrorKind::invalid_argument, "window configuration needs a margin of R+1; use padded()");
    }
  }
}

}  // namespace

ContourGraph contour_graph(const Configuration& config, int R) {
  const Grid& g = config.grid;
  ContourGraph out;
  out.boundary = r_boundary(config, R);
  const auto in_b = mask_of(g.size(), out.boundary);
  const auto box = box_offsets(g.dim(), R);
  UnionFind uf(g.size());
  // Every boundary site centres a non-constant box; boundary sites inside it are linked.
  for (auto c : out.boundary) {
    const Coord cc = g.coord(c);
    for (const auto& o : box) {
      if (auto j = g.index(cc + o); j && in_b[*j]) uf.unite(c, *j);
    }
  }
  std::map<std::size_t, SiteSet> groups;
  for (auto s : out.boundary) groups[uf.find(s)].push_back(s);
  for (auto& [root, comp] : groups) {
    const int diam = diameter(g, comp);
    out.components.push_back(std::move(comp));
    out.diameters.push_back(diam);
    out.small.push_back(is_small(g, diam));
  }
  return out;
}

ExteriorInterior exterior_interior(const Grid& grid, const SiteSet& support, bool network) {
  const auto in_support = mask_of(grid.size(), support);
  std::vector<bool> outside(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) outside[i] = !in_support[i];
  auto comps = nn_components(grid, outside);
  ExteriorInterior out;
  if (network) {
    out.interior = std::move(comps);
    return out;
  }
  int found = 0;
  for (auto& comp : comps) {
    bool exterior = false;
    if (grid.periodic()) {
      exterior = 2 * comp.size() > grid.size();
    } else {
      exterior = std::any_of(comp.begin(), comp.end(), [&](auto s) { return grid.on_window_edge(s); });
    }
    if (exterior) {
      ++found;
      out.exterior = std::move(comp);
    } else {
      out.interior.push_back(std::move(comp));
    }
  }
  ensure(found == 1, "support does not have a unique exterior component");
  return out;
}

SiteSet Contour::volume() const {
  SiteSet v = support;
  for (const auto& c : interior) v.insert(v.end(), c.begin(), c.end());
  std::sort(v.begin(), v.end());
  return v;
}

Contour make_contour(const Configuration& config, const SiteSet& support, bool network) {
  const Grid& g = config.grid;
  Contour y;
  y.support = support;
  y.network = network;
  auto parts = exterior_interior(g, support, network);
  y.exterior = std::move(parts.exterior);
  y.interior = std::move(parts.interior);
  const auto in_support = mask_of(g.size(), support);
  y.config = config;
  auto label_of = [&](const SiteSet& comp) -> Spin {
    std::optional<Spin> label;
    for (auto s : comp) {
      const auto nb = g.neighbours(s);
      if (std::none_of(nb.begin(), nb.end(), [&](auto n) { return in_support[n]; })) continue;
      if (!label) label = config.spins[s];
      ensure(*label == config.spins[s], "configuration not constant along a complement component");
    }
    ensure(label.has_value(), "complement component not adjacent to the support");
    return *label;
  };
  auto fill = [&](const SiteSet& comp, Spin label) {
    for (auto s : comp) y.config.spins[s] = label;
  };
  if (!network) {
    y.exterior_label = g.periodic() ? label_of(y.exterior) : config.background;
    if (!g.periodic()) ensure(label_of(y.exterior) == config.background, "window exterior label mismatch");
    fill(y.exterior, y.exterior_label);
    y.config.background = y.exterior_label;
  }
  for (const auto& comp : y.interior) {
    const Spin label = label_of(comp);
    y.interior_labels.push_back(label);
    fill(comp, label);
  }
  return y;
}

MatchingCollection extract(const Configuration& config, int R) {
  const Grid& g = config.grid;
  if (g.periodic()) require(g.side() >= 2 * R + 1, "torus side must be at least 2R+1");
  check_window_margin(config, R);
  const ContourGraph graph = contour_graph(config, R);
  MatchingCollection out{g, {}, std::nullopt, 0};
  SiteSet network_support;
  for (std::size_t i = 0; i < graph.components.size(); ++i) {
    if (graph.small[i]) {
      out.contours.push_back(make_contour(config, graph.components[i], false));
    } else {
      network_support.insert(network_support.end(), graph.components[i].begin(),
                             graph.components[i].end());
    }
  }
  if (!network_support.empty()) {
    std::sort(network_support.begin(), network_support.end());
    out.network = make_contour(config, network_support, true);
  }
  if (out.contours.empty() && !out.network) out.vacuum_label = g.periodic() ? config.spins[0] : config.background;
  return out;
}

bool supports_close(const Grid& grid, const SiteSet& a, const SiteSet& b, int R) {
  const auto in_b = mask_of(grid.size(), b);
  const auto box = box_offsets(grid.dim(), R);
  for (auto s : a) {
    const Coord c = grid.coord(s);
    for (const auto& o : box) {
      if (auto j = grid.index(c + o); j && in_b[*j]) return true;
    }
  }
  return false;
}

namespace {

std::vector<const Contour*> objects_of(const MatchingCollection& col) {
  std::vector<const Contour*> out;
  for (const auto& y : col.contours) out.push_back(&y);
  if (col.network) out.push_back(&*col.network);
  return out;
}

std::string site_name(const Grid& g, std::size_t s) {
  const Coord c = g.coord(s);
  std::string out = "(";
  for (int i = 0; i < g.dim(); ++i) out += (i ? "," : "") + std::to_string(c[i]);
  return out + ")";
}

}  // namespace

MatchingDiagnostics is_matching(const MatchingCollection& col, int R) {
  MatchingDiagnostics diag;
  auto problem = [&](std::string msg) {
    diag.ok = false;
    diag.problems.push_back(std::move(msg));
  };
  const Grid& g = col.grid;
  const auto objs = objects_of(col);
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const Contour& y = *objs[i];
    if (y.support.empty()) {
      problem("object " + std::to_string(i) + " has empty support");
      continue;
    }
    if (!(y.config.grid == g)) problem("object " + std::to_string(i) + " lives on a different grid");
    if (r_boundary(y.config, R) != y.support)
      problem("object " + std::to_string(i) + ": boundary of its configuration differs from its support");
    const auto graph = contour_graph(y.config, R);
    if (!y.network && graph.components.size() != 1)
      problem("contour " + std::to_string(i) + " has a disconnected boundary graph");
    for (std::size_t k = 0; k < graph.components.size(); ++k) {
      if (graph.small[k] == y.network)
        problem("object " + std::to_string(i) + " violates the L/2 diameter rule");
    }
  }
  for (std::size_t i = 0; i < objs.size(); ++i)
    for (std::size_t j = i + 1; j < objs.size(); ++j)
      if (supports_close(g, objs[i]->support, objs[j]->support, R))
        problem("supports of objects " + std::to_string(i) + " and " + std::to_string(j) +
                " are not separated by more than R");
  std::vector<bool> in_any(g.size(), false);
  for (auto* y : objs)
    for (auto s : y->support) in_any[s] = true;
  std::vector<bool> free_mask(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) free_mask[i] = !in_any[i];
  for (const auto& comp : nn_components(g, free_mask)) {
    const auto in_comp = mask_of(g.size(), comp);
    std::optional<Spin> label;
    for (auto* y : objs) {
      bool adjacent = false;
      for (auto s : y->support) {
        for (auto n : g.neighbours(s)) adjacent = adjacent || in_comp[n];
        if (adjacent) break;
      }
      if (!adjacent) continue;
      const Spin l = y->config.spins[comp.front()];
      if (label && *label != l) {
        problem("label mismatch on the component containing " + site_name(g, comp.front()));
        break;
      }
      label = l;
    }
  }
  return diag;
}

Configuration reconstruct(const MatchingCollection& col, int R) {
  const auto diag = is_matching(col, R);
  if (!diag) {
    std::string msg = "label mismatch or invalid collection:";
    for (const auto& p : diag.problems) msg += " " + p + ";";
    fail(ErrorKind::invalid_argument, msg);
  }
  const Grid& g = col.grid;
  const auto objs = objects_of(col);
  if (objs.empty()) {
    Configuration c = Configuration::constant(g, col.vacuum_label);
    return c;
  }
  Configuration out = Configuration::constant(g, objs.front()->config.background);
  std::vector<bool> in_any(g.size(), false);
  for (auto* y : objs)
    for (auto s : y->support) {
      out.spins[s] = y->config.spins[s];
      in_any[s] = true;
    }
  std::vector<bool> free_mask(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) free_mask[i] = !in_any[i];
  for (const auto& comp : nn_components(g, free_mask)) {
    const auto in_comp = mask_of(g.size(), comp);
    const Contour* source = nullptr;
    for (auto* y : objs) {
      for (auto s : y->support)
        for (auto n : g.neighbours(s))
          if (in_comp[n]) source = y;
      if (source) break;
    }
    ensure(source != nullptr, "complement component without an adjacent object");
    for (auto s : comp) out.spins[s] = source->config.spins[s];
  }
  return out;
}

NestingForest nesting_order(const MatchingCollection& col) {
  const Grid& g = col.grid;
  const std::size_t n = col.contours.size();
  std::vector<std::vector<bool>> vol(n), inside(n);
  std::vector<std::size_t> vol_size(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = col.contours[i].volume();
    vol[i] = mask_of(g.size(), v);
    vol_size[i] = v.size();
    SiteSet interior;
    for (const auto& c : col.contours[i].interior) interior.insert(interior.end(), c.begin(), c.end());
    inside[i] = mask_of(g.size(), interior);
  }
  auto subset = [&](const std::vector<bool>& a, const std::vector<bool>& b) {
    for (std::size_t s = 0; s < a.size(); ++s)
      if (a[s] && !b[s]) return false;
    return true;
  };
  auto disjoint = [&](const std::vector<bool>& a, const std::vector<bool>& b) {
    for (std::size_t s = 0; s < a.size(); ++s)
      if (a[s] && b[s]) return false;
    return true;
  };
  NestingForest forest;
  forest.parent.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool a = subset(vol[i], inside[j]);
      const bool b = subset(vol[j], inside[i]);
      const bool c = disjoint(vol[i], vol[j]);
      ensure(static_cast<int>(a) + static_cast<int>(b) + static_cast<int>(c) == 1,
             "nesting trichotomy violated");
      if (a && (forest.parent[i] < 0 || vol_size[j] < vol_size[forest.parent[i]]))
        forest.parent[i] = static_cast<int>(j);
    }
  }
  forest.depth.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int d = 1;
    for (int p = forest.parent[i]; p >= 0; p = forest.parent[p]) ++d;
    forest.depth[i] = d;
  }
  return forest;
}

Complex contour_weight(const SpinModel& model, const Contour& contour, Complex z) {
  return std::exp(-excitation_energy(model, contour.config, z));
}

std::size_t Region::size() const { return static_cast<std::size_t>(std::count(member.begin(), member.end(), true)); }

Region Region::box(int dim, Coord lower, Coord extent) {
  Coord wl = lower, we = extent;
  for (int a = 0; a < dim; ++a) {
    wl[a] -= 2;
    we[a] += 4;
  }
  Region r{Grid::window(dim, wl, we), {}};
  r.member.assign(r.grid.size(), false);
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const Coord c = r.grid.coord(i);
    bool in = true;
    for (int a = 0; a < dim; ++a) in = in && c[a] >= lower[a] && c[a] < lower[a] + extent[a];
    r.member[i] = in;
  }
  return r;
}

Region Region::sites(const Grid& grid, const SiteSet& sites) { return Region{grid, mask_of(grid.size(), sites)}; }

namespace {

// Sites whose centred R-box lies inside the region: the only sites allowed to
// differ from the boundary phase.
SiteSet free_sites(const Region& region, int R) {
  const Grid& g = region.grid;
  const auto box = box_offsets(g.dim(), R);
  SiteSet out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!region.member[i]) continue;
    const Coord c = g.coord(i);
    bool ok = true;
    for (const auto& o : box) {
      auto j = g.index(c + o);
      if (!j || !region.member[*j]) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(i);
  }
  return out;
}

// Visits every configuration equal to q off the free sites whose contours all
// lie in the region with outer label q.
template <class Visit>
void for_each_admissible(const SpinModel& model, const Region& region, Spin q,
                         const EnumerationOptions& options, Visit&& visit) {
  const Grid& g = region.grid;
  const int R = model.range;
  if (!g.periodic()) {
    // The window must leave room around the region for exterior detection.
    for (std::size_t i = 0; i < g.size(); ++i)
      if (region.member[i]) {
        const Coord c = g.coord(i);
        for (int a = 0; a < g.dim(); ++a)
          require(c[a] - g.lower()[a] >= 1 && g.lower()[a] + g.extent(a) - 1 - c[a] >= 1,
                  "region window needs a margin of one site");
      }
  }
  const SiteSet free = free_sites(region, R);
  const std::size_t base = model.num_spins();
  double states = std::pow(static_cast<double>(base), static_cast<double>(free.size()));
  if (states > static_cast<double>(options.budget))
    fail(ErrorKind::budget, "contour enumeration over " + std::to_string(free.size()) +
                                " free sites exceeds the budget");
  const auto total = static_cast<std::uint64_t>(states);
  Configuration config = Configuration::constant(g, q);
  for (std::uint64_t k = 0; k < total; ++k) {
    std::uint64_t r = k;
    for (auto s : free) {
      config.spins[s] = static_cast<Spin>(r % base);
      r /= base;
    }
    if (!g.periodic()) {
      // Free sites are at least R+1 from the window edge only if the margin allows.
      bool near_edge = false;
      for (auto s : free) {
        if (config.spins[s] == q) continue;
        const Coord c = g.coord(s);
        for (int a = 0; a < g.dim(); ++a)
          near_edge = near_edge || c[a] - g.lower()[a] < R + 1 || g.lower()[a] + g.extent(a) - 1 - c[a] < R + 1;
      }
      ensure(!near_edge, "region window margin too small");
    }
    MatchingCollection col = extract(config, R);
    if (col.network) continue;
    std::vector<bool> covered(g.size(), false);
    bool inside = true;
    for (const auto& y : col.contours) {
      for (auto s : y.volume()) {
        covered[s] = true;
        inside = inside && region.member[s];
      }
    }
    if (!inside) continue;
    bool outer_q = true;
    for (std::size_t s = 0; s < g.size() && outer_q; ++s)
      if (!covered[s] && config.spins[s] != q) outer_q = false;
    if (!outer_q) continue;
    visit(config, col);
  }
}

std::vector<Complex> spin_thetas(const SpinModel& model, Complex z) {
  std::vector<Complex> t;
  for (Spin s = 0; s < model.num_spins(); ++s) t.push_back(theta(model, s, z));
  return t;
}

}  // namespace

Complex contour_partition_function(const SpinModel& model, const Region& region, Spin q, Complex z,
                                   const EnumerationOptions& options) {
  const auto thetas = spin_thetas(model, z);
  const Grid& g = region.grid;
  std::vector<Complex> terms;
  for_each_admissible(model, region, q, options, [&](const Configuration& config, const MatchingCollection& col) {
    std::vector<bool> in_support(g.size(), false);
    Complex w = 1.0;
    for (const auto& y : col.contours) {
      for (auto s : y.support) in_support[s] = true;
      w *= contour_weight(model, y, z);
    }
    for (std::size_t s = 0; s < g.size(); ++s)
      if (region.member[s] && !in_support[s]) w *= thetas[config.spins[s]];
    terms.push_back(w);
  });
  return pairwise_sum(terms);
}

Complex restricted_spin_sum(const SpinModel& model, const Region& region, Spin q, Complex z,
                            const EnumerationOptions& options) {
  const Complex log_z = std::log(z);
  const Grid& g = region.grid;
  std::vector<Complex> terms;
  for_each_admissible(model, region, q, options, [&](const Configuration& config, const MatchingCollection&) {
    Complex e = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s)
      if (region.member[s]) e += local_energy(model, config, s, log_z);
    terms.push_back(std::exp(-e));
  });
  return pairwise_sum(terms);
}

std::vector<Contour> contours_in_region(const SpinModel& model, const Region& region, Spin q,
                                        const EnumerationOptions& options) {
  std::vector<Contour> out;
  for_each_admissible(model, region, q, options, [&](const Configuration&, const MatchingCollection& col) {
    if (col.contours.size() == 1) out.push_back(col.contours.front());
  });
  return out;
}

IdentityReport torus_contour_identity_check(const SpinModel& model, int L, Complex z,
                                            const EnumerationOptions& options) {
  const Grid g = Grid::torus(model.dim, L);
  const int R = model.range;
  const auto thetas = spin_thetas(model, z);
  const std::size_t base = model.num_spins();
  const double states = std::pow(static_cast<double>(base), static_cast<double>(g.size()));
  if (states > static_cast<double>(options.budget))
    fail(ErrorKind::budget, "torus identity check exceeds the enumeration budget");
  IdentityReport rep;
  rep.configurations = static_cast<std::size_t>(states);
  ExactOptions exact_opts;
  rep.exact = partition_function_exact(model, L, z, exact_opts);

  std::vector<Complex> full_terms;
  std::map<std::vector<Spin>, Contour> networks;
  Configuration config = Configuration::constant(g, 0);
  for (std::size_t k = 0; k < rep.configurations; ++k) {
    std::size_t r = k;
    for (auto& s : config.spins) {
      s = static_cast<Spin>(r % base);
      r /= base;
    }
    const MatchingCollection col = extract(config, R);
    std::vector<bool> in_support(g.size(), false);
    Complex w = 1.0;
    for (const auto& y : col.contours) {
      for (auto s : y.support) in_support[s] = true;
      w *= contour_weight(model, y, z);
    }
    if (col.network) {
      for (auto s : col.network->support) in_support[s] = true;
      w *= contour_weight(model, *col.network, z);
      networks.emplace(col.network->config.spins, *col.network);
    }
    for (std::size_t s = 0; s < g.size(); ++s)
      if (!in_support[s]) w *= thetas[config.spins[s]];
    full_terms.push_back(w);
  }
  rep.full_sum = pairwise_sum(full_terms);
  rep.networks = networks.size();

  std::map<std::pair<SiteSet, Spin>, Complex> cache;
  auto z_region = [&](const SiteSet& sites, Spin m) {
    if (sites.empty()) return Complex(1.0);
    auto key = std::make_pair(sites, m);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const Complex v = contour_partition_function(model, Region::sites(g, sites), m, z, options);
    cache.emplace(key, v);
    return v;
  };
  std::vector<Complex> network_terms;
  SiteSet all(g.size());
  std::iota(all.begin(), all.end(), 0);
  for (Spin m = 0; m < base; ++m) network_terms.push_back(z_region(all, m));
  for (const auto& [key, net] : networks) {
    Complex w = contour_weight(model, net, z);
    std::map<Spin, SiteSet> by_label;
    for (std::size_t i = 0; i < net.interior.size(); ++i) {
      auto& dst = by_label[net.interior_labels[i]];
      dst.insert(dst.end(), net.interior[i].begin(), net.interior[i].end());
    }
    for (auto& [m, sites] : by_label) {
      std::sort(sites.begin(), sites.end());
      w *= z_region(sites, m);
    }
    network_terms.push_back(w);
  }
  rep.network_sum = pairwise_sum(network_terms);
  const double scale = std::abs(rep.exact);
  rep.max_relative_deviation =
      std::max(std::abs(rep.full_sum - rep.exact), std::abs(rep.network_sum - rep.exact)) / scale;
  return rep;
}

RoundTripReport round_trip_check(const SpinModel& model, int L, std::uint64_t exhaustive_limit, std::uint64_t samples,
                                 std::uint64_t seed, int workers) {
  const Grid grid = Grid::torus(model.dim, L);
  const std::size_t base = model.num_spins();
  double total_d = std::pow(static_cast<double>(base), static_cast<double>(grid.size()));
  RoundTripReport rep;
  rep.exhaustive = total_d <= static_cast<double>(exhaustive_limit);
  const std::uint64_t total = rep.exhaustive ? static_cast<std::uint64_t>(total_d) : samples;
  const auto config_for = [&](std::uint64_t k) {
    Configuration c = Configuration::constant(grid, 0);
    if (rep.exhaustive) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        c.spins[i] = static_cast<Spin>(k % base);
        k /= base;
      }
    } else {
      std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (k + 1));
      std::uniform_int_distribution<std::size_t> pick(0, base - 1);
      for (auto& s : c.spins) s = static_cast<Spin>(pick(rng));
    }
    return c;
  };
  constexpr std::uint64_t block = 4096;
  const std::uint64_t blocks = (total + block - 1) / block;
  struct Partial {
    std::uint64_t passed = 0;
    std::vector<std::uint64_t> failures;
  };
  const auto parts = parallel_map<Partial>(blocks, workers, [&](std::size_t b) {
    Partial p;
    for (std::uint64_t k = b * block; k < std::min(total, (b + 1) * block); ++k) {
      const auto c = config_for(k);
      if (reconstruct(extract(c, model.range), model.range) == c) ++p.passed;
      else if (p.failures.size() < 8) p.failures.push_back(k);
    }
    return p;
  });
  rep.checked = total;
  for (const auto& p : parts) {
    rep.passed += p.passed;
    for (auto f : p.failures)
      if (rep.failures.size() < 8) rep.failures.push_back(f);
  }
  return rep;
}

}  // namespace psz
