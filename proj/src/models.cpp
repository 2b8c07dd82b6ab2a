#include "psz/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "psz/error.hpp"

namespace psz {

Spin SpinModel::spin_index(int label_value) const {
  auto it = std::find(spin_labels.begin(), spin_labels.end(), label_value);
  require(it != spin_labels.end(), "unknown spin label " + std::to_string(label_value));
  return static_cast<Spin>(it - spin_labels.begin());
}

std::vector<Spin> SpinModel::phases() const {
  std::vector<Spin> out;
  for (const auto& orbit : orbits) out.push_back(orbit.front());
  return out;
}

std::size_t SpinModel::orbit_of(Spin s) const {
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    if (std::find(orbits[i].begin(), orbits[i].end(), s) != orbits[i].end()) return i;
  }
  fail(ErrorKind::internal, "spin not covered by any orbit");
}

void SpinModel::validate() const {
  require(dim >= 2 && dim <= kMaxDim, "dimension must lie in [2, 4]");
  require(range >= 1, "range must be at least 1");
  require(spin_labels.size() >= 2 && spin_labels.size() <= 250, "spin set size out of range");
  for (const auto& term : terms) {
    require(!term.shape.empty(), "empty interaction shape");
    require(std::find(term.shape.begin(), term.shape.end(), Coord{}) != term.shape.end(),
            "interaction shape must contain the origin");
    int diam = 0;
    for (const auto& a : term.shape)
      for (const auto& b : term.shape) diam = std::max(diam, chebyshev(a, b, dim) + 1);
    require(diam <= range + 1, "interaction shape '" + term.label + "' exceeds range");
  }
  std::vector<int> covered(spin_labels.size(), 0);
  for (const auto& orbit : orbits)
    for (auto s : orbit) {
      require(s < spin_labels.size(), "orbit member out of range");
      ++covered[s];
    }
  for (int c : covered) require(c == 1, "orbits must partition the spin set");
}

namespace {

Coord unit(int axis) {
  Coord c{};
  c[axis] = 1;
  return c;
}

std::vector<std::vector<Spin>> singleton_orbits(std::size_t n) {
  std::vector<std::vector<Spin>> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<Spin>(i)});
  return out;
}

void add_pair_terms(SpinModel& model, const std::function<TermValue(std::span<const Spin>)>& f) {
  for (int axis = 0; axis < model.dim; ++axis) {
    model.terms.push_back({"bond" + std::to_string(axis), {Coord{}, unit(axis)}, f});
  }
}

}  // namespace

SpinModel ising(double J, int dim, Normalization norm) {
  require(J > 0.0, "Ising coupling must be positive (ferromagnetic)");
  SpinModel m;
  m.name = "ising";
  m.spin_labels = {-1, 1};
  m.dim = dim;
  m.range = 1;
  m.normalization = norm;
  m.parameter = "z = exp(2h)";
  m.domain = norm == Normalization::shifted ? "C" : "C minus the negative real axis";
  const bool shifted = norm == Normalization::shifted;
  m.terms.push_back({"field", {Coord{}}, [shifted](std::span<const Spin> s) {
                       const int sigma = s[0] == 1 ? 1 : -1;
                       return TermValue{0.0, shifted ? (sigma + 1) / 2.0 : sigma / 2.0};
                     }});
  add_pair_terms(m, [J](std::span<const Spin> s) {
    const int prod = (s[0] == s[1]) ? 1 : -1;
    return TermValue{-J * prod, 0.0};
  });
  m.orbits = singleton_orbits(2);
  m.validate();
  return m;
}

SpinModel perturbed_ising(double J, const std::vector<MultiSpinCoupling>& extra, int dim,
                          Normalization norm) {
  SpinModel m = ising(J, dim, norm);
  m.name = "perturbed_ising";
  int range = 1;
  for (const auto& c : extra) {
    int diam = 0;
    for (const auto& a : c.shape)
      for (const auto& b : c.shape) diam = std::max(diam, chebyshev(a, b, dim) + 1);
    range = std::max(range, diam - 1);
    const double coupling = c.coupling;
    m.terms.push_back({"multi", c.shape, [coupling](std::span<const Spin> s) {
                         int prod = 1;
                         for (auto v : s) prod *= (v == 1 ? 1 : -1);
                         return TermValue{-coupling * prod, 0.0};
                       }});
  }
  m.range = range;
  m.validate();
  return m;
}

SpinModel blume_capel(double J, double lambda, int dim, Normalization norm) {
  require(J > 0.0, "Blume-Capel coupling must be positive");
  SpinModel m;
  m.name = "blume_capel";
  m.spin_labels = {-1, 0, 1};
  m.dim = dim;
  m.range = 1;
  m.normalization = norm;
  m.parameter = "z = exp(h)";
  m.domain = norm == Normalization::shifted ? "C" : "C \\ {0}";
  const bool shifted = norm == Normalization::shifted;
  m.terms.push_back({"field", {Coord{}}, [lambda, shifted](std::span<const Spin> s) {
                       const int sigma = static_cast<int>(s[0]) - 1;
                       return TermValue{-lambda * sigma * sigma,
                                        static_cast<double>(shifted ? sigma + 1 : sigma)};
                     }});
  add_pair_terms(m, [J](std::span<const Spin> s) {
    const int diff = static_cast<int>(s[0]) - static_cast<int>(s[1]);
    return TermValue{J * diff * diff, 0.0};
  });
  m.orbits = singleton_orbits(3);
  m.validate();
  return m;
}

SpinModel potts(int q, double J, int dim) {
  require(q >= 2, "Potts model needs q >= 2");
  require(J > 0.0, "Potts coupling must be positive");
  SpinModel m;
  m.name = "potts";
  for (int i = 1; i <= q; ++i) m.spin_labels.push_back(i);
  m.dim = dim;
  m.range = 1;
  m.parameter = "z = exp(h)";
  m.domain = "C";
  m.terms.push_back({"field", {Coord{}}, [](std::span<const Spin> s) {
                       return TermValue{0.0, s[0] == 0 ? 1.0 : 0.0};
                     }});
  add_pair_terms(m, [J](std::span<const Spin> s) {
    return TermValue{s[0] == s[1] ? -J : 0.0, 0.0};
  });
  m.orbits.push_back({0});
  std::vector<Spin> rest;
  for (int i = 1; i < q; ++i) rest.push_back(static_cast<Spin>(i));
  m.orbits.push_back(rest);
  m.validate();
  return m;
}

SpinModel table_model(std::string name, std::vector<int> spin_labels, int dim,
                      const std::vector<TablePotential>& potentials,
                      std::vector<std::vector<Spin>> orbits) {
  SpinModel m;
  m.name = std::move(name);
  m.spin_labels = std::move(spin_labels);
  m.dim = dim;
  m.parameter = "z";
  m.domain = "user declared";
  const std::size_t n = m.spin_labels.size();
  int range = 1;
  for (const auto& p : potentials) {
    std::size_t expected = 1;
    for (std::size_t i = 0; i < p.shape.size(); ++i) expected *= n;
    require(p.table.size() == expected, "potential table size must be |S|^|shape|");
    int diam = 0;
    for (const auto& a : p.shape)
      for (const auto& b : p.shape) diam = std::max(diam, chebyshev(a, b, dim) + 1);
    range = std::max(range, diam - 1);
    auto table = p.table;
    m.terms.push_back({"table", p.shape, [table, n](std::span<const Spin> s) {
                         std::size_t idx = 0;
                         for (auto v : s) idx = idx * n + v;
                         return table[idx];
                       }});
  }
  m.range = range;
  m.orbits = orbits.empty() ? singleton_orbits(n) : std::move(orbits);
  m.validate();
  return m;
}

Complex term_energy(const InteractionTerm& term, std::span<const Spin> spins, Complex log_z) {
  const TermValue v = term.value(spins);
  return v.constant - v.z_power * log_z;
}

Complex ground_state_energy(const SpinModel& model, Spin m, Complex z) {
  const Complex log_z = std::log(z);
  Complex e = 0.0;
  for (const auto& term : model.terms) {
    // |shape| translates contain the origin, each weighted by 1/|shape|.
    const std::vector<Spin> spins(term.shape.size(), m);
    e += term_energy(term, spins, log_z);
  }
  return e;
}

Complex theta(const SpinModel& model, Spin m, Complex z) {
  return std::exp(-ground_state_energy(model, m, z));
}

double theta_max(const SpinModel& model, Complex z) {
  double best = 0.0;
  for (auto m : model.phases()) best = std::max(best, std::abs(theta(model, m, z)));
  return best;
}

double max_site_power(const SpinModel& model) {
  double best = 0.0;
  for (Spin m = 0; m < model.num_spins(); ++m) {
    double p = 0.0;
    for (const auto& term : model.terms) {
      const std::vector<Spin> spins(term.shape.size(), m);
      p += term.value(spins).z_power;
    }
    best = std::max(best, p);
  }
  return best;
}

namespace {

void check_window_padding(const Configuration& config, int R) {
  if (config.grid.periodic()) return;
  const Grid& g = config.grid;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (config.spins[i] == config.background) continue;
    const Coord c = g.coord(i);
    for (int a = 0; a < g.dim(); ++a) {
      if (c[a] - g.lower()[a] < R || g.lower()[a] + g.extent(a) - 1 - c[a] < R)
        fail(ErrorKind::invalid_argument, "window configuration is not padded; use padded()");
    }
  }
}

}  // namespace

SiteSet r_boundary(const Configuration& config, int R) {
  check_window_padding(config, R);
  const Grid& g = config.grid;
  const auto box = box_offsets(g.dim(), R);
  SiteSet out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Coord c = g.coord(i);
    const Spin first = config.at(c + box.front());
    for (const auto& o : box) {
      if (config.at(c + o) != first) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

Complex local_energy(const SpinModel& model, const Configuration& config, std::size_t site,
                     Complex log_z) {
  const Coord x = config.grid.coord(site);
  Complex e = 0.0;
  std::vector<Spin> spins;
  for (const auto& term : model.terms) {
    const double inv = 1.0 / static_cast<double>(term.shape.size());
    for (const auto& role : term.shape) {
      const Coord anchor = x - role;
      spins.clear();
      for (const auto& o : term.shape) spins.push_back(config.at(anchor + o));
      e += inv * term_energy(term, spins, log_z);
    }
  }
  return e;
}

Complex excitation_energy(const SpinModel& model, const Configuration& config, Complex z) {
  const Complex log_z = std::log(z);
  Complex e = 0.0;
  for (auto x : r_boundary(config, model.range)) e += local_energy(model, config, x, log_z);
  return e;
}

Complex hamiltonian_torus(const SpinModel& model, const Configuration& config, Complex z) {
  require(config.grid.periodic(), "hamiltonian_torus needs a torus configuration");
  require(config.grid.side() >= 2 * model.range + 1, "torus side must be at least 2R+1");
  const Complex log_z = std::log(z);
  const std::size_t q = model.num_spins();
  // Histogram of spin patterns per term, so the sum does not depend on site order.
  Complex h = 0.0;
  std::vector<Spin> spins;
  for (const auto& term : model.terms) {
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t a = 0; a < config.grid.size(); ++a) {
      const Coord anchor = config.grid.coord(a);
      std::size_t idx = 0;
      for (const auto& o : term.shape) idx = idx * q + config.at(anchor + o);
      ++counts[idx];
    }
    for (auto [idx, count] : counts) {
      spins.assign(term.shape.size(), 0);
      std::size_t r = idx;
      for (std::size_t k = spins.size(); k-- > 0;) {
        spins[k] = static_cast<Spin>(r % q);
        r /= q;
      }
      h += static_cast<double>(count) * term_energy(term, spins, log_z);
    }
  }
  return h;
}

Configuration padded(const Configuration& config, int margin) {
  if (config.grid.periodic()) return config;
  const Grid& g = config.grid;
  Coord lower = g.lower();
  Coord ext{};
  for (int a = 0; a < g.dim(); ++a) {
    lower[a] -= margin;
    ext[a] = g.extent(a) + 2 * margin;
  }
  Configuration out = Configuration::constant(Grid::window(g.dim(), lower, ext), config.background);
  for (std::size_t i = 0; i < g.size(); ++i) out.spins[*out.grid.index(g.coord(i))] = config.spins[i];
  return out;
}

}  // namespace psz
