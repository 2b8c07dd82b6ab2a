#include "psz/metastable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>

#include "psz/contours.hpp"
#include "psz/error.hpp"

namespace psz {

MollifierValue mollifier_eval(double x) {
  if (x <= -2.0) return {0.0, 0.0, 0.0};
  if (x >= -1.0) return {1.0, 0.0, 0.0};
  const double t = x + 2.0;
  const double t2 = t * t, t3 = t2 * t;
  return {t3 * (10.0 - 15.0 * t + 6.0 * t2), 30.0 * t2 * (1.0 - 2.0 * t + t2), 60.0 * t * (1.0 - 3.0 * t + 2.0 * t2)};
}

const PhaseFreeEnergy& FreeEnergies::of(Spin phase) const {
  for (const auto& p : phases)
    if (p.phase == phase) return p;
  fail(ErrorKind::invalid_argument, "phase not present in the free-energy table");
}

namespace {

struct Placed {
  std::uint32_t entry;
  Coord offset;
  auto operator<=>(const Placed&) const = default;
};

struct ClusterClass {
  std::vector<std::pair<std::uint32_t, int>> factors;  // catalog entry and power
  double ursell = 0.0;
  int norm = 0;
};

struct EntryData {
  Complex e0;    // excitation energy at z = 1
  Complex e1;    // coefficient of log z (energy = e0 - e1 log z)
  std::vector<Coord> dilation;  // support dilated by R
  std::set<Coord> support_set;
  std::vector<Coord> interior_all;
  std::map<Spin, std::vector<Coord>> interior_by_label;
};

struct PhaseData {
  ContourCatalog catalog;
  std::vector<EntryData> entries;
  std::vector<ClusterClass> classes;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<Coord>> offsets;  // incompatible displacements
};

std::vector<Coord> dilate(const std::vector<Coord>& sites, int dim, int R) {
  std::set<Coord> out;
  const auto box = box_offsets(dim, R);
  for (const auto& s : sites)
    for (const auto& o : box) out.insert(s + o);
  return {out.begin(), out.end()};
}

// Window region of Z^d holding the given sites with room around them.
Region region_of(int dim, const std::vector<Coord>& coords) {
  Coord lo = coords.front(), hi = coords.front();
  for (const auto& c : coords)
    for (int a = 0; a < dim; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  Coord wl{}, we{};
  for (int a = 0; a < dim; ++a) {
    wl[a] = lo[a] - 2;
    we[a] = hi[a] - lo[a] + 5;
  }
  const Grid g = Grid::window(dim, wl, we);
  SiteSet sites;
  for (const auto& c : coords) sites.push_back(*g.index(c));
  std::sort(sites.begin(), sites.end());
  return Region::sites(g, sites);
}

}  // namespace

struct MetastableModel::Impl {
  SpinModel model;
  Regime regime;
  Cutoffs cutoffs;
  std::vector<Complex> g0, g1;  // ground energy = g0 - g1 log z
  std::vector<PhaseData> phases;  // indexed by spin
  std::vector<std::vector<std::vector<int>>> incompatible_counts;  // per spin, lazily filled
  std::vector<std::unique_ptr<std::once_flag>> count_flags;
  mutable std::mutex cap_mutex;
  std::size_t cap_total = 0;
  std::vector<CapEvent> cap_events;

  void log_cap(const CapEvent& event) {
    std::lock_guard lock(cap_mutex);
    ++cap_total;
    if (cap_events.size() < 256) cap_events.push_back(event);
  }

  const std::vector<Coord>& offsets(Spin q, std::uint32_t e, std::uint32_t f) {
    auto& pd = phases[q];
    auto key = std::make_pair(e, f);
    if (auto it = pd.offsets.find(key); it != pd.offsets.end()) return it->second;
    std::set<Coord> d;
    for (const auto& x : pd.entries[e].dilation)
      for (const auto& y : pd.catalog.entries[f].support) d.insert(x - y);
    return pd.offsets.emplace(key, std::vector<Coord>(d.begin(), d.end())).first->second;
  }

  bool placed_incompatible(Spin q, const Placed& a, const Placed& b) {
    const auto& off = offsets(q, a.entry, b.entry);
    return std::binary_search(off.begin(), off.end(), b.offset - a.offset);
  }

  std::vector<Placed> canonical(std::vector<Placed> c) const {
    std::vector<Placed> best;
    for (const auto& anchor : c) {
      std::vector<Placed> t = c;
      for (auto& p : t) p.offset = p.offset - anchor.offset;
      std::sort(t.begin(), t.end());
      if (best.empty() || t < best) best = std::move(t);
    }
    return best;
  }

  void build_classes(Spin q) {
    auto& pd = phases[q];
    const int k = cutoffs.cluster_norm;
    std::set<std::vector<Placed>> level;
    for (std::uint32_t e = 0; e < pd.catalog.entries.size(); ++e)
      if (pd.catalog.entries[e].size() <= k) level.insert({Placed{e, Coord{}}});
    while (!level.empty()) {
      std::set<std::vector<Placed>> next;
      for (const auto& members : level) {
        int norm = 0;
        for (const auto& p : members) norm += pd.catalog.entries[p.entry].size();
        // Record the class.
        ClusterClass cls;
        cls.norm = norm;
        std::vector<Placed> distinct;
        std::vector<int> mult;
        for (const auto& p : members) {
          if (!distinct.empty() && distinct.back() == p) {
            ++mult.back();
          } else {
            distinct.push_back(p);
            mult.push_back(1);
          }
        }
        std::vector<std::vector<bool>> adj(distinct.size(), std::vector<bool>(distinct.size(), false));
        for (std::size_t i = 0; i < distinct.size(); ++i)
          for (std::size_t j = 0; j < distinct.size(); ++j)
            adj[i][j] = i != j && placed_incompatible(q, distinct[i], distinct[j]);
        cls.ursell = boost::rational_cast<double>(ursell_from_pattern(mult, adj));
        std::map<std::uint32_t, int> powers;
        for (const auto& p : members) ++powers[p.entry];
        cls.factors.assign(powers.begin(), powers.end());
        if (cls.ursell != 0.0) pd.classes.push_back(std::move(cls));
        // Extend by one more placed contour touching the cluster.
        std::set<Placed> anchors(members.begin(), members.end());
        for (const auto& p : anchors)
          for (std::uint32_t f = 0; f < pd.catalog.entries.size(); ++f) {
            if (norm + pd.catalog.entries[f].size() > k) continue;
            for (const auto& d : offsets(q, p.entry, f)) {
              std::vector<Placed> grown = members;
              grown.push_back(Placed{f, p.offset + d});
              next.insert(canonical(std::move(grown)));
            }
          }
      }
      level = std::move(next);
    }
  }

  const std::vector<std::vector<int>>& counts(Spin q) {
    std::call_once(*count_flags[q], [&] {
      auto& pd = phases[q];
      const std::size_t n = pd.catalog.entries.size();
      incompatible_counts[q].assign(n, std::vector<int>(n, 0));
      for (std::uint32_t e = 0; e < n; ++e)
        for (std::uint32_t f = 0; f < n; ++f) {
          std::set<Coord> d;
          for (const auto& x : pd.entries[e].dilation)
            for (const auto& y : pd.catalog.entries[f].support) d.insert(x - y);
          incompatible_counts[q][e][f] = static_cast<int>(d.size());
        }
    });
    return incompatible_counts[q];
  }
};

namespace {

// Per-z evaluation with memoized truncated weights and region partition functions.
struct Evaluator {
  MetastableModel::Impl& m;
  Complex z, log_z;
  std::vector<Complex> theta;
  std::vector<std::vector<std::optional<Complex>>> k;
  std::vector<std::vector<double>> phi;
  std::map<std::pair<Spin, std::vector<Coord>>, Complex> zprime;
  std::vector<CapEvent> caps;

  Evaluator(MetastableModel::Impl& impl, Complex z_) : m(impl), z(z_), log_z(std::log(z_)) {
    require(z != Complex(0.0), "z must be nonzero");
    for (std::size_t s = 0; s < m.model.num_spins(); ++s) theta.push_back(std::exp(-m.g0[s] + m.g1[s] * log_z));
    k.resize(m.phases.size());
    phi.resize(m.phases.size());
    for (std::size_t s = 0; s < m.phases.size(); ++s) {
      k[s].assign(m.phases[s].catalog.entries.size(), std::nullopt);
      phi[s].assign(m.phases[s].catalog.entries.size(), 0.0);
    }
  }

  // Activity over theta_q^{|Y|}, computed in the exponent.
  Complex base_weight(Spin q, std::size_t e) const {
    const auto& d = m.phases[q].entries[e];
    const double n = m.phases[q].catalog.entries[e].size();
    return std::exp(-d.e0 + d.e1 * log_z + n * (m.g0[q] - m.g1[q] * log_z));
  }

  Complex exact_region(Spin label, const std::vector<Coord>& coords) {
    return contour_partition_function(m.model, region_of(m.model.dim, coords), label, z);
  }

  Complex weight(Spin q, std::size_t e) {
    if (k[q][e]) return *k[q][e];
    Complex result = 0.0;
    if (theta[q] != Complex(0.0)) {
      const auto& entry = m.phases[q].catalog.entries[e];
      const auto& d = m.phases[q].entries[e];
      const double n = entry.size();
      double cut = 1.0;
      Complex ratio = 1.0;
      if (!entry.has_interior()) {
        for (std::size_t s = 0; s < theta.size(); ++s) {
          if (theta[s] == Complex(0.0)) continue;
          cut *= mollifier_eval(m.regime.tau / 4.0 + std::log(std::abs(theta[q]) / std::abs(theta[s]))).value;
        }
      } else {
        const Complex own = region_partition(q, d.interior_all);
        for (std::size_t s = 0; s < theta.size(); ++s) {
          if (theta[s] == Complex(0.0)) continue;
          const Complex other = region_partition(static_cast<Spin>(s), d.interior_all);
          if (other == Complex(0.0)) continue;
          const double arg = m.regime.tau / 4.0 +
                             (std::log(std::abs(own)) - std::log(std::abs(other))) / n +
                             std::log(std::abs(theta[q]) / std::abs(theta[s]));
          cut *= mollifier_eval(arg).value;
        }
        for (const auto& [label, sites] : d.interior_by_label)
          ratio *= exact_region(label, sites) / region_partition(q, sites);
      }
      phi[q][e] = cut;
      const Complex kp = base_weight(q, e) * cut * ratio;
      const double bound = std::exp(-(m.regime.c0 + m.regime.tau / 2.0) * n);
      if (std::abs(kp) > bound) {
        caps.push_back(CapEvent{q, e, z, std::abs(kp), bound});
        m.log_cap(caps.back());
      } else {
        result = kp;
      }
    }
    k[q][e] = result;
    return result;
  }

  Complex region_partition(Spin q, std::vector<Coord> region) {
    if (theta[q] == Complex(0.0)) return 0.0;
    std::sort(region.begin(), region.end());
    const int dim = m.model.dim;
    auto key = std::make_pair(q, canonical_shape(region, dim));
    if (auto it = zprime.find(key); it != zprime.end()) return it->second;
    const std::set<Coord> inside(region.begin(), region.end());
    const auto& pd = m.phases[q];
    struct Candidate {
      std::size_t entry;
      Coord shift;
    };
    std::vector<Candidate> cands;
    for (std::size_t e = 0; e < pd.catalog.entries.size(); ++e) {
      const auto& vol = pd.catalog.entries[e].volume;
      if (vol.size() > region.size()) continue;
      for (const auto& x : region) {
        const Coord shift = x - vol.front();
        if (std::all_of(vol.begin(), vol.end(), [&](const Coord& v) { return inside.count(v + shift) > 0; }))
          cands.push_back({e, shift});
      }
    }
    PolymerSystem sys;
    for (const auto& c : cands) sys.add(weight(q, c.entry), pd.catalog.entries[c.entry].size());
    for (std::size_t i = 0; i < cands.size(); ++i)
      for (std::size_t j = i + 1; j < cands.size(); ++j) {
        const auto& dil = pd.entries[cands[i].entry].dilation;
        const auto& supp = pd.entries[cands[j].entry].support_set;
        const Coord rel = cands[i].shift - cands[j].shift;
        if (std::any_of(dil.begin(), dil.end(), [&](const Coord& x) { return supp.count(x + rel) > 0; }))
          sys.set_incompatible(i, j);
      }
    const Complex poly = polymer_partition_function(sys, all_polymers(sys), 4096);
    const Complex value = std::exp(static_cast<double>(region.size()) * (-m.g0[q] + m.g1[q] * log_z)) * poly;
    zprime.emplace(std::move(key), value);
    return value;
  }

  Complex pressure(Spin q) {
    Complex s = 0.0;
    for (const auto& cls : m.phases[q].classes) {
      Complex term = cls.ursell;
      for (auto [e, p] : cls.factors) term *= std::pow(weight(q, e), p);
      s += term;
    }
    return s;
  }
};

}  // namespace

MetastableModel::MetastableModel(SpinModel model, Regime regime, Cutoffs cutoffs) : impl_(std::make_unique<Impl>()) {
  model.validate();
  require(regime.tau >= 0.0, "tau must be nonnegative");
  require(cutoffs.cluster_norm <= cutoffs.contour_size, "cluster norm cutoff cannot exceed the contour size cutoff");
  Impl& m = *impl_;
  m.model = std::move(model);
  m.regime = regime;
  m.cutoffs = cutoffs;
  const std::size_t ns = m.model.num_spins();
  for (Spin s = 0; s < ns; ++s) {
    const Complex at1 = ground_state_energy(m.model, s, 1.0);
    const Complex ate = ground_state_energy(m.model, s, std::exp(1.0));
    m.g0.push_back(at1);
    m.g1.push_back(at1 - ate);
  }
  m.phases.resize(ns);
  m.incompatible_counts.resize(ns);
  for (Spin s = 0; s < ns; ++s) {
    m.count_flags.push_back(std::make_unique<std::once_flag>());
    auto& pd = m.phases[s];
    pd.catalog = build_catalog(m.model.dim, m.model.range, ns, s, {.size_cap = cutoffs.contour_size});
    for (const auto& e : pd.catalog.entries) {
      EntryData d;
      d.e0 = excitation_energy(m.model, e.contour.config, 1.0);
      d.e1 = d.e0 - excitation_energy(m.model, e.contour.config, std::exp(1.0));
      d.dilation = dilate(e.support, m.model.dim, m.model.range);
      d.support_set.insert(e.support.begin(), e.support.end());
      for (std::size_t c = 0; c < e.interior.size(); ++c) {
        d.interior_all.insert(d.interior_all.end(), e.interior[c].begin(), e.interior[c].end());
        auto& dst = d.interior_by_label[e.interior_labels[c]];
        dst.insert(dst.end(), e.interior[c].begin(), e.interior[c].end());
      }
      std::sort(d.interior_all.begin(), d.interior_all.end());
      pd.entries.push_back(std::move(d));
    }
  }
  for (Spin s = 0; s < ns; ++s) m.build_classes(s);
}

MetastableModel::~MetastableModel() = default;
MetastableModel::MetastableModel(MetastableModel&&) noexcept = default;
MetastableModel& MetastableModel::operator=(MetastableModel&&) noexcept = default;

const SpinModel& MetastableModel::model() const { return impl_->model; }
const Regime& MetastableModel::regime() const { return impl_->regime; }
const Cutoffs& MetastableModel::cutoffs() const { return impl_->cutoffs; }
const ContourCatalog& MetastableModel::catalog(Spin q) const {
  require(q < impl_->phases.size(), "spin out of range");
  return impl_->phases[q].catalog;
}
std::size_t MetastableModel::cluster_classes(Spin q) const { return impl_->phases.at(q).classes.size(); }

std::size_t MetastableModel::cap_count() const {
  std::lock_guard lock(impl_->cap_mutex);
  return impl_->cap_total;
}

std::vector<CapEvent> MetastableModel::cap_log() const {
  std::lock_guard lock(impl_->cap_mutex);
  return impl_->cap_events;
}

void MetastableModel::clear_cap_log() const {
  std::lock_guard lock(impl_->cap_mutex);
  impl_->cap_total = 0;
  impl_->cap_events.clear();
}

Complex MetastableModel::theta(Spin q, Complex z) const {
  return std::exp(-impl_->g0.at(q) + impl_->g1.at(q) * std::log(z));
}

Complex MetastableModel::activity(Spin q, std::size_t entry, Complex z) const {
  const auto& d = impl_->phases.at(q).entries.at(entry);
  return std::exp(-d.e0 + d.e1 * std::log(z));
}

PhaseWeights MetastableModel::weights(Spin q, Complex z) const {
  require(q < impl_->phases.size(), "spin out of range");
  Evaluator ev(*impl_, z);
  PhaseWeights out;
  out.phase = q;
  out.z = z;
  out.theta = ev.theta[q];
  for (std::size_t e = 0; e < impl_->phases[q].catalog.entries.size(); ++e) {
    out.truncated.push_back(ev.weight(q, e));
    out.cutoff.push_back(ev.phi[q][e]);
  }
  out.caps = std::move(ev.caps);
  return out;
}

Complex MetastableModel::untruncated_weight(Spin q, std::size_t entry, Complex z) const {
  Evaluator ev(*impl_, z);
  const auto& d = impl_->phases.at(q).entries.at(entry);
  Complex w = ev.base_weight(q, entry);
  for (const auto& [label, sites] : d.interior_by_label) w *= ev.exact_region(label, sites) / ev.exact_region(q, sites);
  return w;
}

Complex MetastableModel::truncated_partition(const std::vector<Coord>& region, Spin q, Complex z) const {
  require(q < impl_->phases.size(), "spin out of range");
  if (region.empty()) return 1.0;
  Evaluator ev(*impl_, z);
  return ev.region_partition(q, region);
}

Complex MetastableModel::pressure(Spin q, Complex z) const {
  require(q < impl_->phases.size(), "spin out of range");
  Evaluator ev(*impl_, z);
  return ev.pressure(q);
}

PressureReport MetastableModel::pressure_report(Spin q, Complex z) const {
  require(q < impl_->phases.size(), "spin out of range");
  Evaluator ev(*impl_, z);
  PressureReport rep;
  rep.s = ev.pressure(q);
  rep.clusters = impl_->phases[q].classes.size();
  const auto& cat = impl_->phases[q].catalog;
  const std::size_t n = cat.entries.size();
  std::vector<double> mod(n);
  for (std::size_t e = 0; e < n; ++e) mod[e] = std::abs(ev.weight(q, e));
  rep.caps = ev.caps;
  const auto& counts = impl_->counts(q);
  const int k = impl_->cutoffs.cluster_norm;
  double best = std::numeric_limits<double>::infinity();
  // Search the certificate a(Y) = alpha |Y| with weights |K| e^{eta |Y|}.
  for (int ie = 0; ie <= 60; ++ie) {
    const double eta = 0.05 * ie;
    for (int ia = 1; ia <= 60; ++ia) {
      const double alpha = 0.05 * ia;
      Certificate cert;
      cert.worst_margin = std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < n; ++e) {
        double sum = 0.0;
        for (std::size_t f = 0; f < n; ++f) sum += counts[e][f] * mod[f] * std::exp((eta + alpha) * cat.entries[f].size());
        const double margin = alpha * cat.entries[e].size() - sum;
        if (margin < cert.worst_margin) {
          cert.worst_margin = margin;
          cert.worst_polymer = e;
        }
      }
      cert.ok = cert.worst_margin >= 0.0;
      if (!cert.ok) continue;
      double b = 0.0;
      for (std::size_t e = 0; e < n; ++e)
        b += cat.entries[e].volume.size() * mod[e] * std::exp((eta + alpha) * cat.entries[e].size());
      const double bound = std::exp(-eta * (k + 1)) * b;
      if (bound < best) {
        best = bound;
        rep.error_bound = bound;
        rep.eta = eta;
        rep.a_scale = alpha;
        rep.certificate = cert;
      }
    }
  }
  if (!std::isfinite(best))
    fail(ErrorKind::check_failure, "no convergence certificate for the truncated contour weights; pressure refused");
  return rep;
}

Complex MetastableModel::zeta(Spin q, Complex z) const { return theta(q, z) * std::exp(pressure(q, z)); }

FreeEnergies MetastableModel::free_energies(Complex z) const {
  Evaluator ev(*impl_, z);
  FreeEnergies out;
  out.z = z;
  out.f = std::numeric_limits<double>::infinity();
  for (Spin q : impl_->model.phases()) {
    PhaseFreeEnergy p;
    p.phase = q;
    p.multiplicity = impl_->model.orbit_size(q);
    p.theta = ev.theta[q];
    if (p.theta == Complex(0.0)) {
      p.f = std::numeric_limits<double>::infinity();
    } else {
      p.s = ev.pressure(q);
      p.zeta = p.theta * std::exp(p.s);
      p.f = -std::log(std::abs(p.theta)) - p.s.real();
    }
    out.f = std::min(out.f, p.f);
    out.phases.push_back(p);
  }
  for (auto& p : out.phases) {
    p.a = p.f - out.f;
    if (p.a < 1e-9) out.stable.push_back(p.phase);
  }
  out.caps = std::move(ev.caps);
  return out;
}

FiniteVolume MetastableModel::finite_volume(Spin q, int L, Complex z, Placement placement, std::size_t budget) const {
  const Impl& m = *impl_;
  require(q < m.phases.size(), "spin out of range");
  require(L >= 2 * m.model.range + 1, "torus side must be at least 2R+1");
  Evaluator ev(*impl_, z);
  const Grid g = Grid::torus(m.model.dim, L);
  const auto& pd = m.phases[q];
  const std::size_t words = (g.size() + 63) / 64;
  struct Item {
    std::vector<std::uint64_t> support, dilation;
    Complex weight;
  };
  std::vector<Item> items;
  for (std::size_t e = 0; e < pd.catalog.entries.size(); ++e) {
    const auto& entry = pd.catalog.entries[e];
    bool fits = true;
    int diam = 0;
    for (int a = 0; a < m.model.dim; ++a) {
      fits = fits && entry.support_extent[a] <= L;
      diam = std::max(diam, entry.support_extent[a]);
    }
    if (placement == Placement::literal) fits = 2 * diam < L;
    if (!fits) continue;
    const Complex w = ev.weight(q, e);
    for (std::size_t t = 0; t < g.size(); ++t) {
      const Coord shift = g.coord(t);
      Item it{std::vector<std::uint64_t>(words, 0), std::vector<std::uint64_t>(words, 0), w};
      for (const auto& c : entry.support) {
        const auto s = g.wrap_index(c + shift);
        it.support[s / 64] |= std::uint64_t{1} << (s % 64);
      }
      for (const auto& c : pd.entries[e].dilation) {
        const auto s = g.wrap_index(c + shift);
        it.dilation[s / 64] |= std::uint64_t{1} << (s % 64);
      }
      items.push_back(std::move(it));
    }
  }
  PolymerSystem sys;
  for (const auto& it : items) sys.add(it.weight);
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      bool clash = false;
      for (std::size_t w = 0; w < words && !clash; ++w) clash = (items[i].dilation[w] & items[j].support[w]) != 0;
      if (clash) sys.set_incompatible(i, j);
    }
  FiniteVolume out;
  out.polymers = items.size();
  const Complex poly = polymer_partition_function(sys, all_polymers(sys), budget);
  const double volume = static_cast<double>(g.size());
  out.log_partition = std::log(poly);
  out.zeta = ev.theta[q] * std::exp(out.log_partition / volume);
  out.power = std::exp(volume * (-m.g0[q] + m.g1[q] * ev.log_z)) * poly;
  return out;
}

RegimeEstimate estimate_regime(const SpinModel& model, const std::vector<Complex>& samples, int size_cap) {
  require(!samples.empty(), "need at least one sample point");
  RegimeEstimate est;
  est.tau = std::numeric_limits<double>::infinity();
  for (Spin q = 0; q < model.num_spins(); ++q) {
    const auto cat = build_catalog(model.dim, model.range, model.num_spins(), q, {.size_cap = size_cap});
    for (const auto& e : cat.entries)
      for (auto z : samples) {
        const double rho = std::abs(std::exp(-excitation_energy(model, e.contour.config, z)));
        const double t = (-std::log(rho) + e.size() * std::log(theta_max(model, z))) / e.size();
        est.tau = std::min(est.tau, t);
      }
  }
  est.c0 = estimate_c0(model.dim, model.num_spins(), model.range, size_cap).c0;
  for (auto z : samples) {
    const double h = 1e-4 * std::max(1.0, std::abs(z));
    const double big = theta_max(model, z);
    for (Spin m = 0; m < model.num_spins(); ++m) {
      const Complex t0 = theta(model, m, z), tp = theta(model, m, z + h), tm = theta(model, m, z - h);
      const double d1 = std::abs((tp - tm) / (2 * h)) / big;
      const double d2 = std::abs((tp - 2.0 * t0 + tm) / (h * h)) / big;
      est.M = std::max({est.M, d1, std::sqrt(d2)});
    }
  }
  est.hypothesis_met = est.tau >= 4.0 * est.c0 + 16.0;
  return est;
}

namespace {

double cross(Complex o, Complex a, Complex b) {
  return (a.real() - o.real()) * (b.imag() - o.imag()) - (a.imag() - o.imag()) * (b.real() - o.real());
}

double segment_distance(Complex p, Complex a, Complex b) {
  const Complex ab = b - a;
  const double len2 = std::norm(ab);
  if (len2 == 0.0) return std::abs(p - a);
  const double t = std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

// Distance from p to the convex hull of pts (0 when inside).
double hull_distance(Complex p, std::vector<Complex> pts) {
  std::sort(pts.begin(), pts.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  std::vector<Complex> hull;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t start = hull.size();
    for (const auto& q : pts) {
      while (hull.size() >= start + 2 && cross(hull[hull.size() - 2], hull.back(), q) <= 0) hull.pop_back();
      hull.push_back(q);
    }
    hull.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  if (hull.size() <= 2) {
    if (hull.empty()) return std::abs(p - pts.front());
    return segment_distance(p, hull.front(), hull.back());
  }
  bool inside = true;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Complex a = hull[i], b = hull[(i + 1) % hull.size()];
    if (cross(a, b, p) < 0) inside = false;
    d = std::min(d, segment_distance(p, a, b));
  }
  return inside ? 0.0 : d;
}

}  // namespace

PhaseGeometryReport phase_geometry_check(const MetastableModel& meta, const std::vector<Complex>& grid, double alpha) {
  PhaseGeometryReport rep;
  rep.alpha = alpha;
  rep.attained_alpha = std::numeric_limits<double>::infinity();
  rep.convex_margin = std::numeric_limits<double>::infinity();
  rep.zeta_separation = std::numeric_limits<double>::infinity();
  const auto phases = meta.model().phases();
  for (auto z : grid) {
    double big = 0.0;
    for (auto m : phases) big = std::max(big, std::abs(meta.theta(m, z)));
    std::vector<Spin> near;
    for (auto m : phases)
      if (std::abs(meta.theta(m, z)) >= big * std::exp(-alpha)) near.push_back(m);
    if (near.size() < 2) continue;
    ++rep.overlap_points;
    const double h = 1e-6 * std::max(1.0, std::abs(z));
    std::vector<Complex> v, w;
    for (auto m : near) {
      v.push_back((std::log(meta.theta(m, z + h)) - std::log(meta.theta(m, z - h))) / (2 * h));
      w.push_back((std::log(meta.zeta(m, z + h)) - std::log(meta.zeta(m, z - h))) / (2 * h));
    }
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j) {
        rep.attained_alpha = std::min(rep.attained_alpha, std::abs(v[i] - v[j]));
        rep.zeta_separation = std::min(rep.zeta_separation, std::abs(w[i] - w[j]));
      }
    if (near.size() >= 3) {
      ++rep.multi_overlap_points;
      for (std::size_t i = 0; i < v.size(); ++i) {
        std::vector<Complex> others;
        for (std::size_t j = 0; j < v.size(); ++j)
          if (j != i) others.push_back(v[j]);
        rep.convex_margin = std::min(rep.convex_margin, hull_distance(v[i], others));
      }
    }
  }
  if (rep.overlap_points == 0) {
    rep.ok = true;  // single-phase region: nothing to check
    return rep;
  }
  rep.ok = rep.attained_alpha >= alpha && (rep.multi_overlap_points == 0 || rep.convex_margin >= alpha) &&
           rep.zeta_separation >= alpha - 2.0 * std::exp(-meta.regime().tau / 2.0);
  return rep;
}

}  // namespace psz
