#include "psz/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include "json.hpp"

#include "psz/catalog.hpp"
#include "psz/error.hpp"

namespace psz {

std::size_t PolymerSystem::add(Complex w, double polymer_size, double a_value) {
  require(polymer_size > 0.0, "polymer size must be positive");
  require(a_value >= 0.0, "a-function must be nonnegative");
  weight.push_back(w);
  size.push_back(polymer_size);
  a.push_back(a_value);
  neighbours.emplace_back();
  return weight.size() - 1;
}

void PolymerSystem::set_incompatible(std::size_t i, std::size_t j) {
  require(i < count() && j < count(), "polymer index out of range");
  if (i == j) return;
  for (auto [u, v] : {std::pair{i, j}, std::pair{j, i}}) {
    auto& n = neighbours[u];
    auto it = std::lower_bound(n.begin(), n.end(), v);
    if (it == n.end() || *it != v) n.insert(it, v);
  }
}

bool PolymerSystem::incompatible(std::size_t i, std::size_t j) const {
  if (i == j) return true;
  const auto& n = neighbours[i];
  return std::binary_search(n.begin(), n.end(), j);
}

void PolymerSystem::validate() const {
  require(size.size() == count() && a.size() == count() && neighbours.size() == count(),
          "polymer system arrays differ in length");
  for (std::size_t i = 0; i < count(); ++i)
    for (auto j : neighbours[i]) {
      require(j < count() && j != i, "bad incompatibility entry");
      require(incompatible(j, i), "incompatibility relation is not symmetric");
    }
}

std::vector<std::size_t> all_polymers(const PolymerSystem& system) {
  std::vector<std::size_t> out(system.count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

namespace {

// Z over the polymers still available, branching on the first one.
Complex independent_sum(const PolymerSystem& system, std::vector<std::size_t>& avail, std::size_t from,
                        std::vector<int>& blocked) {
  while (from < avail.size() && blocked[avail[from]] > 0) ++from;
  if (from == avail.size()) return 1.0;
  const std::size_t v = avail[from];
  const Complex without = independent_sum(system, avail, from + 1, blocked);
  for (auto u : system.neighbours[v]) ++blocked[u];
  const Complex with = system.weight[v] * independent_sum(system, avail, from + 1, blocked);
  for (auto u : system.neighbours[v]) --blocked[u];
  return without + with;
}

}  // namespace

Complex polymer_partition_function(const PolymerSystem& system, const std::vector<std::size_t>& subset,
                                   std::size_t budget) {
  if (subset.size() > budget)
    fail(ErrorKind::budget, "polymer partition function over " + std::to_string(subset.size()) +
                                " polymers exceeds the budget of " + std::to_string(budget));
  std::vector<std::size_t> avail = subset;
  std::sort(avail.begin(), avail.end());
  avail.erase(std::unique(avail.begin(), avail.end()), avail.end());
  std::vector<int> blocked(system.count(), 0);
  std::vector<bool> in(system.count(), false);
  for (auto v : avail) in[v] = true;
  for (std::size_t i = 0; i < system.count(); ++i)
    if (!in[i]) blocked[i] = 1;
  return independent_sum(system, avail, 0, blocked);
}

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) fail(ErrorKind::budget, "Ursell coefficient overflows 64 bits");
  return r;
}

struct ConnectedCounter {
  const std::vector<std::vector<bool>>& adj;
  std::map<std::vector<int>, std::int64_t> memo;

  bool independent(const std::vector<int>& x) const {
    for (std::size_t t = 0; t < x.size(); ++t) {
      if (x[t] > 1) return false;
      if (x[t] == 0) continue;
      for (std::size_t u = t + 1; u < x.size(); ++u)
        if (x[u] > 0 && adj[t][u]) return false;
    }
    return true;
  }

  // Signed count of connected spanning subgraphs of the incompatibility graph
  // on the vertex multiset x: C(S) = F(S) - sum_{T containing v0} C(T) F(S\T),
  // where F is 1 on independent sets; only independent complements contribute.
  std::int64_t count(const std::vector<int>& x) {
    if (auto it = memo.find(x); it != memo.end()) return it->second;
    std::size_t t0 = 0;
    while (x[t0] == 0) ++t0;
    std::int64_t result = independent(x) ? 1 : 0;
    std::vector<std::size_t> support;
    for (std::size_t t = 0; t < x.size(); ++t)
      if (x[t] > 0) support.push_back(t);
    const std::size_t k = support.size();
    std::vector<int> y = x;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << k); ++mask) {
      bool ok = true;
      std::int64_t coef = 1;
      for (std::size_t i = 0; i < k && ok; ++i) {
        if (!(mask >> i & 1)) continue;
        const std::size_t t = support[i];
        if (t == t0) {
          if (x[t] < 2) ok = false;
          else coef = checked_mul(coef, x[t] - 1);
        } else {
          coef = checked_mul(coef, x[t]);
        }
        for (std::size_t j = i + 1; j < k && ok; ++j)
          if ((mask >> j & 1) && adj[t][support[j]]) ok = false;
      }
      if (!ok) continue;
      for (std::size_t i = 0; i < k; ++i)
        if (mask >> i & 1) --y[support[i]];
      result -= checked_mul(coef, count(y));
      for (std::size_t i = 0; i < k; ++i)
        if (mask >> i & 1) ++y[support[i]];
    }
    memo.emplace(x, result);
    return result;
  }
};

}  // namespace

Rational ursell_from_pattern(const std::vector<int>& multiplicity, const std::vector<std::vector<bool>>& incompatible) {
  require(multiplicity.size() == incompatible.size(), "pattern size mismatch");
  int n = 0;
  std::int64_t denominator = 1;
  for (int m : multiplicity) {
    require(m >= 0, "negative multiplicity");
    n += m;
    for (int k = 2; k <= m; ++k) denominator = checked_mul(denominator, k);
  }
  require(n > 0, "empty multi-index");
  if (n > 20) fail(ErrorKind::budget, "Ursell coefficient needs more than 20 polymers");
  ConnectedCounter counter{incompatible, {}};
  return Rational(counter.count(multiplicity), denominator);
}

namespace {

Rational ursell_of(const PolymerSystem& system, const Multiplicity& x) {
  std::vector<int> mult;
  std::vector<std::vector<bool>> adj(x.size(), std::vector<bool>(x.size(), false));
  for (std::size_t i = 0; i < x.size(); ++i) {
    mult.push_back(x[i].second);
    for (std::size_t j = 0; j < x.size(); ++j)
      adj[i][j] = i != j && system.incompatible(x[i].first, x[j].first);
  }
  return ursell_from_pattern(mult, adj);
}

}  // namespace

Rational ursell_coefficient(const PolymerSystem& system, const Multiplicity& x, int budget) {
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i].first < system.count(), "polymer index out of range");
    require(x[i].second > 0, "multiplicities must be positive");
    require(i == 0 || x[i - 1].first < x[i].first, "multi-index must be sorted without repeats");
    n += x[i].second;
  }
  if (n > budget) fail(ErrorKind::budget, "multi-index larger than the Ursell budget");
  return ursell_of(system, x);
}

namespace {

struct ClusterEnumerator {
  const PolymerSystem& system;
  std::vector<bool> allowed;
  double max_norm;
  std::vector<Cluster> out;
  std::vector<std::size_t> members;
  std::vector<bool> seen;
  double norm = 0.0;

  void multiplicities(std::size_t i, Multiplicity& x, double used) {
    if (i == members.size()) {
      Cluster c;
      c.multiplicity = x;
      std::sort(c.multiplicity.begin(), c.multiplicity.end());
      c.norm = used;
      c.ursell = ursell_of(system, c.multiplicity);
      for (auto [p, m] : c.multiplicity) c.weight_product *= std::pow(system.weight[p], m);
      out.push_back(std::move(c));
      return;
    }
    const std::size_t p = members[i];
    // Every member appears at least once; extra copies fill the remaining norm.
    for (int m = 1; used + (m - 1) * system.size[p] <= max_norm + 1e-12; ++m) {
      x.emplace_back(p, m);
      multiplicities(i + 1, x, used + (m - 1) * system.size[p]);
      x.pop_back();
    }
  }

  void grow(std::size_t root, std::vector<std::size_t> untried) {
    while (!untried.empty()) {
      const std::size_t v = untried.back();
      untried.pop_back();
      if (norm + system.size[v] > max_norm + 1e-12) continue;
      members.push_back(v);
      norm += system.size[v];
      Multiplicity x;
      multiplicities(0, x, norm);
      std::vector<std::size_t> added;
      for (auto u : system.neighbours[v])
        if (u > root && allowed[u] && !seen[u]) {
          seen[u] = true;
          added.push_back(u);
        }
      std::vector<std::size_t> next = untried;
      next.insert(next.end(), added.begin(), added.end());
      grow(root, std::move(next));
      for (auto u : added) seen[u] = false;
      norm -= system.size[v];
      members.pop_back();
    }
  }
};

}  // namespace

std::vector<Cluster> enumerate_clusters(const PolymerSystem& system, const std::vector<std::size_t>& subset,
                                        double max_norm) {
  ClusterEnumerator e{system, std::vector<bool>(system.count(), false), max_norm, {}, {}, {}, 0.0};
  for (auto p : subset) e.allowed[p] = true;
  e.seen.assign(system.count(), false);
  std::vector<std::size_t> roots = subset;
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  for (auto r : roots) {
    e.seen[r] = true;
    e.grow(r, {r});
    e.seen[r] = false;
  }
  std::sort(e.out.begin(), e.out.end(), [](const Cluster& x, const Cluster& y) {
    if (x.norm != y.norm) return x.norm < y.norm;
    return x.multiplicity < y.multiplicity;
  });
  return e.out;
}

Certificate kp_certificate(const PolymerSystem& system, const std::vector<double>& z0, const std::vector<double>& a) {
  require(z0.size() == system.count() && a.size() == system.count(), "certificate arrays differ in length");
  Certificate cert;
  cert.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < system.count(); ++g) {
    double sum = z0[g] * std::exp(a[g]);
    for (auto h : system.neighbours[g]) sum += z0[h] * std::exp(a[h]);
    const double margin = a[g] - sum;
    if (margin < cert.worst_margin) {
      cert.worst_margin = margin;
      cert.worst_polymer = g;
    }
  }
  if (system.count() == 0) cert.worst_margin = 0.0;
  cert.ok = cert.worst_margin >= 0.0;
  return cert;
}

Certificate kp_certificate(const PolymerSystem& system) {
  std::vector<double> z0;
  for (auto w : system.weight) z0.push_back(std::abs(w));
  return kp_certificate(system, z0, system.a);
}

namespace {

PolymerSystem restricted(const PolymerSystem& system, const std::vector<std::size_t>& subset) {
  std::vector<long> index(system.count(), -1);
  PolymerSystem out;
  for (auto p : subset)
    if (index[p] < 0) index[p] = static_cast<long>(out.add(system.weight[p], system.size[p], system.a[p]));
  for (auto p : subset)
    for (auto q : system.neighbours[p])
      if (index[q] >= 0) out.set_incompatible(index[p], index[q]);
  return out;
}

}  // namespace

Expansion log_partition_expansion(const PolymerSystem& system, const std::vector<std::size_t>& subset,
                                  double max_norm, double eta) {
  require(eta >= 0.0, "eta must be nonnegative");
  Expansion out;
  if (subset.empty()) return out;
  const PolymerSystem sub = restricted(system, subset);
  std::vector<double> z0;
  for (std::size_t i = 0; i < sub.count(); ++i) z0.push_back(std::abs(sub.weight[i]) * std::exp(eta * sub.size[i]));
  out.certificate = kp_certificate(sub, z0, sub.a);
  if (!out.certificate.ok)
    fail(ErrorKind::check_failure, "convergence certificate fails (worst margin " +
                                       std::to_string(out.certificate.worst_margin) + "); expansion refused");
  const auto clusters = enumerate_clusters(sub, all_polymers(sub), max_norm);
  std::vector<Complex> terms;
  for (const auto& c : clusters) terms.push_back(c.value());
  for (const auto& t : terms) out.value += t;
  out.clusters = clusters.size();
  double b = 0.0;
  for (std::size_t i = 0; i < sub.count(); ++i) b += z0[i] * std::exp(sub.a[i]);
  out.tail_bound = std::exp(-eta * max_norm) * b;
  return out;
}

Complex expansion_derivative(const PolymerSystem& system, const std::vector<std::size_t>& subset,
                             const std::vector<Complex>& dweight, double max_norm) {
  require(dweight.size() == system.count(), "derivative direction has the wrong length");
  Complex out = 0.0;
  for (const auto& c : enumerate_clusters(system, subset, max_norm)) {
    Complex d = 0.0;
    for (std::size_t i = 0; i < c.multiplicity.size(); ++i) {
      const auto [p, m] = c.multiplicity[i];
      Complex term = static_cast<double>(m) * std::pow(system.weight[p], m - 1) * dweight[p];
      for (std::size_t j = 0; j < c.multiplicity.size(); ++j)
        if (j != i) term *= std::pow(system.weight[c.multiplicity[j].first], c.multiplicity[j].second);
      d += term;
    }
    out += boost::rational_cast<double>(c.ursell) * d;
  }
  return out;
}

TailReport tail_bounds_check(const PolymerSystem& system, std::size_t polymer, double max_norm) {
  require(polymer < system.count(), "polymer index out of range");
  TailReport rep;
  rep.max_norm = max_norm;
  rep.a_value = system.a[polymer];
  rep.weight_bound = std::abs(system.weight[polymer]) * std::exp(system.a[polymer]);
  for (const auto& c : enumerate_clusters(system, all_polymers(system), max_norm)) {
    const double v = std::abs(c.value());
    bool touches = false;
    for (auto [p, m] : c.multiplicity) {
      if (p == polymer) {
        rep.containing += v;
        rep.weighted += m * v;
      }
      touches = touches || system.incompatible(p, polymer);
    }
    if (touches) rep.incompatible_sum += v;
  }
  const double tol = 1e-15 * (1.0 + rep.weight_bound);
  rep.ok = rep.containing <= rep.weighted + tol && rep.weighted <= rep.weight_bound + tol &&
           rep.incompatible_sum <= rep.a_value + tol;
  return rep;
}

C0Estimate estimate_c0(int dim, std::size_t num_spins, int R, int size_cap) {
  C0Estimate est;
  const int smallest = static_cast<int>(std::pow(2 * R + 1, dim));
  if (size_cap < smallest) {
    est.vacuous = true;
    return est;
  }
  const ContourCatalog cat = build_catalog(dim, R, num_spins, 0, {.size_cap = size_cap});
  est.contours = cat.entries.size();
  // Each translation class contributes once per site of its volume.
  auto sum_at = [&](double c0) {
    double s = 0.0;
    for (const auto& e : cat.entries)
      s += static_cast<double>(e.volume.size()) * std::exp((2.0 - c0) * e.size());
    return s;
  };
  double c0 = 0.0;
  while (sum_at(c0) > 1.0) c0 += 0.1;
  est.c0 = c0;
  est.truncated_sum = sum_at(c0);
  // Lattice-animal bound: supports of size s containing a site number at most
  // (e * degree)^s, each carrying at most |S|^s configurations.
  const double degree = std::pow(4 * R + 1, dim) - 1.0;
  const double ratio = std::exp(1.0) * degree * static_cast<double>(num_spins) * std::exp(2.0 - c0);
  if (ratio >= 1.0) {
    est.remainder_bound = std::numeric_limits<double>::infinity();
  } else {
    double r = 0.0;
    for (int s = size_cap + 1; s < size_cap + 2000; ++s) r += s * std::pow(ratio, s);
    est.remainder_bound = r;
  }
  return est;
}

PolymerSystem polymer_system_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("polymer system JSON: ") + e.what());
  }
  PolymerSystem sys;
  try {
    for (const auto& p : j.at("polymers")) {
      const auto& w = p.at("weight");
      const Complex weight = w.is_array() ? Complex(w.at(0).get<double>(), w.at(1).get<double>())
                                          : Complex(w.get<double>(), 0.0);
      sys.add(weight, p.value("size", 1.0), p.value("a", 1.0));
    }
    for (const auto& e : j.value("incompatible", nlohmann::json::array()))
      sys.set_incompatible(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("polymer system JSON: ") + e.what());
  }
  sys.validate();
  return sys;
}

std::string polymer_system_to_json(const PolymerSystem& system) {
  nlohmann::json j;
  j["polymers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < system.count(); ++i)
    j["polymers"].push_back({{"weight", {system.weight[i].real(), system.weight[i].imag()}},
                             {"size", system.size[i]},
                             {"a", system.a[i]}});
  j["incompatible"] = nlohmann::json::array();
  for (std::size_t i = 0; i < system.count(); ++i)
    for (auto k : system.neighbours[i])
      if (k > i) j["incompatible"].push_back({i, k});
  return j.dump(2);
}

}  // namespace psz
