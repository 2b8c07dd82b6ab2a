#include "psz/torus_exact.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "psz/error.hpp"
#include "psz/parallel.hpp"

namespace psz {

Complex pairwise_sum(const std::vector<Complex>& values) {
  if (values.empty()) return 0.0;
  std::vector<Complex> level = values;
  while (level.size() > 1) {
    std::vector<Complex> next((level.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = level[2 * i] + (2 * i + 1 < level.size() ? level[2 * i + 1] : Complex{});
    }
    level = std::move(next);
  }
  return level.front();
}

namespace {

// Interaction terms instantiated on T_L with tabulated values.
struct TorusInstances {
  std::size_t num_spins = 0;
  std::size_t sites = 0;
  std::vector<std::vector<TermValue>> tables;  // per term
  struct Instance {
    std::size_t term;
    std::vector<std::size_t> sites;
  };
  std::vector<Instance> instances;
  std::vector<std::vector<std::size_t>> incident;  // per site: instances (deduplicated)
};

TorusInstances instantiate(const SpinModel& model, int L) {
  require(L >= 2 * model.range + 1, "torus side must be at least 2R+1");
  const Grid g = Grid::torus(model.dim, L);
  TorusInstances ti;
  ti.num_spins = model.num_spins();
  ti.sites = g.size();
  for (const auto& term : model.terms) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < term.shape.size(); ++i) n *= ti.num_spins;
    std::vector<TermValue> table(n);
    std::vector<Spin> spins(term.shape.size());
    for (std::size_t idx = 0; idx < n; ++idx) {
      std::size_t r = idx;
      for (std::size_t k = spins.size(); k-- > 0;) {
        spins[k] = static_cast<Spin>(r % ti.num_spins);
        r /= ti.num_spins;
      }
      table[idx] = term.value(spins);
    }
    ti.tables.push_back(std::move(table));
  }
  ti.incident.resize(g.size());
  for (std::size_t t = 0; t < model.terms.size(); ++t) {
    for (std::size_t a = 0; a < g.size(); ++a) {
      TorusInstances::Instance inst{t, {}};
      for (const auto& o : model.terms[t].shape) inst.sites.push_back(g.wrap_index(g.coord(a) + o));
      const std::size_t id = ti.instances.size();
      for (auto s : inst.sites) {
        auto& inc = ti.incident[s];
        if (inc.empty() || inc.back() != id) inc.push_back(id);
      }
      ti.instances.push_back(std::move(inst));
    }
  }
  return ti;
}

struct Energy {
  Complex constant;
  double power = 0.0;
};

// Integer pattern counts per term; energies are recomputed from the counts so
// incremental updates never accumulate rounding.
struct PatternCounts {
  std::vector<std::vector<long>> counts;  // per term, per pattern index

  Energy energy(const TorusInstances& ti) const {
    Energy e;
    for (std::size_t t = 0; t < counts.size(); ++t) {
      for (std::size_t k = 0; k < counts[t].size(); ++k) {
        const long c = counts[t][k];
        if (c == 0) continue;
        const auto& v = ti.tables[t][k];
        e.constant += static_cast<double>(c) * v.constant;
        e.power += static_cast<double>(c) * v.z_power;
      }
    }
    return e;
  }
};

std::size_t pattern(const TorusInstances& ti, std::size_t id, const std::vector<Spin>& config) {
  std::size_t idx = 0;
  for (auto s : ti.instances[id].sites) idx = idx * ti.num_spins + config[s];
  return idx;
}

PatternCounts full_counts(const TorusInstances& ti, const std::vector<Spin>& config) {
  PatternCounts pc;
  for (const auto& table : ti.tables) pc.counts.emplace_back(table.size(), 0);
  for (std::size_t id = 0; id < ti.instances.size(); ++id)
    ++pc.counts[ti.instances[id].term][pattern(ti, id, config)];
  return pc;
}

void change_site(const TorusInstances& ti, std::vector<Spin>& config, std::size_t site,
                 Spin value, PatternCounts& pc) {
  for (auto id : ti.incident[site]) --pc.counts[ti.instances[id].term][pattern(ti, id, config)];
  config[site] = value;
  for (auto id : ti.incident[site]) ++pc.counts[ti.instances[id].term][pattern(ti, id, config)];
}

struct BlockPlan {
  std::size_t inner = 0;  // Gray-iterated low sites
  std::size_t blocks = 1;
};

BlockPlan plan_blocks(const TorusInstances& ti, const ExactOptions& options) {
  double states = std::pow(static_cast<double>(ti.num_spins), static_cast<double>(ti.sites));
  if (states > static_cast<double>(options.state_budget)) {
    fail(ErrorKind::budget, "enumeration of " + std::to_string(ti.num_spins) + "^" +
                                std::to_string(ti.sites) +
                                " states exceeds the budget; use transfer_matrix_pf");
  }
  BlockPlan plan;
  std::size_t inner_states = 1;
  while (plan.inner < ti.sites && inner_states * ti.num_spins <= (std::size_t{1} << 14)) {
    inner_states *= ti.num_spins;
    ++plan.inner;
  }
  for (std::size_t i = plan.inner; i < ti.sites; ++i) plan.blocks *= ti.num_spins;
  return plan;
}

// Visits every configuration of one block: high sites fixed by `block`, low
// sites in reflected mixed-radix Gray order.
template <class Visit>
void visit_block(const TorusInstances& ti, const BlockPlan& plan, std::size_t block, Visit&& visit) {
  std::vector<Spin> config(ti.sites, 0);
  std::size_t r = block;
  for (std::size_t i = plan.inner; i < ti.sites; ++i) {
    config[i] = static_cast<Spin>(r % ti.num_spins);
    r /= ti.num_spins;
  }
  PatternCounts pc = full_counts(ti, config);
  visit(pc.energy(ti));
  std::vector<int> dir(plan.inner, 1);
  const int base = static_cast<int>(ti.num_spins);
  while (true) {
    std::size_t j = 0;
    while (j < plan.inner) {
      const int next = config[j] + dir[j];
      if (next >= 0 && next < base) break;
      dir[j] = -dir[j];
      ++j;
    }
    if (j == plan.inner) break;
    change_site(ti, config, j, static_cast<Spin>(config[j] + dir[j]), pc);
    visit(pc.energy(ti));
  }
}

}  // namespace

Complex partition_function_exact(const SpinModel& model, int L, Complex z,
                                 const ExactOptions& options) {
  const TorusInstances ti = instantiate(model, L);
  const BlockPlan plan = plan_blocks(ti, options);
  const Complex log_z = std::log(z);
  auto sums = parallel_map<Complex>(plan.blocks, options.workers, [&](std::size_t b) {
    Complex acc = 0.0;
    visit_block(ti, plan, b, [&](const Energy& e) { acc += std::exp(-e.constant + e.power * log_z); });
    return acc;
  });
  return pairwise_sum(sums);
}

PartitionPolynomial partition_polynomial(const SpinModel& model, int L,
                                         const ExactOptions& options) {
  const TorusInstances ti = instantiate(model, L);
  const BlockPlan plan = plan_blocks(ti, options);
  const double per_site = max_site_power(model);
  const int degree = static_cast<int>(std::lround(per_site * static_cast<double>(ti.sites)));
  auto bins = parallel_map<std::vector<Complex>>(plan.blocks, options.workers, [&](std::size_t b) {
    std::vector<Complex> acc(degree + 1, 0.0);
    visit_block(ti, plan, b, [&](const Energy& e) {
      const double k = std::round(e.power);
      if (std::abs(e.power - k) > 1e-9 || k < 0 || k > degree)
        fail(ErrorKind::invalid_argument, "not polynomial in z");
      acc[static_cast<std::size_t>(k)] += std::exp(-e.constant);
    });
    return acc;
  });
  PartitionPolynomial poly;
  poly.model = model.name;
  poly.side = L;
  poly.coefficients.resize(degree + 1);
  std::vector<Complex> column(bins.size());
  for (int k = 0; k <= degree; ++k) {
    for (std::size_t b = 0; b < bins.size(); ++b) column[b] = bins[b][k];
    poly.coefficients[k] = pairwise_sum(column);
  }
  return poly;
}

Complex transfer_matrix_pf(const SpinModel& model, int L, Complex z, const ExactOptions& options) {
  if (model.range != 1) fail(ErrorKind::invalid_argument, "transfer matrix supports range 1 only");
  require(L >= 3, "torus side must be at least 2R+1");
  const int d = model.dim;
  const Grid layer = Grid::torus(d - 1 < 1 ? 1 : d - 1, L);
  const std::size_t layer_sites = layer.size();
  const std::size_t q = model.num_spins();
  double dim_d = std::pow(static_cast<double>(q), static_cast<double>(layer_sites));
  if (dim_d > static_cast<double>(options.matrix_budget))
    fail(ErrorKind::budget, "transfer matrix dimension exceeds the budget");
  const std::size_t dim = static_cast<std::size_t>(dim_d);
  const Complex log_z = std::log(z);

  // Instances anchored so that their lowest axis-0 offset sits in layer 0.
  struct LayerInstance {
    std::size_t term;
    std::vector<std::pair<int, std::size_t>> sites;  // (layer 0/1, layer site)
  };
  std::vector<LayerInstance> instances;
  for (std::size_t t = 0; t < model.terms.size(); ++t) {
    const auto& shape = model.terms[t].shape;
    int lo = shape.front()[0];
    for (const auto& o : shape) lo = std::min(lo, o[0]);
    for (std::size_t a = 0; a < layer_sites; ++a) {
      const Coord base = layer.coord(a);
      LayerInstance inst{t, {}};
      for (const auto& o : shape) {
        const int l = o[0] - lo;
        ensure(l == 0 || l == 1, "shape spans more than two layers");
        Coord c{};
        for (int i = 1; i < d; ++i) c[i - 1] = base[i - 1] + o[i];
        inst.sites.emplace_back(l, layer.wrap_index(c));
      }
      instances.push_back(std::move(inst));
    }
  }
  auto digit = [q](std::size_t state, std::size_t site) {
    for (std::size_t i = 0; i < site; ++i) state /= q;
    return static_cast<Spin>(state % q);
  };
  Eigen::MatrixXcd T(dim, dim);
  std::vector<Spin> spins;
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b < dim; ++b) {
      Complex e = 0.0;
      for (const auto& inst : instances) {
        spins.clear();
        for (auto [l, s] : inst.sites) spins.push_back(digit(l == 0 ? a : b, s));
        e += term_energy(model.terms[inst.term], spins, log_z);
      }
      T(a, b) = std::exp(-e);
    }
  }
  Eigen::MatrixXcd P = T;
  for (int i = 1; i < L; ++i) P = (P * T).eval();
  return P.trace();
}

Complex evaluate(const std::vector<Complex>& coefficients, Complex z) {
  Complex acc = 0.0;
  for (std::size_t k = coefficients.size(); k-- > 0;) acc = acc * z + coefficients[k];
  return acc;
}

Complex evaluate(const PartitionPolynomial& poly, Complex z) { return evaluate(poly.coefficients, z); }

namespace {

void balance(Eigen::MatrixXcd& a) {
  constexpr double radix = 2.0;
  const double sqrdx = radix * radix;
  const auto n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0;
      double c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i).real()) + std::abs(a(j, i).imag());
        r += std::abs(a(i, j).real()) + std::abs(a(i, j).imag());
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

Complex derivative(const std::vector<Complex>& c, Complex z) {
  Complex acc = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) acc = acc * z + static_cast<double>(k) * c[k];
  return acc;
}

double magnitude_sum(const std::vector<Complex>& c, Complex z) {
  double acc = 0.0;
  const double r = std::abs(z);
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * r + std::abs(c[k]);
  return acc;
}

}  // namespace

ExactZeroSet polynomial_roots(std::vector<Complex> c, int newton_steps) {
  ExactZeroSet out;
  double scale = 0.0;
  for (const auto& v : c) scale = std::max(scale, std::abs(v));
  require(scale > 0.0, "zero polynomial");
  const std::vector<Complex> original = c;
  while (!c.empty() && std::abs(c.back()) <= 1e-14 * scale) {
    c.pop_back();
    ++out.removed_leading;
  }
  std::size_t low = 0;
  while (low < c.size() && c[low] == Complex{}) ++low;
  out.roots_at_zero = static_cast<int>(low);
  std::vector<Complex> reduced(c.begin() + static_cast<std::ptrdiff_t>(low), c.end());
  const auto n = static_cast<Eigen::Index>(reduced.size()) - 1;
  require(n + static_cast<Eigen::Index>(low) >= 1, "polynomial degree must be at least 1");
  if (out.removed_leading > 0)
    out.note = "leading coefficient vanished; degree reduced by " + std::to_string(out.removed_leading);
  for (std::size_t i = 0; i < low; ++i) out.roots.emplace_back(0.0, 0.0);
  if (n >= 1) {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) comp(i, n - 1) = -reduced[i] / reduced[n];
    balance(comp);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(comp, false);
    ensure(solver.info() == Eigen::Success, "eigenvalue iteration did not converge");
    for (Eigen::Index i = 0; i < n; ++i) {
      Complex z = solver.eigenvalues()[i];
      for (int step = 0; step < newton_steps; ++step) {
        const Complex p = evaluate(reduced, z);
        const Complex dp = derivative(reduced, z);
        if (p == Complex{} || dp == Complex{}) break;
        const Complex candidate = z - p / dp;
        if (std::abs(evaluate(reduced, candidate)) >= std::abs(p)) break;
        z = candidate;
      }
      out.roots.push_back(z);
    }
  }
  for (const auto& r : out.roots) {
    const double p = std::abs(evaluate(original, r));
    out.residual = std::max(out.residual, p);
    const double denom = magnitude_sum(original, r);
    out.relative_residual = std::max(out.relative_residual, denom > 0 ? p / denom : p);
  }
  std::sort(out.roots.begin(), out.roots.end(), [](const Complex& a, const Complex& b) {
    const double aa = std::arg(a), ab = std::arg(b);
    if (aa != ab) return aa < ab;
    return std::abs(a) < std::abs(b);
  });
  return out;
}

ExactZeroSet exact_zeros(const PartitionPolynomial& poly) { return polynomial_roots(poly.coefficients); }

}  // namespace psz
