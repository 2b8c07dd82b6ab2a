#include "psz/zeros.hpp"

#include <algorithm>
#include <array>
#include <tuple>
#include <cmath>
#include <limits>
#include <numbers>

#include "psz/error.hpp"
#include "psz/parallel.hpp"

namespace psz {

namespace {

constexpr double pi = std::numbers::pi;

double unwrap(double value, double near) { return value + 2.0 * pi * std::round((near - value) / (2.0 * pi)); }

// f_m - f_n - level and Arg(zeta_m / zeta_n) for one phase pair.
struct PairFunction {
  const MetastableModel& meta;
  Spin m, n;
  double level;

  double gap(Complex z) const {
    return std::log(std::abs(meta.zeta(n, z))) - std::log(std::abs(meta.zeta(m, z))) - level;
  }
  double phase(Complex z) const { return std::arg(meta.zeta(m, z) / meta.zeta(n, z)); }
  Complex gradient(Complex z) const {
    const double h = 1e-6 * std::max(1.0, std::abs(z));
    const double gx = (gap(z + h) - gap(z - h)) / (2 * h);
    const double gy = (gap(z + Complex(0, h)) - gap(z - Complex(0, h))) / (2 * h);
    return {gx, gy};
  }
  // Newton steps transverse to the level set.
  std::optional<Complex> correct(Complex z, double tol, int steps) const {
    for (int i = 0; i < steps; ++i) {
      const double g = gap(z);
      if (!std::isfinite(g)) return std::nullopt;
      if (std::abs(g) < tol) return z;
      const Complex grad = gradient(z);
      const double norm2 = std::norm(grad);
      if (norm2 == 0.0 || !std::isfinite(norm2)) return std::nullopt;
      z -= g * grad / norm2;
    }
    return std::abs(gap(z)) < tol ? std::optional<Complex>(z) : std::nullopt;
  }
};

// First phase outside {m, n} whose free energy drops below the pair's, if any.
std::optional<Spin> intruder(const MetastableModel& meta, Spin m, Spin n, Complex z, double tol) {
  const auto fe = meta.free_energies(z);
  const double pair = std::min(fe.of(m).f, fe.of(n).f);
  for (const auto& p : fe.phases)
    if (p.phase != m && p.phase != n && p.f < pair - tol) return p.phase;
  return std::nullopt;
}

std::vector<CurvePoint> trace_branch(const PairFunction& pf, const MetastableModel& meta, Complex start,
                                     double start_delta, double direction, const TraceOptions& opt,
                                     CoexistenceCurve& curve) {
  std::vector<CurvePoint> pts{{start, 0.0, start_delta, std::abs(pf.gap(start))}};
  Complex tangent = Complex(0, 1) * pf.gradient(start);
  tangent *= direction / std::abs(tangent);
  double step = opt.step;
  while (pts.back().arclength < opt.length) {
    const CurvePoint& last = pts.back();
    std::optional<Complex> next;
    double delta = 0.0;
    while (step > 1e-7 * opt.step) {
      next = pf.correct(last.z + step * tangent, opt.tolerance, opt.newton_steps);
      if (next) {
        delta = unwrap(pf.phase(*next), last.delta);
        if (std::abs(delta - last.delta) <= pi / 4 && std::abs(*next - last.z) <= 2.0 * step) break;
      }
      next.reset();
      step /= 2;
    }
    if (!next) {
      curve.stop_reason = "correction failed";
      return pts;
    }
    if (std::abs(*next) < 1e-8 || !std::isfinite(std::abs(*next))) {
      curve.stop_reason = "left the model domain";
      return pts;
    }
    if (auto p = intruder(meta, pf.m, pf.n, *next, opt.multiple_tolerance)) {
      // Bisect along the step for the point where the third phase joins.
      const auto join = [&](Complex z) {
        const auto fe = meta.free_energies(z);
        return fe.of(*p).f - std::min(fe.of(pf.m).f, fe.of(pf.n).f);
      };
      Complex a = last.z, b = *next;
      for (int i = 0; i < 60; ++i) {
        const auto mid = pf.correct(0.5 * (a + b), opt.tolerance, opt.newton_steps);
        if (!mid) break;
        (join(*mid) > 0 ? a : b) = *mid;
      }
      curve.multiple_points.push_back(a);
      pts.push_back({a, last.arclength + std::abs(a - last.z), unwrap(pf.phase(a), last.delta), std::abs(pf.gap(a))});
      curve.stop_reason = "multiple point";
      return pts;
    }
    const Complex new_tangent = (*next - last.z) / std::abs(*next - last.z);
    const double s = last.arclength + std::abs(*next - last.z);
    if (s >= 4.0 * opt.step && std::abs(*next - start) <= step) {
      const double d = unwrap(pf.phase(start), delta);
      pts.push_back({start, last.arclength + std::abs(start - last.z), d, pts.front().residual});
      curve.closed = true;
      curve.stop_reason = "closed";
      return pts;
    }
    pts.push_back({*next, s, delta, std::abs(pf.gap(*next))});
    tangent = Complex(0, 1) * pf.gradient(*next);
    tangent /= std::abs(tangent);
    if ((tangent * std::conj(new_tangent)).real() < 0) tangent = -tangent;
    step = std::min(opt.step, step * 2);
  }
  curve.stop_reason = "length budget";
  return pts;
}

}  // namespace

CoexistenceCurve trace_coexistence(const MetastableModel& meta, Spin m, Spin n, Complex seed,
                                   const TraceOptions& options) {
  require(m != n, "coexistence needs two distinct phases");
  require(options.step > 0.0 && options.length > 0.0, "step and length must be positive");
  const PairFunction pf{meta, m, n, options.level};
  const auto start = pf.correct(seed, options.tolerance, options.newton_steps);
  if (!start)
    fail(ErrorKind::check_failure,
         "seed is not on the coexistence locus (residual " + std::to_string(std::abs(pf.gap(seed))) + ")");
  if (auto p = intruder(meta, m, n, *start, options.multiple_tolerance))
    fail(ErrorKind::check_failure, "phase " + std::to_string(meta.model().label(*p)) + " is more stable at the seed");

  CoexistenceCurve curve;
  curve.dim = meta.model().dim;
  curve.m = m;
  curve.n = n;
  curve.options = options;
  const double d0 = pf.phase(*start);
  auto forward = trace_branch(pf, meta, *start, d0, 1.0, options, curve);
  if (!curve.closed && options.both_directions) {
    const std::string first_stop = curve.stop_reason;
    auto backward = trace_branch(pf, meta, *start, d0, -1.0, options, curve);
    curve.stop_reason = first_stop + "; " + curve.stop_reason;
    std::reverse(backward.begin(), backward.end());
    backward.pop_back();
    backward.insert(backward.end(), forward.begin(), forward.end());
    forward = std::move(backward);
  }
  // Arclength from the first point, deltas unwrapped along the whole curve.
  for (std::size_t i = 0; i < forward.size(); ++i) {
    if (i == 0) {
      forward[i].arclength = 0.0;
    } else {
      forward[i].arclength = forward[i - 1].arclength + std::abs(forward[i].z - forward[i - 1].z);
      forward[i].delta = unwrap(forward[i].delta, forward[i - 1].delta);
    }
  }
  curve.points = std::move(forward);
  return curve;
}

ZeroSet solve_zero_equations(const MetastableModel& meta, const CoexistenceCurve& curve, int L, int workers) {
  require(L >= 1, "L must be positive");
  require(curve.points.size() >= 2, "curve has too few points");
  const auto& model = meta.model();
  const double volume = std::pow(static_cast<double>(L), model.dim);
  const double level =
      (std::log(static_cast<double>(model.orbit_size(curve.m))) - std::log(static_cast<double>(model.orbit_size(curve.n)))) /
      volume;
  CoexistenceCurve shifted;
  const CoexistenceCurve* c = &curve;
  if (std::abs(level - curve.options.level) > 1e-15) {
    TraceOptions opt = curve.options;
    opt.level = level;
    shifted = trace_coexistence(meta, curve.m, curve.n, curve.points.front().z, opt);
    c = &shifted;
  }
  const PairFunction pf{meta, c->m, c->n, level};

  struct Target {
    std::size_t segment;
    long j;
  };
  std::vector<Target> targets;
  for (std::size_t i = 0; i + 1 < c->points.size(); ++i) {
    const double a = c->points[i].delta * volume / pi, b = c->points[i + 1].delta * volume / pi;
    // Odd integers 2j+1 in [a, b) for increasing, (b, a] for decreasing segments.
    if (a < b) {
      for (long j = static_cast<long>(std::ceil((a - 1.0) / 2.0)); 2 * j + 1 < b; ++j) targets.push_back({i, j});
    } else if (a > b) {
      for (long j = static_cast<long>(std::floor((a - 1.0) / 2.0)); 2 * j + 1 > b; --j) targets.push_back({i, j});
    }
  }
  const double tol = c->options.tolerance;
  const int steps = c->options.newton_steps;
  auto solved = parallel_map<PredictedZero>(targets.size(), workers, [&](std::size_t t) {
    const auto& p0 = c->points[targets[t].segment];
    const auto& p1 = c->points[targets[t].segment + 1];
    const double goal = (2.0 * targets[t].j + 1.0) * pi / volume;
    const auto at = [&](double u) {
      const Complex z = pf.correct(p0.z + u * (p1.z - p0.z), tol, steps).value_or(p0.z + u * (p1.z - p0.z));
      return std::make_pair(z, unwrap(pf.phase(z), p0.delta + u * (p1.delta - p0.delta)) - goal);
    };
    double lo = 0.0, hi = 1.0;
    const double sign = p1.delta > p0.delta ? 1.0 : -1.0;
    auto best = at(0.5);
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      best = at(mid);
      if (sign * best.second < 0) lo = mid;
      else hi = mid;
      if (std::abs(best.second) * volume < 1e-12) break;
    }
    PredictedZero zero;
    zero.z = best.first;
    const long count = static_cast<long>(std::llround(volume));
    zero.k = ((targets[t].j % count) + count) % count;
    zero.modulus_residual = std::abs(pf.gap(zero.z));
    zero.phase_residual = std::abs(best.second) * volume;
    for (const auto& mp : c->multiple_points)
      if (std::abs(mp - zero.z) < 1.0 / volume) zero.degraded = true;
    return zero;
  });
  ZeroSet out;
  out.m = c->m;
  out.n = c->n;
  out.side = L;
  out.zeros = std::move(solved);
  out.winding = volume * c->total_delta() / (2.0 * pi);
  return out;
}

double ising_theta_k(double J, int d, int L, long k) {
  const double volume = std::pow(static_cast<double>(L), d);
  require(k >= 0 && k < static_cast<long>(volume), "zero index out of range");
  const double base = (2.0 * k + 1.0) * pi / volume;
  return base + 2.0 * std::exp(-2.0 * d * J) * std::sin(base);
}

std::vector<DensitySample> density_of_zeros(const CoexistenceCurve& curve, int L) {
  const double volume = std::pow(static_cast<double>(L), curve.dim);
  std::vector<DensitySample> out;
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const auto& a = curve.points[i];
    const auto& b = curve.points[i + 1];
    const double ds = b.arclength - a.arclength;
    if (ds <= 0.0) continue;
    out.push_back({0.5 * (a.arclength + b.arclength), ds, 0.5 * (a.z + b.z),
                   volume / (2.0 * pi) * std::abs(b.delta - a.delta) / ds});
  }
  return out;
}

double integrate_density(const std::vector<DensitySample>& samples) {
  double total = 0.0;
  for (const auto& s : samples) total += s.density * s.width;
  return total;
}

ZeroMatch match_predicted_exact(const std::vector<Complex>& predicted, const std::vector<Complex>& exact) {
  ZeroMatch out;
  const bool swap = predicted.size() > exact.size();
  const auto& rows = swap ? exact : predicted;
  const auto& cols = swap ? predicted : exact;
  const std::size_t nr = rows.size(), nc = cols.size();
  std::vector<std::size_t> assign(nr);
  if (nc <= 16) {
    // Exact minimum-sum assignment by dynamic programming over used columns.
    const std::size_t states = std::size_t{1} << nc;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> cost(nr + 1, std::vector<double>(states, inf));
    std::vector<std::vector<int>> choice(nr + 1, std::vector<int>(states, -1));
    cost[0][0] = 0.0;
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t mask = 0; mask < states; ++mask) {
        if (cost[r][mask] == inf) continue;
        for (std::size_t col = 0; col < nc; ++col) {
          if (mask >> col & 1) continue;
          const std::size_t next = mask | (std::size_t{1} << col);
          const double v = cost[r][mask] + std::abs(rows[r] - cols[col]);
          if (v < cost[r + 1][next]) {
            cost[r + 1][next] = v;
            choice[r + 1][next] = static_cast<int>(col);
          }
        }
      }
    std::size_t mask = 0;
    for (std::size_t m = 0; m < states; ++m)
      if (cost[nr][m] < cost[nr][mask]) mask = m;
    for (std::size_t r = nr; r > 0; --r) {
      assign[r - 1] = static_cast<std::size_t>(choice[r][mask]);
      mask &= ~(std::size_t{1} << assign[r - 1]);
    }
    out.optimal = true;
  } else {
    // Greedy on sorted distances.
    std::vector<std::tuple<double, std::size_t, std::size_t>> all;
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t col = 0; col < nc; ++col) all.emplace_back(std::abs(rows[r] - cols[col]), r, col);
    std::sort(all.begin(), all.end());
    std::vector<bool> row_used(nr, false), col_used(nc, false);
    for (const auto& [d, r, col] : all) {
      if (row_used[r] || col_used[col]) continue;
      row_used[r] = col_used[col] = true;
      assign[r] = col;
    }
  }
  for (std::size_t r = 0; r < nr; ++r) {
    const auto pair = swap ? std::make_pair(assign[r], r) : std::make_pair(r, assign[r]);
    out.pairs.push_back(pair);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [p, e] : out.pairs) {
    const double d = std::abs(predicted[p] - exact[e]);
    out.distances.push_back(d);
    out.max_distance = std::max(out.max_distance, d);
    out.mean_distance += d;
  }
  if (!out.pairs.empty()) out.mean_distance /= static_cast<double>(out.pairs.size());
  out.unmatched_predicted = predicted.size() - out.pairs.size();
  out.unmatched_exact = exact.size() - out.pairs.size();
  return out;
}

ResidualReport finite_volume_residual(const MetastableModel& meta, int L, Complex z, double kappa,
                                  std::optional<std::vector<Spin>> phases, bool use_multiplicity) {
  const auto& model = meta.model();
  const auto fe = meta.free_energies(z);
  ResidualReport rep;
  if (phases) {
    rep.phases = *phases;
  } else {
    for (const auto& p : fe.phases)
      if (p.a < kappa / L) rep.phases.push_back(p.phase);
  }
  for (const auto& p : fe.phases) {
    const bool in = std::find(rep.phases.begin(), rep.phases.end(), p.phase) != rep.phases.end();
    if (!in && p.a < 2.0 * kappa / L)
      rep.warning += "phase " + std::to_string(model.label(p.phase)) + " is nearly stable but excluded; ";
  }
  rep.exact = model.range == 1 ? transfer_matrix_pf(model, L, z) : partition_function_exact(model, L, z);
  Complex sum = 0.0;
  for (Spin m : rep.phases) {
    const double q = use_multiplicity ? model.orbit_size(m) : 1.0;
    sum += q * meta.finite_volume(m, L, z).power;
  }
  rep.xi = rep.exact - sum;
  rep.zeta_modulus = std::exp(-fe.f);
  const double volume = std::pow(static_cast<double>(L), model.dim);
  rep.relative = std::exp(std::log(std::abs(rep.xi)) + fe.f * volume);
  return rep;
}

std::vector<MultiplePoint> find_multiple_points(const MetastableModel& meta, const std::vector<Complex>& grid,
                                                int workers) {
  const auto phases = meta.model().phases();
  std::vector<MultiplePoint> out;
  if (phases.size() < 3 || grid.empty()) return out;
  const auto table = parallel_map<FreeEnergies>(grid.size(), workers, [&](std::size_t i) { return meta.free_energies(grid[i]); });
  for (std::size_t a = 0; a < phases.size(); ++a)
    for (std::size_t b = a + 1; b < phases.size(); ++b)
      for (std::size_t c = b + 1; c < phases.size(); ++c) {
        const std::vector<Spin> triple{phases[a], phases[b], phases[c]};
        const auto residual = [&](Complex z) {
          const auto fe = meta.free_energies(z);
          return std::array<double, 2>{fe.of(triple[0]).f - fe.of(triple[1]).f, fe.of(triple[1]).f - fe.of(triple[2]).f};
        };
        std::vector<std::pair<double, std::size_t>> spread;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const auto& fe = table[i];
          double lo = 1e300, hi = -1e300;
          for (Spin s : triple) {
            lo = std::min(lo, fe.of(s).f);
            hi = std::max(hi, fe.of(s).f);
          }
          if (std::isfinite(hi)) spread.emplace_back(hi - lo, i);
        }
        std::sort(spread.begin(), spread.end());
        spread.resize(std::min<std::size_t>(spread.size(), 16));
        auto found = parallel_map<std::optional<MultiplePoint>>(spread.size(), workers, [&](std::size_t s) {
          Complex z = grid[spread[s].second];
          for (int it = 0; it < 60; ++it) {
            const auto r = residual(z);
            if (!std::isfinite(r[0]) || !std::isfinite(r[1])) return std::optional<MultiplePoint>{};
            if (std::max(std::abs(r[0]), std::abs(r[1])) < 1e-12) break;
            const double h = 1e-6 * std::max(1.0, std::abs(z));
            const auto rx = residual(z + h), ry = residual(z + Complex(0, h));
            const double j00 = (rx[0] - r[0]) / h, j01 = (ry[0] - r[0]) / h;
            const double j10 = (rx[1] - r[1]) / h, j11 = (ry[1] - r[1]) / h;
            const double det = j00 * j11 - j01 * j10;
            if (det == 0.0 || !std::isfinite(det)) return std::optional<MultiplePoint>{};
            z -= Complex((j11 * r[0] - j01 * r[1]) / det, (-j10 * r[0] + j00 * r[1]) / det);
          }
          const auto r = residual(z);
          const double res = std::max(std::abs(r[0]), std::abs(r[1]));
          if (!(res < 1e-9)) return std::optional<MultiplePoint>{};
          const auto fe = meta.free_energies(z);
          for (const auto& p : fe.phases)
            if (p.f < fe.of(triple[0]).f - 1e-9) return std::optional<MultiplePoint>{};
          return std::optional<MultiplePoint>{MultiplePoint{z, triple, res}};
        });
        for (auto& f : found) {
          if (!f) continue;
          const bool seen = std::any_of(out.begin(), out.end(), [&](const MultiplePoint& p) { return std::abs(p.z - f->z) < 1e-6; });
          if (!seen) out.push_back(*f);
        }
      }
  std::sort(out.begin(), out.end(), [](const MultiplePoint& x, const MultiplePoint& y) {
    return x.z.real() != y.z.real() ? x.z.real() < y.z.real() : x.z.imag() < y.z.imag();
  });
  return out;
}

}  // namespace psz
