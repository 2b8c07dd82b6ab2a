#include <cmath>
#include <numbers>

#include "doctest.h"
#include "psz/contours.hpp"
#include "psz/error.hpp"
#include "psz/metastable.hpp"
#include "psz/models.hpp"

using namespace psz;

namespace {

Complex fourier_coefficient(const MetastableModel& meta, Spin q, int k, int n = 16) {
  Complex c = 0.0;
  for (int j = 0; j < n; ++j) {
    const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * j / n);
    c += meta.pressure(q, z) * std::pow(z, -k);
  }
  return c / static_cast<double>(n);
}

std::vector<Coord> box_coords(int side) {
  std::vector<Coord> out;
  for (int x = 0; x < side; ++x)
    for (int y = 0; y < side; ++y) out.push_back(Coord{x, y});
  return out;
}

Regime working(const SpinModel& model) {
  return estimate_regime(model, {Complex(1.0), Complex(0.0, 1.0), Complex(-1.0)}, 16).working();
}

}  // namespace

TEST_CASE("mollifier is a C2 step from -2 to -1") {
  const auto lo = mollifier_eval(-2.0), hi = mollifier_eval(-1.0);
  CHECK(lo.value == 0.0);
  CHECK(hi.value == doctest::Approx(1.0));
  for (double v : {lo.first, lo.second, hi.first, hi.second}) CHECK(std::abs(v) < 1e-12);
  CHECK(mollifier_eval(-1.5).value == doctest::Approx(0.5));
  CHECK(mollifier_eval(0.0).value == 1.0);
  CHECK(mollifier_eval(-7.0).value == 0.0);
  for (double x = -2.2; x < -0.8; x += 0.013) {
    const double h = 1e-5;
    const auto m = mollifier_eval(x);
    CHECK(m.value >= 0.0);
    CHECK(m.value <= 1.0);
    CHECK(m.first == doctest::Approx((mollifier_eval(x + h).value - mollifier_eval(x - h).value) / (2 * h)).epsilon(1e-5));
    CHECK(m.second ==
          doctest::Approx((mollifier_eval(x + h).first - mollifier_eval(x - h).first) / (2 * h)).epsilon(1e-4).scale(1));
  }
}

TEST_CASE("coexistence weights are untruncated") {
  const auto model = ising(1.5);
  const MetastableModel meta(model, working(model));
  const Complex z = std::polar(1.0, 0.4);
  for (Spin q = 0; q < 2; ++q) {
    const auto w = meta.weights(q, z);
    REQUIRE(w.truncated.size() == meta.catalog(q).entries.size());
    CHECK(w.caps.empty());
    for (std::size_t e = 0; e < w.truncated.size(); ++e) {
      const double n = meta.catalog(q).entries[e].size();
      const Complex plain = meta.activity(q, e, z) / std::pow(meta.theta(q, z), n);
      CHECK(w.cutoff[e] == 1.0);
      CHECK(std::abs(w.truncated[e] - plain) <= 1e-12 * std::abs(plain));
      CHECK(std::abs(w.truncated[e] - meta.untruncated_weight(q, e, z)) <= 1e-12 * std::abs(plain));
    }
  }
}

TEST_CASE("weights of a deeply unstable phase vanish") {
  const auto model = blume_capel(1.0, 3.0);
  const MetastableModel meta(model, Regime{2.0, 0.0});
  const auto w = meta.weights(model.spin_index(0), 1.0);
  for (std::size_t e = 0; e < w.truncated.size(); ++e) {
    CHECK(w.cutoff[e] == 0.0);
    CHECK(w.truncated[e] == Complex(0.0));
  }
  CHECK(meta.pressure(model.spin_index(0), 1.0) == Complex(0.0));
  // The stable plus phase is untouched.
  const auto plus = meta.weights(model.spin_index(1), 1.0);
  for (double c : plus.cutoff) CHECK(c == 1.0);
}

TEST_CASE("contours with an interior reuse region partition functions") {
  const auto model = ising(1.5);
  const MetastableModel meta(model, working(model), Cutoffs{24, 18});
  const Complex z = std::polar(1.0, 1.1);
  const auto& cat = meta.catalog(1);
  bool seen = false;
  const auto w = meta.weights(1, z);
  for (std::size_t e = 0; e < cat.entries.size(); ++e) {
    if (!cat.entries[e].has_interior()) continue;
    seen = true;
    const Complex exact = meta.untruncated_weight(1, e, z);
    CHECK(std::abs(w.truncated[e] - exact) <= 1e-9 * std::abs(exact));
  }
  CHECK(seen);
}

TEST_CASE("truncated partition equals the contour partition function at coexistence") {
  const auto model = ising(1.2);
  const MetastableModel meta(model, working(model));
  const auto coords = box_coords(4);
  const Region region = Region::box(2, Coord{0, 0}, Coord{4, 4});
  for (Complex z : {Complex(1.0), std::polar(1.0, 0.7)})
    for (Spin q = 0; q < 2; ++q) {
      const Complex exact = contour_partition_function(model, region, q, z);
      const Complex truncated = meta.truncated_partition(coords, q, z);
      CHECK(std::abs(truncated - exact) <= 1e-10 * std::abs(exact));
    }
  // No room for a contour: just theta^|region|.
  const auto small = box_coords(2);
  CHECK(std::abs(meta.truncated_partition(small, 1, 1.0) - std::pow(meta.theta(1, 1.0), 4.0)) < 1e-9);
}

TEST_CASE("empty catalog gives zero pressure") {
  const auto model = blume_capel(1.0, 0.2);
  const MetastableModel meta(model, working(model), Cutoffs{8, 8});
  for (Spin q : model.phases()) {
    CHECK(meta.pressure(q, 0.9) == Complex(0.0));
    CHECK(std::abs(meta.zeta(q, 0.9) - meta.theta(q, 0.9)) < 1e-14);
    CHECK(std::abs(meta.finite_volume(q, 4, 0.9).zeta - meta.theta(q, 0.9)) < 1e-12);
  }
}

TEST_CASE("Ising flip symmetry and coexistence") {
  const auto model = ising(1.5, 2, Normalization::original);
  const MetastableModel meta(model, working(model));
  const Spin plus = model.spin_index(1), minus = model.spin_index(-1);
  for (Complex z : {std::polar(1.0, 0.3), std::polar(1.0, 2.0)}) {
    CHECK(std::abs(meta.zeta(plus, z) - meta.zeta(minus, 1.0 / z)) < 1e-12);
    const auto fe = meta.free_energies(z);
    CHECK(fe.stable.size() == 2);
    for (const auto& p : fe.phases) CHECK(p.a < 1e-12);
  }
  const auto fe = meta.free_energies(1.05);
  CHECK(fe.stable == std::vector<Spin>{plus});
  CHECK(fe.of(minus).a > 0.0);
}

TEST_CASE("leading pressure coefficients") {
  const double J = 3.0, lambda = 0.1;
  const int d = 2;
  const auto im = ising(J);
  const MetastableModel mi(im, working(im));
  CHECK(std::abs(fourier_coefficient(mi, im.spin_index(1), -1) / std::exp(-4.0 * d * J) - 1.0) < 0.01);
  CHECK(std::abs(fourier_coefficient(mi, im.spin_index(-1), 1) / std::exp(-4.0 * d * J) - 1.0) < 0.01);

  const auto bc = blume_capel(J, lambda);
  const MetastableModel mb(bc, working(bc));
  const Spin plus = bc.spin_index(1), zero = bc.spin_index(0);
  CHECK(std::abs(fourier_coefficient(mb, plus, -1) / std::exp(-2.0 * d * J - lambda) - 1.0) < 0.01);
  CHECK(std::abs(fourier_coefficient(mb, zero, 1) / std::exp(-2.0 * d * J + lambda) - 1.0) < 0.01);
  CHECK(std::abs(fourier_coefficient(mb, zero, -1) / std::exp(-2.0 * d * J + lambda) - 1.0) < 0.01);
  CHECK(std::abs(fourier_coefficient(mb, plus, -2) / std::exp(-(4.0 * d - 2) * J - 2 * lambda) / double(d) - 1.0) < 0.01);
}

TEST_CASE("zeta is analytic on the stable set") {
  const auto model = ising(2.0);
  const MetastableModel meta(model, working(model));
  const double h = 1e-5;
  for (double phase : {0.2, 1.3, 2.9}) {
    const Complex z = std::polar(1.0, phase);
    for (Spin q = 0; q < 2; ++q) {
      const Complex dx = (meta.zeta(q, z + h) - meta.zeta(q, z - h)) / (2 * h);
      const Complex dy = (meta.zeta(q, z + Complex(0, h)) - meta.zeta(q, z - Complex(0, h))) / (2 * h);
      CHECK(std::abs(0.5 * (dx + Complex(0, 1) * dy)) < 1e-5);
    }
  }
}

TEST_CASE("pressure report and regime estimate") {
  const auto model = ising(1.5);
  const auto est = estimate_regime(model, {Complex(1.0), Complex(0, 1)}, 16);
  CHECK(est.tau == doctest::Approx(8.0 * 1.5 / 9.0));
  CHECK(est.c0 > 0.0);
  CHECK_FALSE(est.hypothesis_met);
  CHECK(est.working().c0 == 0.0);
  const MetastableModel meta(model, est.working());
  const auto rep = meta.pressure_report(1, std::polar(1.0, 0.5));
  CHECK(rep.certificate.ok);
  CHECK(rep.error_bound < 1e-2);
  CHECK(std::abs(rep.s) <= std::exp(-est.tau / 2.0));
  CHECK(rep.caps.empty());

  // Feeding the estimated c0 into the cap makes it bind on every contour.
  const MetastableModel strict(model, Regime{est.tau, est.c0});
  const auto w = strict.weights(1, 1.0);
  CHECK(w.caps.size() == w.truncated.size());

  // A hot model has no certificate.
  const MetastableModel hot(ising(0.2), Regime{0.0, 0.0});
  CHECK_THROWS_AS(hot.pressure_report(1, 1.0), Error);
}

TEST_CASE("finite-volume free energies approach the infinite-volume ones") {
  const auto model = ising(2.0);
  const MetastableModel meta(model, working(model));
  const Complex z = std::polar(1.0, 0.6);
  double previous = 1e9;
  for (int L : {3, 4, 5}) {
    const auto fv = meta.finite_volume(1, L, z);
    const double gap = std::abs(std::log(fv.zeta / meta.zeta(1, z)));
    CHECK(gap < previous);
    previous = gap;
  }
  // Literal placement only keeps contours of diameter below L/2.
  CHECK(meta.finite_volume(1, 6, z, Placement::literal).polymers == 0);
}

TEST_CASE("phase geometry diagnostics") {
  const auto model = ising(1.5);
  const MetastableModel meta(model, working(model));
  std::vector<Complex> circle;
  for (int k = 0; k < 12; ++k) circle.push_back(std::polar(1.0, 0.5 + k * 0.5));
  const auto rep = phase_geometry_check(meta, circle, 0.5);
  CHECK(rep.ok);
  CHECK(rep.overlap_points == circle.size());
  CHECK(rep.attained_alpha == doctest::Approx(1.0).epsilon(1e-6));
  const auto single = phase_geometry_check(meta, {Complex(5.0)}, 0.5);
  CHECK(single.overlap_points == 0);
  CHECK(single.ok);
}
