#include <cmath>
#include <random>

#include "doctest.h"
#include "psz/contours.hpp"
#include "psz/error.hpp"

using namespace psz;

namespace {

Configuration torus_config(int L, std::initializer_list<std::pair<Coord, Spin>> sites, Spin base) {
  Configuration c = Configuration::constant(Grid::torus(2, L), base);
  for (auto [x, s] : sites) c.spins[c.grid.wrap_index(x)] = s;
  return c;
}

Configuration from_index(const Grid& g, std::size_t base, std::uint64_t k) {
  Configuration c = Configuration::constant(g, 0);
  for (auto& s : c.spins) {
    s = static_cast<Spin>(k % base);
    k /= base;
  }
  return c;
}

// Mostly-constant configuration: a few random deviations on a constant background.
Configuration sparse_config(const Grid& g, std::size_t base, std::mt19937_64& rng, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(base) - 1);
  Configuration c = Configuration::constant(g, static_cast<Spin>(pick(rng)));
  for (auto& s : c.spins)
    if (u(rng) < density) s = static_cast<Spin>(pick(rng));
  return c;
}

SiteSet block(const Grid& g, Coord lo, int side) {
  SiteSet out;
  for (int x = 0; x < side; ++x)
    for (int y = 0; y < side; ++y) out.push_back(g.wrap_index(lo + Coord{x, y}));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("boundary graph components follow the box-overlap rule") {
  const auto one = torus_config(9, {{{4, 4}, 0}}, 1);
  auto g1 = contour_graph(one, 1);
  REQUIRE(g1.components.size() == 1);
  CHECK(g1.components[0].size() == 9);
  CHECK(g1.small[0]);

  const auto near = torus_config(11, {{{2, 2}, 0}, {{5, 2}, 0}}, 1);
  CHECK(contour_graph(near, 1).components.size() == 1);
  const auto far = torus_config(11, {{{2, 2}, 0}, {{6, 2}, 0}}, 1);
  CHECK(contour_graph(far, 1).components.size() == 2);

  // At L = 6 a single flip already has 2*diameter >= L.
  const auto crowded = torus_config(6, {{{2, 2}, 0}}, 1);
  CHECK_FALSE(contour_graph(crowded, 1).small[0]);
}

TEST_CASE("exterior and interior of simple supports") {
  const Grid t7 = Grid::torus(2, 7);
  auto full = exterior_interior(t7, block(t7, {2, 2}, 3));
  CHECK(full.exterior.size() == 40);
  CHECK(full.interior.empty());

  const Grid t9 = Grid::torus(2, 9);
  SiteSet ring = block(t9, {3, 3}, 3);
  const std::size_t centre = t9.wrap_index({4, 4});
  ring.erase(std::find(ring.begin(), ring.end(), centre));
  auto parts = exterior_interior(t9, ring);
  REQUIRE(parts.interior.size() == 1);
  CHECK(parts.interior[0] == SiteSet{centre});
  CHECK(parts.exterior.size() == 81 - 9);

  auto net = exterior_interior(t9, ring, true);
  CHECK(net.exterior.empty());
  CHECK(net.interior.size() == 2);
}

TEST_CASE("single flip gives one minus-labelled contour with the right weight") {
  const SpinModel m = ising(1.2);
  const auto c = torus_config(7, {{{3, 3}, 0}}, 1);
  auto col = extract(c, 1);
  REQUIRE(col.contours.size() == 1);
  CHECK_FALSE(col.network.has_value());
  const Contour& y = col.contours[0];
  CHECK(y.size() == 9);
  CHECK(y.exterior_label == 1);
  CHECK(y.interior.empty());
  CHECK(y.config == c);
  const Complex z{0.8, 0.3};
  // 8J from the four broken bonds, log z from the missing field term.
  const Complex expected = std::exp(-(9.0 * ground_state_energy(m, 1, z) + 8.0 * 1.2 + std::log(z)));
  CHECK(std::abs(contour_weight(m, y, z) - expected) < 1e-12 * std::abs(expected));
  CHECK(reconstruct(col, 1) == c);
}

TEST_CASE("bijection is exact on every configuration of T_3") {
  for (const SpinModel& m : {ising(1.0), blume_capel(1.0, 0.1)}) {
    const Grid g = Grid::torus(2, 3);
    const std::size_t base = m.num_spins();
    const auto total = static_cast<std::uint64_t>(std::pow(base, 9));
    std::uint64_t ok = 0;
    for (std::uint64_t k = 0; k < total; ++k) {
      const auto c = from_index(g, base, k);
      const auto col = extract(c, m.range);
      CHECK(col.contours.empty());  // nothing fits below L/2 on T_3
      if (reconstruct(col, m.range) == c && extract(reconstruct(col, m.range), m.range) == col) ++ok;
    }
    CHECK(ok == total);
  }
}

TEST_CASE("random round trips on larger tori") {
  std::mt19937_64 rng(20261018);
  const std::vector<SpinModel> models = {ising(1.0), blume_capel(1.0, 0.2), potts(3, 1.0)};
  for (const auto& m : models) {
    for (int L : {7, 8, 9, 12}) {
      const Grid g = Grid::torus(2, L);
      for (int trial = 0; trial < 60; ++trial) {
        const double density = trial % 3 == 0 ? 0.5 : 0.03;
        const auto c = sparse_config(g, m.num_spins(), rng, density);
        const auto col = extract(c, 1);
        CHECK(is_matching(col, 1).ok);
        const auto back = reconstruct(col, 1);
        CHECK(back == c);
        CHECK(extract(back, 1) == col);
      }
    }
  }
}

TEST_CASE("energy splits into ground-state bulk and contour excitations") {
  std::mt19937_64 rng(7);
  const SpinModel m = blume_capel(0.9, 0.3);
  const Complex z{1.1, -0.2};
  const Grid g = Grid::torus(2, 14);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = sparse_config(g, 3, rng, 0.02);
    const auto col = extract(c, 1);
    std::vector<bool> in_support(g.size(), false);
    Complex e = 0.0;
    auto add = [&](const Contour& y) {
      for (auto s : y.support) in_support[s] = true;
      e += excitation_energy(m, y.config, z);
    };
    for (const auto& y : col.contours) add(y);
    if (col.network) add(*col.network);
    for (std::size_t s = 0; s < g.size(); ++s)
      if (!in_support[s]) e += ground_state_energy(m, c.spins[s], z);
    const Complex h = hamiltonian_torus(m, c, z);
    CHECK(std::abs(e - h) < 1e-10 * (1.0 + std::abs(h)));
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("clashing labels are rejected") {
  const int L = 15;
  const auto a = torus_config(L, {{{2, 2}, 0}}, 1);   // minus flip in a plus sea
  const auto b = torus_config(L, {{{9, 9}, 1}}, 0);   // plus flip in a minus sea
  MatchingCollection col{a.grid, {extract(a, 1).contours[0], extract(b, 1).contours[0]}, std::nullopt, 0};
  const auto diag = is_matching(col, 1);
  CHECK_FALSE(diag.ok);
  REQUIRE_FALSE(diag.problems.empty());
  CHECK(diag.problems[0].find("label mismatch") != std::string::npos);
  CHECK_THROWS_AS(reconstruct(col, 1), Error);

  const auto c = torus_config(L, {{{9, 9}, 0}}, 1);
  MatchingCollection good{a.grid, {extract(a, 1).contours[0], extract(c, 1).contours[0]}, std::nullopt, 0};
  CHECK(is_matching(good, 1).ok);
  CHECK(reconstruct(good, 1) == torus_config(L, {{{2, 2}, 0}, {{9, 9}, 0}}, 1));

  const auto d = torus_config(L, {{{4, 2}, 0}}, 1);
  MatchingCollection close{a.grid, {extract(a, 1).contours[0], extract(d, 1).contours[0]}, std::nullopt, 0};
  CHECK_FALSE(is_matching(close, 1).ok);
}

TEST_CASE("nested contours form a chain") {
  // A 9x9 minus block with a plus site at its centre; the smallest contour
  // with an interior at R = 1 has diameter 5, so the torus must exceed 22.
  const int L = 23;
  Configuration c = Configuration::constant(Grid::torus(2, L), 1);
  for (int x = 0; x < 9; ++x)
    for (int y = 0; y < 9; ++y) c.spins[c.grid.wrap_index({5 + x, 5 + y})] = 0;
  c.spins[c.grid.wrap_index({9, 9})] = 1;
  const auto col = extract(c, 1);
  REQUIRE(col.contours.size() == 2);
  const auto forest = nesting_order(col);
  const std::size_t outer = col.contours[0].size() > col.contours[1].size() ? 0 : 1;
  const std::size_t inner = 1 - outer;
  CHECK(forest.parent[outer] == -1);
  CHECK(forest.parent[inner] == static_cast<int>(outer));
  CHECK(forest.depth[inner] == 2);
  CHECK(col.contours[outer].interior_labels == std::vector<Spin>{0});
  CHECK(col.contours[inner].exterior_label == 0);
  CHECK(reconstruct(col, 1) == c);
}

TEST_CASE("torus identities reproduce the exact partition function") {
  const Complex z{0.9, 0.25};
  for (const SpinModel& m : {ising(0.7), blume_capel(0.8, 0.2), potts(3, 0.9)}) {
    for (int L : {3, 4}) {
      if (std::pow(m.num_spins(), L * L) > 1 << 22) continue;
      const auto rep = torus_contour_identity_check(m, L, z);
      CHECK(rep.max_relative_deviation < 1e-10);
      CHECK(rep.networks > 0);
    }
  }
}

TEST_CASE("contour sum on a box of Z^d matches the spin sum") {
  const SpinModel m = ising(0.6);
  const Complex z{1.3, 0.4};
  const Region box = Region::box(2, {0, 0}, {5, 5});
  CHECK(box.size() == 25);
  const Complex contour_side = contour_partition_function(m, box, 1, z);
  const Complex spin_side = restricted_spin_sum(m, box, 1, z);

  // Independent oracle: every assignment of the 3x3 inner sites, with the
  // energy written out bond by bond for the sites of the box.
  const Complex log_z = std::log(z);
  Complex oracle = 0.0;
  for (int k = 0; k < 512; ++k) {
    auto spin = [&](int x, int y) {
      if (x >= 1 && x <= 3 && y >= 1 && y <= 3) return (k >> ((x - 1) * 3 + (y - 1))) & 1 ? 1 : -1;
      return 1;
    };
    Complex e = 0.0;
    for (int x = 0; x < 5; ++x)
      for (int y = 0; y < 5; ++y) {
        const int s = spin(x, y);
        e += -0.5 * (s + 1) * log_z;
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
          e += -0.5 * 0.6 * s * spin(x + dx, y + dy);
      }
    oracle += std::exp(-e);
  }
  CHECK(std::abs(spin_side - oracle) < 1e-11 * std::abs(oracle));
  CHECK(std::abs(contour_side - oracle) < 1e-11 * std::abs(oracle));

  const SpinModel bc = blume_capel(0.7, 0.15);
  const Complex a = contour_partition_function(bc, box, 2, z);
  const Complex b = restricted_spin_sum(bc, box, 2, z);
  CHECK(std::abs(a - b) < 1e-11 * std::abs(b));
}

TEST_CASE("single contours in a region") {
  const SpinModel m = ising(1.0);
  const Region box = Region::box(2, {0, 0}, {5, 5});
  const auto ys = contours_in_region(m, box, 1);
  // Every nonempty flip pattern on the inner 3x3 gives one connected contour.
  CHECK(ys.size() == 511);
  for (const auto& y : ys) CHECK(y.exterior_label == 1);
  CHECK_THROWS_AS(contours_in_region(m, Region::box(2, {0, 0}, {9, 9}), 1), Error);
}
