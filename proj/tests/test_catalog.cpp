#include <algorithm>
#include <set>

#include "doctest.h"
#include "psz/catalog.hpp"
#include "psz/error.hpp"

using namespace psz;

namespace {

std::set<DeviationKey> keys_of(const ContourCatalog& cat) {
  std::set<DeviationKey> out;
  for (const auto& e : cat.entries) out.insert(e.deviations);
  return out;
}

}  // namespace

TEST_CASE("smallest contours") {
  const auto cat = build_catalog(2, 1, 2, 1, {.size_cap = 12});
  // One flip (9 sites) and the two dominoes (12 sites).
  REQUIRE(cat.entries.size() == 3);
  CHECK(cat.entries[0].size() == 9);
  CHECK(cat.entries[1].size() == 12);
  CHECK(cat.entries[2].size() == 12);
  for (const auto& e : cat.entries) {
    CHECK(e.contour.exterior_label == 1);
    CHECK_FALSE(e.has_interior());
  }
  CHECK(build_catalog(2, 1, 2, 1, {.size_cap = 8}).entries.empty());
  CHECK(build_catalog(3, 1, 2, 0, {.size_cap = 27}).entries.size() == 1);
}

TEST_CASE("spin count multiplies single-site contours") {
  const auto bc = build_catalog(2, 1, 3, 2, {.size_cap = 9});
  CHECK(bc.entries.size() == 2);
  const auto potts4 = build_catalog(2, 1, 4, 0, {.size_cap = 12});
  // 3 single flips, 2 orientations x 9 spin pairs of dominoes.
  CHECK(potts4.entries.size() == 3 + 18);
}

TEST_CASE("catalog agrees with exhaustive window search") {
  SUBCASE("Ising, 4x4 free sites") {
    const int cap = 18;
    const auto cat = build_catalog(2, 1, 2, 1, {.size_cap = cap});
    const auto window = window_contours(2, 1, 2, 1, {4, 4}, cap);
    const auto keys = keys_of(cat);
    for (const auto& k : window) CHECK(keys.count(k) == 1);
    // Every catalog contour whose deviations fit in 4x4 was also seen.
    const std::set<DeviationKey> seen(window.begin(), window.end());
    std::size_t fits = 0;
    for (const auto& e : cat.entries) {
      const auto shape = canonical_shape([&] {
        std::vector<Coord> c;
        for (auto& [x, s] : e.deviations) c.push_back(x);
        return c;
      }(), 2);
      const bool small = std::all_of(shape.begin(), shape.end(), [](const Coord& c) { return c[0] < 4 && c[1] < 4; });
      if (small) {
        ++fits;
        CHECK(seen.count(e.deviations) == 1);
      }
    }
    CHECK(fits == window.size());
  }
  SUBCASE("Blume-Capel, 3x3 free sites") {
    const int cap = 21;
    const auto cat = build_catalog(2, 1, 3, 2, {.size_cap = cap});
    const auto keys = keys_of(cat);
    for (const auto& k : window_contours(2, 1, 3, 2, {3, 3}, cap)) CHECK(keys.count(k) == 1);
  }
}

TEST_CASE("contours with an interior appear once the cap allows them") {
  const auto cat = build_catalog(2, 1, 2, 1, {.size_cap = 24});
  const auto it = std::find_if(cat.entries.begin(), cat.entries.end(), [](const auto& e) { return e.has_interior(); });
  REQUIRE(it != cat.entries.end());
  CHECK(it->size() == 24);
  CHECK(it->interior.size() == 1);
  CHECK(it->interior[0].size() == 1);
  CHECK(it->interior_labels[0] == 0);
  CHECK(it->volume.size() == 25);
}

TEST_CASE("entries are distinct and sorted by size") {
  const auto cat = build_catalog(2, 1, 3, 0, {.size_cap = 18});
  CHECK(keys_of(cat).size() == cat.entries.size());
  for (std::size_t i = 1; i < cat.entries.size(); ++i) CHECK(cat.entries[i - 1].size() <= cat.entries[i].size());
  CHECK_THROWS_AS(build_catalog(2, 1, 3, 0, {.size_cap = 40, .interior_slack = 0, .budget = 1000}), Error);
}
