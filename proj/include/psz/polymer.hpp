#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <string>
#include <vector>

#include "psz/lattice.hpp"

namespace psz {

using Rational = boost::rational<std::int64_t>;

// Finite abstract polymer system. Every polymer is incompatible with itself;
// `neighbours` lists the other polymers it is incompatible with.
struct PolymerSystem {
  std::vector<Complex> weight;
  std::vector<double> size;
  std::vector<double> a;
  std::vector<std::vector<std::size_t>> neighbours;

  std::size_t count() const { return weight.size(); }
  std::size_t add(Complex w, double polymer_size = 1.0, double a_value = 1.0);
  void set_incompatible(std::size_t i, std::size_t j);
  bool incompatible(std::size_t i, std::size_t j) const;
  void validate() const;
};

// Polymer index -> multiplicity, sorted by index, multiplicities positive.
using Multiplicity = std::vector<std::pair<std::size_t, int>>;

struct Cluster {
  Multiplicity multiplicity;
  Rational ursell{0};
  double norm = 0.0;
  Complex weight_product{1.0};
  Complex value() const { return boost::rational_cast<double>(ursell) * weight_product; }
};

std::vector<std::size_t> all_polymers(const PolymerSystem& system);

// Sum over compatible subsets of `subset`, by branching on the incompatibility graph.
Complex polymer_partition_function(const PolymerSystem& system, const std::vector<std::size_t>& subset,
                                   std::size_t budget = 24);

// Ursell coefficient from the signed count of connected spanning subgraphs.
Rational ursell_coefficient(const PolymerSystem& system, const Multiplicity& x, int budget = 8);

// Same, for an explicit incompatibility pattern between the listed polymer
// types; usable without building a system.
Rational ursell_from_pattern(const std::vector<int>& multiplicity, const std::vector<std::vector<bool>>& incompatible);

// All clusters supported in `subset` with norm at most `max_norm`.
std::vector<Cluster> enumerate_clusters(const PolymerSystem& system, const std::vector<std::size_t>& subset,
                                        double max_norm);

struct Certificate {
  bool ok = true;
  double worst_margin = 0.0;  // min over polymers of a - sum; negative on failure
  std::size_t worst_polymer = 0;
};

// Checks sum_{g' incompatible with g} z0(g') e^{a(g')} <= a(g) on every polymer.
Certificate kp_certificate(const PolymerSystem& system, const std::vector<double>& z0, const std::vector<double>& a);
// Uses |weight| and the system's a-function.
Certificate kp_certificate(const PolymerSystem& system);

struct Expansion {
  Complex value{0.0};
  double tail_bound = 0.0;
  std::size_t clusters = 0;
  Certificate certificate;
};

// Truncated log Z(subset) with the e^{-eta k} tail bound; refuses when the
// certificate for weights |w| e^{eta size} fails.
Expansion log_partition_expansion(const PolymerSystem& system, const std::vector<std::size_t>& subset,
                                  double max_norm, double eta);

// Term-wise derivative of the truncated expansion along weight direction `dweight`.
Complex expansion_derivative(const PolymerSystem& system, const std::vector<std::size_t>& subset,
                             const std::vector<Complex>& dweight, double max_norm);

struct TailReport {
  double containing = 0.0;         // sum of |z^T| over clusters containing the polymer
  double weighted = 0.0;           // the same with the multiplicity as factor
  double weight_bound = 0.0;       // |w| e^{a}
  double incompatible_sum = 0.0;   // clusters incompatible with the polymer
  double a_value = 0.0;
  double max_norm = 0.0;           // clusters above this norm are not included
  bool ok = false;
};

TailReport tail_bounds_check(const PolymerSystem& system, std::size_t polymer, double max_norm);

struct C0Estimate {
  double c0 = 0.0;
  double truncated_sum = 0.0;   // sum over enumerated contours at c0
  double remainder_bound = 0.0; // branching bound on larger contours; may be infinite
  std::size_t contours = 0;
  bool vacuous = false;         // no contour below the size cap
};

C0Estimate estimate_c0(int dim, std::size_t num_spins, int R, int size_cap);

PolymerSystem polymer_system_from_json(const std::string& text);
std::string polymer_system_to_json(const PolymerSystem& system);

}  // namespace psz
