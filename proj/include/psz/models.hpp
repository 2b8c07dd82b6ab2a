#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "psz/lattice.hpp"

namespace psz {

enum class Normalization { shifted, original };

// Value of one interaction term: Phi = constant - z_power * log z.
struct TermValue {
  Complex constant;
  double z_power = 0.0;
};

struct InteractionTerm {
  std::string label;
  std::vector<Coord> shape;  // offsets, one translation representative, contains the origin
  std::function<TermValue(std::span<const Spin>)> value;
};

class SpinModel {
 public:
  std::string name;
  std::vector<int> spin_labels;
  int dim = 2;
  int range = 1;
  std::vector<InteractionTerm> terms;
  std::vector<std::vector<Spin>> orbits;
  Normalization normalization = Normalization::shifted;
  std::string parameter = "z";
  std::string domain = "C \\ {0}";

  std::size_t num_spins() const { return spin_labels.size(); }
  Spin spin_index(int label) const;
  int label(Spin s) const { return spin_labels[s]; }
  // Orbit representatives (the phases) in orbit order.
  std::vector<Spin> phases() const;
  std::size_t orbit_of(Spin s) const;
  int orbit_size(Spin s) const { return static_cast<int>(orbits[orbit_of(s)].size()); }

  // Checks shape diameters against the range and orbit coverage.
  void validate() const;
};

// Built-in models. Field terms follow the shifted normalization unless
// `original` is requested, so weights are polynomial in z.
SpinModel ising(double J, int dim = 2, Normalization norm = Normalization::shifted);
struct MultiSpinCoupling {
  std::vector<Coord> shape;
  double coupling = 0.0;
};
SpinModel perturbed_ising(double J, const std::vector<MultiSpinCoupling>& extra, int dim = 2,
                          Normalization norm = Normalization::shifted);
SpinModel blume_capel(double J, double lambda, int dim = 2,
                      Normalization norm = Normalization::shifted);
SpinModel potts(int q, double J, int dim = 2);

// Custom potential: one shape plus a table indexed by the mixed-radix spin
// tuple (first offset most significant).
struct TablePotential {
  std::vector<Coord> shape;
  std::vector<TermValue> table;
};
SpinModel table_model(std::string name, std::vector<int> spin_labels, int dim,
                      const std::vector<TablePotential>& potentials,
                      std::vector<std::vector<Spin>> orbits);

Complex term_energy(const InteractionTerm& term, std::span<const Spin> spins, Complex log_z);

Complex ground_state_energy(const SpinModel& model, Spin m, Complex z);
Complex theta(const SpinModel& model, Spin m, Complex z);
// max over phases of |theta_m(z)|
double theta_max(const SpinModel& model, Complex z);
// Largest total z-power a single site can carry (site-density sense).
double max_site_power(const SpinModel& model);

// Sites whose centered (2R+1)-box carries a non-constant configuration.
SiteSet r_boundary(const Configuration& config, int R);

// Sum over terms containing `site` of Phi / |shape|.
Complex local_energy(const SpinModel& model, const Configuration& config, std::size_t site,
                     Complex log_z);
Complex excitation_energy(const SpinModel& model, const Configuration& config, Complex z);
Complex hamiltonian_torus(const SpinModel& model, const Configuration& config, Complex z);

// Pads a window configuration so every boundary box lies inside the window.
Configuration padded(const Configuration& config, int margin);

}  // namespace psz
