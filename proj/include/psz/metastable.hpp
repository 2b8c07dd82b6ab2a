#pragma once

#include <map>
#include <memory>
#include <vector>

#include "psz/catalog.hpp"
#include "psz/models.hpp"
#include "psz/polymer.hpp"

namespace psz {

struct MollifierValue {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

// C^2 cutoff: 0 below -2, 1 above -1, quintic smoothstep in between.
MollifierValue mollifier_eval(double x);

// Constants entering the truncation: the mollifier offset tau/4 and the cap
// e^{-(c0 + tau/2)|Y|}.
struct Regime {
  double tau = 0.0;
  double c0 = 0.0;
};

struct Cutoffs {
  int contour_size = 18;  // largest contour support kept
  int cluster_norm = 18;  // largest cluster norm kept
};

struct CapEvent {
  Spin phase = 0;
  std::size_t entry = 0;
  Complex z;
  double modulus = 0.0;
  double bound = 0.0;
};

struct PhaseWeights {
  Spin phase = 0;
  Complex z;
  Complex theta;
  std::vector<Complex> truncated;  // capped truncated weight per catalog entry
  std::vector<double> cutoff;      // mollifier product per entry
  std::vector<CapEvent> caps;
};

struct PressureReport {
  Complex s;
  double error_bound = 0.0;  // e^{-eta (k+1)} times the certificate sum
  double eta = 0.0;
  double a_scale = 0.0;      // a(Y) = a_scale |Y|
  Certificate certificate;
  std::size_t clusters = 0;
  std::vector<CapEvent> caps;
};

struct PhaseFreeEnergy {
  Spin phase = 0;
  int multiplicity = 1;
  Complex theta;
  Complex s;
  Complex zeta;
  double f = 0.0;  // -log|zeta|, +inf when theta vanishes
  double a = 0.0;
};

struct FreeEnergies {
  Complex z;
  std::vector<PhaseFreeEnergy> phases;
  double f = 0.0;
  std::vector<Spin> stable;
  std::vector<CapEvent> caps;
  const PhaseFreeEnergy& of(Spin phase) const;
};

enum class Placement {
  embedded,  // every catalog contour whose support fits injectively on the torus
  literal,   // only contours with 2*diameter < L
};

struct FiniteVolume {
  Complex zeta;            // theta * exp(L^{-d} log Z')
  Complex log_partition;   // principal log of the polymer sum on the torus
  Complex power;           // theta^{L^d} times the polymer sum, i.e. zeta^{L^d}
  std::size_t polymers = 0;
};

// Truncated contour models for every phase of a spin model, with their
// translation classes of clusters precomputed.
class MetastableModel {
 public:
  MetastableModel(SpinModel model, Regime regime, Cutoffs cutoffs = {});
  ~MetastableModel();
  MetastableModel(MetastableModel&&) noexcept;
  MetastableModel& operator=(MetastableModel&&) noexcept;

  const SpinModel& model() const;
  const Regime& regime() const;
  const Cutoffs& cutoffs() const;
  const ContourCatalog& catalog(Spin q) const;

  Complex theta(Spin q, Complex z) const;
  Complex activity(Spin q, std::size_t entry, Complex z) const;  // rho_z(Y)

  PhaseWeights weights(Spin q, Complex z) const;
  // Untruncated weight: activity / theta^|Y| times ratios of exact interior partition functions.
  Complex untruncated_weight(Spin q, std::size_t entry, Complex z) const;
  // Truncated partition function of a finite region of Z^d.
  Complex truncated_partition(const std::vector<Coord>& region, Spin q, Complex z) const;

  Complex pressure(Spin q, Complex z) const;
  PressureReport pressure_report(Spin q, Complex z) const;
  Complex zeta(Spin q, Complex z) const;
  FreeEnergies free_energies(Complex z) const;

  FiniteVolume finite_volume(Spin q, int L, Complex z, Placement placement = Placement::embedded,
                             std::size_t budget = 1 << 16) const;

  std::size_t cluster_classes(Spin q) const;

  // Every cap activation seen by any evaluation since construction or the last clear.
  std::size_t cap_count() const;
  std::vector<CapEvent> cap_log() const;  // first events only
  void clear_cap_log() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

struct RegimeEstimate {
  double tau = 0.0;     // Peierls rate over catalog contours and sampled z
  double c0 = 0.0;      // contour-counting constant at the catalog cap
  double M = 0.0;       // derivative bound on the ground-state weights
  bool hypothesis_met = false;  // tau >= 4 c0 + 16
  Regime working() const { return Regime{tau, 0.0}; }
};

RegimeEstimate estimate_regime(const SpinModel& model, const std::vector<Complex>& samples, int size_cap = 18);

struct PhaseGeometryReport {
  double alpha = 0.0;              // window defining the almost-ground-state sets
  double attained_alpha = 0.0;     // min |v_m - v_n| over overlaps
  double convex_margin = 0.0;      // min distance of a vertex from the hull of the others
  double zeta_separation = 0.0;    // same quantity with zeta in place of theta
  std::size_t overlap_points = 0;
  std::size_t multi_overlap_points = 0;
  bool ok = true;
};

PhaseGeometryReport phase_geometry_check(const MetastableModel& meta, const std::vector<Complex>& grid, double alpha);

}  // namespace psz
