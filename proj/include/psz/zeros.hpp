#pragma once

#include <optional>
#include <string>
#include <vector>

#include "psz/metastable.hpp"
#include "psz/torus_exact.hpp"

namespace psz {

struct CurvePoint {
  Complex z;
  double arclength = 0.0;
  double delta = 0.0;     // Arg(zeta_m / zeta_n), unwrapped along the curve
  double residual = 0.0;  // |f_m - f_n - level|
};

struct TraceOptions {
  double step = 0.02;
  double length = 8.0;
  double level = 0.0;  // trace f_m - f_n = level
  double tolerance = 1e-12;
  double multiple_tolerance = 1e-9;
  int newton_steps = 30;
  bool both_directions = true;
};

struct CoexistenceCurve {
  Spin m = 0, n = 0;
  int dim = 2;
  std::vector<CurvePoint> points;
  bool closed = false;
  std::vector<Complex> multiple_points;  // endpoints where a third phase joins
  std::string stop_reason;
  TraceOptions options;
  double total_delta() const { return points.empty() ? 0.0 : points.back().delta - points.front().delta; }
};

CoexistenceCurve trace_coexistence(const MetastableModel& meta, Spin m, Spin n, Complex seed,
                                   const TraceOptions& options = {});

struct PredictedZero {
  Complex z;
  long k = 0;  // L^d Delta = (2k+1) pi
  double modulus_residual = 0.0;
  double phase_residual = 0.0;
  bool degraded = false;  // close to a multiple point
};

struct ZeroSet {
  Spin m = 0, n = 0;
  int side = 0;
  std::vector<PredictedZero> zeros;
  double winding = 0.0;  // L^d * total Delta variation / 2 pi
};

ZeroSet solve_zero_equations(const MetastableModel& meta, const CoexistenceCurve& curve, int L, int workers = 1);

// Leading-order zero angles of the periodic Ising partition function.
double ising_theta_k(double J, int d, int L, long k);

struct DensitySample {
  double arclength;  // segment midpoint
  double width;      // segment length
  Complex z;
  double density;  // zeros per unit length
};
std::vector<DensitySample> density_of_zeros(const CoexistenceCurve& curve, int L);
double integrate_density(const std::vector<DensitySample>& samples);

struct ZeroMatch {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // predicted, exact
  std::vector<double> distances;
  double max_distance = 0.0;
  double mean_distance = 0.0;
  std::size_t unmatched_predicted = 0, unmatched_exact = 0;
  bool optimal = false;  // verified by exhaustive assignment
};
ZeroMatch match_predicted_exact(const std::vector<Complex>& predicted, const std::vector<Complex>& exact);

struct ResidualReport {
  Complex exact;
  Complex xi;
  double zeta_modulus = 0.0;  // max_m |zeta_m|
  double relative = 0.0;      // |xi| / zeta_modulus^{L^d}
  std::vector<Spin> phases;
  std::string warning;
};
// Z_L^per minus the sum of q_m (zeta_m^{(L)})^{L^d} over phases with a_m < kappa / L,
// or over `phases` when given.
ResidualReport finite_volume_residual(const MetastableModel& meta, int L, Complex z, double kappa = 1.0,
                                  std::optional<std::vector<Spin>> phases = std::nullopt,
                                  bool use_multiplicity = true);

struct MultiplePoint {
  Complex z;
  std::vector<Spin> phases;
  double residual = 0.0;
};
std::vector<MultiplePoint> find_multiple_points(const MetastableModel& meta, const std::vector<Complex>& grid,
                                                int workers = 1);

}  // namespace psz
