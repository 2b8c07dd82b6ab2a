#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psz/models.hpp"

namespace psz {

struct ExactOptions {
  std::uint64_t state_budget = std::uint64_t{1} << 27;
  std::size_t matrix_budget = 4096;
  int workers = 1;
};

// Full enumeration of Z_L^per(z) in Gray-code order with incremental energies.
Complex partition_function_exact(const SpinModel& model, int L, Complex z,
                                 const ExactOptions& options = {});

// Trace of the L-th power of the layer transfer matrix (range-1 models only).
Complex transfer_matrix_pf(const SpinModel& model, int L, Complex z,
                           const ExactOptions& options = {});

struct PartitionPolynomial {
  std::vector<Complex> coefficients;  // c_0 .. c_D
  std::string model;
  int side = 0;
  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
};

PartitionPolynomial partition_polynomial(const SpinModel& model, int L,
                                         const ExactOptions& options = {});
Complex evaluate(const std::vector<Complex>& coefficients, Complex z);
Complex evaluate(const PartitionPolynomial& poly, Complex z);

struct ExactZeroSet {
  std::vector<Complex> roots;      // sorted by argument, then modulus
  double residual = 0.0;           // max |p(root)|
  double relative_residual = 0.0;  // max |p(root)| / sum |c_k||root|^k
  int removed_leading = 0;         // vanishing leading coefficients dropped
  int roots_at_zero = 0;
  std::string note;
};

ExactZeroSet polynomial_roots(std::vector<Complex> coefficients, int newton_steps = 5);
ExactZeroSet exact_zeros(const PartitionPolynomial& poly);

// Deterministic pairwise sum (fixed association order).
Complex pairwise_sum(const std::vector<Complex>& values);

}  // namespace psz
