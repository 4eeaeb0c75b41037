#pragma once

#include <vector>

#include "specres/types.hpp"

namespace specres::linalg {

// Hard caps.  Everything in this library is dense and small; refusing
// big inputs up front beats silently burning hours.
inline constexpr int kEigenDimensionCap = 256;
inline constexpr int kAberthDegreeCap = 16;

double frobenius_norm(const Matrix& m);

// Default spectral matching tolerance for a matrix of this size/scale:
// 1e-8 * max(1, ||m||_F).
double matching_tolerance(const Matrix& m);

// All eigenvalues of a square matrix, unclustered (length == dimension),
// sorted by (real, imag).  If residual is non-null it receives the max
// backward error ||A v - lambda v||_2 / ||A||_F over the computed pairs.
// Throws NumericalError on solver non-convergence, ValidationError on
// non-square/non-finite/oversized input.
std::vector<Complex> eigenvalues_raw(const Matrix& m, double* residual = nullptr);

struct EigenvalueGroup {
  Complex value;     // cluster mean
  int multiplicity;  // algebraic (cluster size)
};

struct EigenResult {
  std::vector<EigenvalueGroup> values;  // sorted by (real, imag)
  double residual_norm = 0.0;           // max backward error, see above
  int dimension = 0;
  int total_multiplicity() const;
};

// Eigenvalues with algebraic multiplicities assigned by single-linkage
// clustering at match_tol (<= 0 selects matching_tolerance(m)).
EigenResult eigenvalues(const Matrix& m, double match_tol = 0.0);

// Simultaneous root iteration for p(z) = sum coeffs[k] z^k (ascending
// order, degree <= kAberthDegreeCap, leading coefficient nonzero).
// Deterministic: fixed initial placement, fixed sweep order.  Returns
// degree roots sorted by (real, imag).  Throws NumericalError if the
// iteration fails to drive |p| below tolerance.
std::vector<Complex> aberth_roots(const std::vector<Complex>& coeffs);

// Numerical rank: number of singular values above the threshold.
// tol < 0 selects the automatic threshold
//   sigma_max * max(rows, cols) * machine_eps * 64,
// chosen loose enough to survive modestly conditioned similarity
// transforms on the matrices this library targets.
int rank_with_tolerance(const Matrix& m, double tol = -1.0);

// Plain repeated product (k >= 0; k == 0 yields the identity).  Kept
// deliberately naive so results are reproducible order-of-operations.
Matrix matrix_power(const Matrix& m, int k);

}  // namespace specres::linalg

namespace specres {
// The workhorse names, available unqualified throughout the library.
using linalg::aberth_roots;
using linalg::EigenResult;
using linalg::eigenvalues;
using linalg::eigenvalues_raw;
using linalg::EigenvalueGroup;
using linalg::frobenius_norm;
using linalg::matching_tolerance;
using linalg::matrix_power;
using linalg::rank_with_tolerance;
}  // namespace specres
