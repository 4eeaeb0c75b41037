#pragma once

#include <functional>
#include <vector>

#include "specres/types.hpp"

namespace specres::jordan {

// Jordan analysis is only attempted on small matrices; beyond this the
// rank-sequence approach loses meaning in double precision.
inline constexpr int kJordanDimensionCap = 32;

struct EigenvalueStructure {
  Complex value = 0.0;          // cluster representative (mean)
  int algebraic = 0;            // cluster size
  int geometric = 0;            // = weyr[0]
  std::vector<int> weyr;        // nullity increments of (m - value I)^k
  std::vector<int> blocks;      // Jordan block sizes, descending (conjugate of weyr)
  int depth = 0;                // max block size = nilpotent depth
};

struct EigenStructure {
  std::vector<EigenvalueStructure> eigenvalues;  // sorted by (re, im)
  int dimension = 0;
  int max_depth() const;
};

// Full per-eigenvalue Jordan data.  cluster_tol <= 0 selects an
// automatic radius that widens with dimension (defective eigenvalues of
// an n-dimensional matrix split at roughly eps^(1/n) under rounding, so
// a matching-tolerance-sized radius would shatter them); clusters are
// then validated against the rank data and adaptively split when the
// radius over-merged distinct eigenvalues.  With an explicit
// cluster_tol the radius is used as given and any rank-inconsistent or
// ambiguous clustering (two clusters closer than 10 * cluster_tol left
// unmerged) is a NumericalError -- an explicit diagnostic, never a
// silent guess.
EigenStructure eigen_structure(const Matrix& m, double cluster_tol = 0.0);

// m = d + n with d diagonalizable, n nilpotent, d n = n d, constructed
// from spectral projectors onto generalized eigenspaces.
struct JCSplit {
  Matrix d, n;
  struct Component {
    Complex value;
    int depth;
    Matrix projector;
  };
  std::vector<Component> components;
};

// Throws NumericalError when the generalized-eigenvector basis is too
// ill-conditioned (cond > 1e8) to trust the split.
JCSplit jc_split(const Matrix& m, const EigenStructure& structure);

// f(m) = sum over eigenvalues, q < depth of f^(q)(value)/q! n^q P.
// derivs[q] evaluates the q-th derivative of f; at least max_depth
// entries are required (ValidationError otherwise).
Matrix apply_holomorphic(const JCSplit& split,
                         const std::vector<std::function<Complex(Complex)>>& derivs);

struct PoleOrderResult {
  int order = 0;          // rounded slope
  double slope = 0.0;     // least-squares slope of log ||R|| vs log (1/delta)
  double fit_residual = 0.0;  // rms fit residual in slope units
};

// Estimates the resolvent pole order at lambda by sampling
// ||(z I - m)^-1|| along a ray z = lambda + delta e^(i theta) for
// delta log-spaced in [1e-6, 1e-2], fitting the log-log slope.  The ray
// direction is chosen away from other eigenvalues; samples beyond the
// floating-point resolution of the resolvent are discarded.  Errors:
// lambda not an eigenvalue; another eigenvalue within 100 * max(delta)
// (contaminated fit); fewer than 4 usable samples.
PoleOrderResult resolvent_pole_order(const Matrix& m, Complex lambda);

}  // namespace specres::jordan
