#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "specres/expression.hpp"
#include "specres/spectral_set.hpp"
#include "specres/types.hpp"

namespace specres::family {

// Rectangular sampling domain for a scalar family: an interval (1-D,
// conventionally in the variable "s") or an axis-aligned rectangle (2-D,
// variables "x", "y").
struct Domain {
  int dims = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};
  std::array<std::string, 2> vars{"s", ""};

  static Domain interval(double a, double b, const std::string& var = "s");
  static Domain rectangle(double ax, double bx, double ay, double by);
};

// A grid point where the centered-difference gradient falls below the
// critical threshold (value range * 1e-3).
struct CriticalPoint {
  std::array<double, 2> param{0.0, 0.0};  // only [0..dims) used
  std::array<int, 2> index{0, 0};
  double value = 0.0;
  double gradient_norm = 0.0;
  bool near_boundary = false;  // within two cells of the domain edge
};

struct FamilyResult {
  Expression expr;
  Domain domain;
  int samples_per_axis = 0;
  std::vector<double> values;  // 1-D: values[i]; 2-D: values[iy * n + ix]
  double vmin = 0.0, vmax = 0.0;
  std::vector<std::pair<double, double>> support_intervals;  // closed, sorted
  std::vector<double> bin_edges;                             // bins + 1 edges
  std::vector<long> bin_counts;
  std::vector<double> critical_values;  // deduplicated
  std::vector<CriticalPoint> critical_points;
};

// Samples expr on a uniform inclusive grid (n points per axis, n >= 2),
// computes the value histogram, clusters the sampled values into support
// intervals with gap 4 * (value range) / n, and locates near-critical
// grid points.  Evaluation errors propagate as EvalError.
FamilyResult sample_family(const Expression& expr, const Domain& domain, int n,
                           int bins = 64);

enum class VanHoveKind { minimum, maximum, saddle, degenerate };

struct VanHoveFlag {
  double value = 0.0;
  VanHoveKind kind = VanHoveKind::degenerate;
  double enhancement = 0.0;  // histogram count at value / median bin count
  bool reliable = true;      // false for near-boundary critical points
  std::array<double, 2> param{0.0, 0.0};
};

// Classifies the critical points of a 2-variable family by the sign
// pattern of the finite-difference Hessian.  Near-boundary points are
// reported with reliable = false instead of being classified away.
// Returns an empty list for 1-D families.
std::vector<VanHoveFlag> detect_van_hove(const FamilyResult& result);

struct CoveredLocal {
  Complex value;
  int interval_index;
};

// Family support intervals versus a local spectrum: intervals stay
// closed; local points falling inside (or within the grid-resolution
// slack of) an interval are annotated as already covered rather than
// subtracted.  Remaining local points are reported as isolated.
struct FamilyResidue {
  std::vector<std::pair<double, double>> intervals;
  std::vector<CoveredLocal> covered;
  std::vector<Complex> isolated_locals;
  double slack = 0.0;  // tolerance actually used for coverage
};

FamilyResidue family_residue(const FamilyResult& result, const SpectralSet& local,
                             double tol);

}  // namespace specres::family
