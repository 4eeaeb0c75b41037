#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "specres/types.hpp"

namespace specres {

// A finite multiset of points in the complex plane carrying its own
// matching tolerance.  Canonical form is maintained on construction: no
// two stored points lie within match_tol/2 of each other (closer points
// are merged to their weighted mean, weights summed), and points are
// sorted by (real, imag).  Weights record algebraic multiplicities; the
// set-membership operations below deliberately ignore them.
class SpectralSet {
public:
  SpectralSet() = default;
  explicit SpectralSet(double match_tol) : match_tol_(check_tol(match_tol)) {}
  SpectralSet(std::vector<Complex> points, double match_tol);
  SpectralSet(std::vector<Complex> points, std::vector<int> weights, double match_tol);

  const std::vector<Complex>& points() const { return points_; }
  const std::vector<int>& weights() const { return weights_; }
  double match_tol() const { return match_tol_; }
  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }

  // Min distance from z to the set; +inf when empty.
  double distance_to(Complex z) const;
  // True iff some point lies within tol of z.
  bool contains(Complex z, double tol) const { return distance_to(z) <= tol; }

private:
  static double check_tol(double t);
  void canonicalize();

  std::vector<Complex> points_;
  std::vector<int> weights_;
  double match_tol_ = 0.0;
};

// g \ l at tolerance tol: the points of g with no match in l.  Weights
// are carried over from g.  The result keeps g's match_tol.
SpectralSet set_difference(const SpectralSet& g, const SpectralSet& l, double tol);

struct PartitionCheck {
  bool holds = false;
  std::optional<Complex> witness;  // first offending point when !holds
};

// Does (l, r) reconstruct g at tolerance tol?  Requires every point of g
// to match l or r, and every point of l and r to match g or l.  Weights
// are ignored.  A failure carries the first unmatched point as witness.
PartitionCheck verify_partition(const SpectralSet& g, const SpectralSet& l,
                                const SpectralSet& r, double tol);

// Two-sided check that r is the minimal universal obstruction for
// (g, l): (a) removing any nonempty subset of r breaks the partition;
// (b) every sampled obstruction set o with g = l union o contains r.
// Subsets are enumerated exhaustively when 2^|r| - 1 <= trials, else
// `trials` subsets are sampled from the seeded generator.  Empty r is
// trivially minimal and universal.
bool verify_minimality_universality(const SpectralSet& g, const SpectralSet& l,
                                    const SpectralSet& r, double tol, int trials,
                                    std::uint64_t rng_seed);

// Symmetric Hausdorff distance; std::nullopt when either set is empty
// (explicitly undefined, never coerced to 0 or infinity).
std::optional<double> hausdorff_distance(const SpectralSet& a, const SpectralSet& b);

struct ComponentDecomposition {
  std::vector<std::vector<int>> components;  // indices into the set's points
  int beta0 = 0;                             // = components.size()
};

// Connected components under single-linkage at the given gap.
ComponentDecomposition cluster_components(const SpectralSet& s, double gap);

}  // namespace specres
