#include "specres/spectral_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "specres/detail/clustering.hpp"

namespace specres {

double SpectralSet::check_tol(double t) {
  if (!(t >= 0.0) || !std::isfinite(t))
    throw ValidationError("SpectralSet: match_tol must be finite and >= 0");
  return t;
}

SpectralSet::SpectralSet(std::vector<Complex> points, double match_tol)
    : SpectralSet(std::move(points), std::vector<int>(), match_tol) {}

SpectralSet::SpectralSet(std::vector<Complex> points, std::vector<int> weights,
                         double match_tol)
    : points_(std::move(points)), weights_(std::move(weights)),
      match_tol_(check_tol(match_tol)) {
  if (weights_.empty()) weights_.assign(points_.size(), 1);
  if (weights_.size() != points_.size())
    throw ValidationError("SpectralSet: weights/points length mismatch");
  for (const Complex& p : points_)
    if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
      throw ValidationError("SpectralSet: non-finite point");
  for (int w : weights_)
    if (w <= 0) throw ValidationError("SpectralSet: weights must be positive");
  canonicalize();
}

void SpectralSet::canonicalize() {
  // Merge until stable: in pathological chains a round of weighted-mean
  // merges can itself create a pair within tol/2, so iterate.  Each pass
  // strictly reduces the point count, so this terminates.
  while (true) {
    auto clusters = detail::single_linkage_clusters(points_, match_tol_ / 2.0);
    if (clusters.size() == points_.size()) break;
    std::vector<Complex> merged;
    std::vector<int> merged_w;
    for (const auto& c : clusters) {
      Complex sum = 0.0;
      double wsum = 0.0;
      int w = 0;
      for (int idx : c) {
        sum += points_[idx] * static_cast<double>(weights_[idx]);
        wsum += weights_[idx];
        w += weights_[idx];
      }
      merged.push_back(sum / wsum);
      merged_w.push_back(w);
    }
    points_ = std::move(merged);
    weights_ = std::move(merged_w);
  }
  std::vector<int> order(points_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return detail::complex_less(points_[a], points_[b]);
  });
  std::vector<Complex> p(points_.size());
  std::vector<int> w(points_.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    p[i] = points_[order[i]];
    w[i] = weights_[order[i]];
  }
  points_ = std::move(p);
  weights_ = std::move(w);
}

double SpectralSet::distance_to(Complex z) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Complex& p : points_) best = std::min(best, std::abs(z - p));
  return best;
}

SpectralSet set_difference(const SpectralSet& g, const SpectralSet& l, double tol) {
  std::vector<Complex> pts;
  std::vector<int> wts;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (l.distance_to(g.points()[i]) > tol) {
      pts.push_back(g.points()[i]);
      wts.push_back(g.weights()[i]);
    }
  }
  return SpectralSet(std::move(pts), std::move(wts), g.match_tol());
}

PartitionCheck verify_partition(const SpectralSet& g, const SpectralSet& l,
                                const SpectralSet& r, double tol) {
  for (const Complex& p : g.points())
    if (l.distance_to(p) > tol && r.distance_to(p) > tol) return {false, p};
  for (const Complex& p : l.points())
    if (g.distance_to(p) > tol && l.distance_to(p) > tol) return {false, p};
  for (const Complex& p : r.points())
    if (g.distance_to(p) > tol && l.distance_to(p) > tol) return {false, p};
  return {true, std::nullopt};
}

namespace {

SpectralSet subset_of(const SpectralSet& s, const std::vector<int>& keep) {
  std::vector<Complex> pts;
  std::vector<int> wts;
  for (int idx : keep) {
    pts.push_back(s.points()[idx]);
    wts.push_back(s.weights()[idx]);
  }
  return SpectralSet(std::move(pts), std::move(wts), s.match_tol());
}

}  // namespace

bool verify_minimality_universality(const SpectralSet& g, const SpectralSet& l,
                                    const SpectralSet& r, double tol, int trials,
                                    std::uint64_t rng_seed) {
  if (trials < 0) throw ValidationError("verify_minimality_universality: trials < 0");
  if (r.empty()) return true;
  const int nr = static_cast<int>(r.size());

  std::mt19937_64 rng(rng_seed);

  // (a) Minimality: dropping any nonempty subset of r must break the
  // partition.  Exhaustive when feasible within the trial budget.
  auto removal_breaks = [&](const std::vector<bool>& remove) {
    std::vector<int> keep;
    for (int i = 0; i < nr; ++i)
      if (!remove[i]) keep.push_back(i);
    SpectralSet reduced = subset_of(r, keep);
    return !verify_partition(g, l, reduced, tol).holds;
  };
  const bool exhaustive =
      nr <= 20 && ((1u << nr) - 1) <= static_cast<unsigned>(trials);
  if (exhaustive) {
    for (std::uint32_t mask = 1; mask < (1u << nr); ++mask) {
      std::vector<bool> remove(nr, false);
      for (int i = 0; i < nr; ++i) remove[i] = (mask >> i) & 1u;
      if (!removal_breaks(remove)) return false;
    }
  } else {
    std::bernoulli_distribution bit(0.5);
    for (int t = 0; t < trials; ++t) {
      std::vector<bool> remove(nr, false);
      bool any = false;
      for (int i = 0; i < nr; ++i) {
        remove[i] = bit(rng);
        any = any || remove[i];
      }
      if (!any) remove[t % nr] = true;
      if (!removal_breaks(remove)) return false;
    }
  }

  // (b) Universality: every obstruction set o (a subset of g's points
  // with g = l union o at tol) must contain r.  Valid o's are sampled as
  // "all l-unmatched points of g, plus a random slice of the matched
  // ones"; r must match every one of them... more precisely r must be
  // inside o, i.e. each point of r matches some point of o within tol.
  std::vector<int> unmatched, matched;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (l.distance_to(g.points()[i]) > tol)
      unmatched.push_back(static_cast<int>(i));
    else
      matched.push_back(static_cast<int>(i));
  }
  std::bernoulli_distribution coin(0.5);
  const int samples = std::max(1, trials);
  for (int t = 0; t < samples; ++t) {
    std::vector<int> keep = unmatched;
    for (int idx : matched)
      if (coin(rng)) keep.push_back(idx);
    std::sort(keep.begin(), keep.end());
    SpectralSet o = subset_of(g, keep);
    if (!verify_partition(g, l, o, tol).holds) continue;  // not an obstruction set
    for (const Complex& p : r.points())
      if (o.distance_to(p) > tol) return false;
  }
  return true;
}

std::optional<double> hausdorff_distance(const SpectralSet& a, const SpectralSet& b) {
  if (a.empty() || b.empty()) return std::nullopt;
  double h = 0.0;
  for (const Complex& p : a.points()) h = std::max(h, b.distance_to(p));
  for (const Complex& p : b.points()) h = std::max(h, a.distance_to(p));
  return h;
}

ComponentDecomposition cluster_components(const SpectralSet& s, double gap) {
  if (!(gap >= 0.0) || !std::isfinite(gap))
    throw ValidationError("cluster_components: gap must be finite and >= 0");
  ComponentDecomposition out;
  out.components = detail::single_linkage_clusters(s.points(), gap);
  out.beta0 = static_cast<int>(out.components.size());
  return out;
}

}  // namespace specres
