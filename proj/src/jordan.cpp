#include "specres/jordan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "specres/detail/clustering.hpp"
#include "specres/linalg.hpp"

namespace specres::jordan {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Slack multiplier for deciding which singular values of the powers
// (m - lambda I)^k are "numerically zero".  The threshold follows a
// first-order noise model (see power_analysis) and this factor buys
// headroom for similarity transforms with condition up to ~1e3 without
// eating into the genuinely nonzero singular values, which sit many
// orders of magnitude higher for matrices within the dimension cap.
constexpr double kRankSlack = 4096.0;

void require_jordan_input(const Matrix& m, const char* who) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw ValidationError(std::string(who) + ": square nonempty matrix required");
  if (!m.allFinite()) throw ValidationError(std::string(who) + ": non-finite entry");
  if (m.rows() > kJordanDimensionCap)
    throw ValidationError(std::string(who) + ": dimension " + std::to_string(m.rows()) +
                          " exceeds cap " + std::to_string(kJordanDimensionCap));
}

struct PowerAnalysis {
  std::vector<int> weyr;
  bool consistent = false;
  Matrix kernel_basis;  // of (m - lambda I)^depth, exactly `mult` columns when consistent
};

// Rank/nullity sequence of B = m - lambda I through its powers, with a
// noise floor that tracks how rounding propagates through the repeated
// products: floor_{k+1} = (floor_k + eps * ||P_k||) * ||B|| * n.  A
// relative threshold would misread pure-noise powers (e.g. the exact
// square of a nilpotent block) as full rank, and a fixed absolute one
// would not survive rescaled inputs.
PowerAnalysis power_analysis(const Matrix& m, Complex lambda, int mult) {
  const int n = static_cast<int>(m.rows());
  const Matrix b = m - lambda * Matrix::Identity(n, n);

  PowerAnalysis out;
  Matrix p = b;
  Eigen::JacobiSVD<Matrix> svd_b(b);
  const double beta = svd_b.singularValues().size() ? svd_b.singularValues()(0) : 0.0;
  double floor = n * kEps * (beta + m.norm());
  int prev_nullity = 0;
  for (int k = 1; k <= mult; ++k) {
    Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeFullV);
    const auto& sigma = svd.singularValues();
    const double threshold = kRankSlack * floor;
    int rank = 0;
    for (int i = 0; i < sigma.size(); ++i)
      if (sigma(i) > threshold) ++rank;
    const int nullity = n - rank;
    const int inc = nullity - prev_nullity;
    if (inc <= 0) break;
    if (!out.weyr.empty() && inc > out.weyr.back()) {
      out.consistent = false;  // increments must be non-increasing
      return out;
    }
    out.weyr.push_back(inc);
    prev_nullity = nullity;
    if (prev_nullity > mult) {
      out.consistent = false;  // cluster smaller than the invariant subspace
      return out;
    }
    if (prev_nullity == mult) {
      out.kernel_basis = svd.matrixV().rightCols(nullity).eval();
      out.consistent = true;
      return out;
    }
    const double sigma_p = sigma.size() ? sigma(0) : 0.0;
    floor = (floor + kEps * sigma_p) * beta * n;
    p = (p * b).eval();
  }
  out.consistent = false;  // nullity plateaued below the multiplicity
  return out;
}

std::vector<int> conjugate_partition(const std::vector<int>& weyr) {
  std::vector<int> blocks;
  if (weyr.empty()) return blocks;
  for (int i = 1; i <= weyr[0]; ++i) {
    int count = 0;
    for (int w : weyr)
      if (w >= i) ++count;
    blocks.push_back(count);
  }
  std::sort(blocks.rbegin(), blocks.rend());
  return blocks;
}

Complex mean_of(const std::vector<Complex>& pts, const std::vector<int>& idx) {
  Complex s = 0.0;
  for (int i : idx) s += pts[i];
  return s / static_cast<double>(idx.size());
}

}  // namespace

int EigenStructure::max_depth() const {
  int d = 0;
  for (const auto& e : eigenvalues) d = std::max(d, e.depth);
  return d;
}

EigenStructure eigen_structure(const Matrix& m, double cluster_tol) {
  require_jordan_input(m, "eigen_structure");
  const int n = static_cast<int>(m.rows());
  const std::vector<Complex> raw = linalg::eigenvalues_raw(m);

  double lambda_scale = 1.0;
  for (const Complex& z : raw) lambda_scale = std::max(lambda_scale, std::abs(z));
  const bool auto_mode = cluster_tol <= 0.0;
  const double radius =
      auto_mode ? 4.0 * lambda_scale * std::pow(kEps, 1.0 / (n + 1)) : cluster_tol;

  struct Pending {
    std::vector<int> members;
    double radius;
  };
  struct Accepted {
    std::vector<int> members;
    Complex value;
    PowerAnalysis analysis;
  };

  std::vector<Pending> queue;
  for (auto& c : detail::single_linkage_clusters(raw, radius))
    queue.push_back({std::move(c), radius});
  std::vector<Accepted> accepted;

  const double floor_radius = linalg::matching_tolerance(m);
  while (!queue.empty()) {
    Pending cur = std::move(queue.back());
    queue.pop_back();
    const Complex lambda = mean_of(raw, cur.members);
    PowerAnalysis pa = power_analysis(m, lambda, static_cast<int>(cur.members.size()));
    if (pa.consistent) {
      accepted.push_back({std::move(cur.members), lambda, std::move(pa)});
      continue;
    }
    if (!auto_mode)
      throw NumericalError(
          "eigen_structure: rank data inconsistent with the eigenvalue cluster at " +
          std::to_string(lambda.real()) + "+" + std::to_string(lambda.imag()) +
          "i under the explicit clustering tolerance");
    // The radius over-merged distinct eigenvalues; split and retry.
    double r = cur.radius / 2.0;
    std::vector<std::vector<int>> parts;
    while (r >= floor_radius) {
      std::vector<Complex> pts;
      for (int i : cur.members) pts.push_back(raw[i]);
      auto sub = detail::single_linkage_clusters(pts, r);
      if (sub.size() > 1) {
        for (auto& s : sub) {
          std::vector<int> members;
          for (int local : s) members.push_back(cur.members[local]);
          parts.push_back(std::move(members));
        }
        break;
      }
      r /= 2.0;
    }
    if (parts.empty())
      throw NumericalError(
          "eigen_structure: ambiguous eigenvalue clustering near " +
          std::to_string(lambda.real()) + "+" + std::to_string(lambda.imag()) +
          "i: rank data rejects the cluster and its members cannot be resolved "
          "further at this precision");
    for (auto& p : parts) queue.push_back({std::move(p), r});
  }

  // Unmerged clusters closer than 10x the resolution floor cannot carry
  // meaningful Jordan data; refuse rather than guess.  (With an explicit
  // tolerance the floor is that tolerance, per the documented contract.)
  const double ambiguity_floor = 10.0 * (auto_mode ? floor_radius : cluster_tol);
  for (std::size_t i = 0; i < accepted.size(); ++i)
    for (std::size_t j = i + 1; j < accepted.size(); ++j)
      if (std::abs(accepted[i].value - accepted[j].value) < ambiguity_floor)
        throw NumericalError(
            "eigen_structure: ambiguous clustering, eigenvalue clusters at " +
            std::to_string(accepted[i].value.real()) + " and " +
            std::to_string(accepted[j].value.real()) +
            " are closer than 10x the clustering tolerance but were not merged");

  EigenStructure out;
  out.dimension = n;
  for (auto& acc : accepted) {
    EigenvalueStructure e;
    e.value = acc.value;
    e.algebraic = static_cast<int>(acc.members.size());
    e.weyr = acc.analysis.weyr;
    e.geometric = e.weyr.empty() ? 0 : e.weyr[0];
    e.blocks = conjugate_partition(e.weyr);
    e.depth = static_cast<int>(e.weyr.size());
    out.eigenvalues.push_back(std::move(e));
  }
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
            [](const EigenvalueStructure& a, const EigenvalueStructure& b) {
              return detail::complex_less(a.value, b.value);
            });
  return out;
}

JCSplit jc_split(const Matrix& m, const EigenStructure& structure) {
  require_jordan_input(m, "jc_split");
  const int n = static_cast<int>(m.rows());
  int total = 0;
  for (const auto& e : structure.eigenvalues) total += e.algebraic;
  if (structure.dimension != n || total != n)
    throw ValidationError("jc_split: structure does not match the matrix dimension");

  // Generalized eigenvector basis, one block of columns per eigenvalue.
  Matrix v(n, n);
  std::vector<std::pair<int, int>> spans;  // column offset, count
  int col = 0;
  for (const auto& e : structure.eigenvalues) {
    PowerAnalysis pa = power_analysis(m, e.value, e.algebraic);
    if (!pa.consistent || pa.kernel_basis.cols() != e.algebraic)
      throw NumericalError(
          "jc_split: generalized eigenspace at " + std::to_string(e.value.real()) + "+" +
          std::to_string(e.value.imag()) + "i has numerical dimension " +
          std::to_string(pa.kernel_basis.cols()) + ", expected " +
          std::to_string(e.algebraic));
    v.block(0, col, n, e.algebraic) = pa.kernel_basis;
    spans.push_back({col, e.algebraic});
    col += e.algebraic;
  }

  Eigen::JacobiSVD<Matrix> svd(v);
  const auto& sigma = svd.singularValues();
  const double cond =
      sigma(sigma.size() - 1) > 0.0 ? sigma(0) / sigma(sigma.size() - 1)
                                    : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e8))
    throw NumericalError("jc_split: generalized eigenvector basis has condition " +
                         std::to_string(cond) + " (> 1e8); split untrustworthy");

  const Matrix w = v.partialPivLu().solve(Matrix::Identity(n, n));

  JCSplit split;
  split.d = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < structure.eigenvalues.size(); ++k) {
    const auto& e = structure.eigenvalues[k];
    const auto [off, cnt] = spans[k];
    const Matrix projector = v.middleCols(off, cnt) * w.middleRows(off, cnt);
    split.d += e.value * projector;
    split.components.push_back({e.value, e.depth, projector});
  }
  split.n = m - split.d;
  return split;
}

Matrix apply_holomorphic(const JCSplit& split,
                         const std::vector<std::function<Complex(Complex)>>& derivs) {
  if (split.components.empty())
    throw ValidationError("apply_holomorphic: empty split");
  int max_depth = 0;
  for (const auto& c : split.components) max_depth = std::max(max_depth, c.depth);
  if (static_cast<int>(derivs.size()) < max_depth)
    throw ValidationError("apply_holomorphic: need " + std::to_string(max_depth) +
                          " derivative(s), got " + std::to_string(derivs.size()));
  const int n = static_cast<int>(split.d.rows());
  Matrix f = Matrix::Zero(n, n);
  for (const auto& c : split.components) {
    Matrix npow = Matrix::Identity(n, n);
    double factorial = 1.0;
    for (int q = 0; q < c.depth; ++q) {
      if (q > 0) {
        npow = (npow * split.n).eval();
        factorial *= q;
      }
      f += (derivs[q](c.value) / factorial) * (npow * c.projector);
    }
  }
  return f;
}

PoleOrderResult resolvent_pole_order(const Matrix& m, Complex lambda) {
  require_jordan_input(m, "resolvent_pole_order");
  const int n = static_cast<int>(m.rows());
  const EigenStructure structure = eigen_structure(m);

  // lambda must sit on one of the eigenvalue clusters.
  int own = -1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < structure.eigenvalues.size(); ++i) {
    const double d = std::abs(structure.eigenvalues[i].value - lambda);
    if (d < best) {
      best = d;
      own = static_cast<int>(i);
    }
  }
  const double accept = std::max(10.0 * linalg::matching_tolerance(m),
                                 4.0 * std::pow(kEps, 1.0 / (n + 1)) *
                                     std::max(1.0, std::abs(lambda)));
  if (own < 0 || best > accept)
    throw ValidationError("resolvent_pole_order: lambda is not an eigenvalue "
                          "(nearest cluster at distance " + std::to_string(best) + ")");
  const Complex center = structure.eigenvalues[own].value;

  std::vector<double> deltas;
  for (int k = 0; k <= 8; ++k) deltas.push_back(std::pow(10.0, -2.0 - 0.5 * k));
  const double max_delta = deltas.front();

  double nearest_other = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < structure.eigenvalues.size(); ++i)
    if (static_cast<int>(i) != own)
      nearest_other =
          std::min(nearest_other, std::abs(structure.eigenvalues[i].value - center));
  if (nearest_other < 100.0 * max_delta)
    throw NumericalError(
        "resolvent_pole_order: another eigenvalue lies within 100x the largest "
        "sample radius (distance " + std::to_string(nearest_other) +
        "); the fit would be contaminated");

  // Ray direction away from the other eigenvalues (they are all far by
  // the check above, so any angle works; keep the choice deterministic).
  double theta = 0.4;
  if (std::isfinite(nearest_other)) {
    double best_score = -1.0;
    for (int k = 0; k < 16; ++k) {
      const double cand = 2.0 * M_PI * k / 16.0 + 0.4;
      const Complex z = center + max_delta * Complex(std::cos(cand), std::sin(cand));
      double score = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < structure.eigenvalues.size(); ++i)
        if (static_cast<int>(i) != own)
          score = std::min(score, std::abs(structure.eigenvalues[i].value - z));
      if (score > best_score) {
        best_score = score;
        theta = cand;
      }
    }
  }

  std::vector<double> xs, ys;
  for (double delta : deltas) {
    const Complex z = center + delta * Complex(std::cos(theta), std::sin(theta));
    Eigen::JacobiSVD<Matrix> svd(z * Matrix::Identity(n, n) - m);
    const auto& sigma = svd.singularValues();
    const double smax = sigma(0), smin = sigma(sigma.size() - 1);
    // Below this the resolvent norm is saturated by rounding in the
    // singular values themselves; the sample carries no slope signal.
    if (smin <= 32.0 * kEps * smax) continue;
    xs.push_back(std::log(1.0 / delta));
    ys.push_back(std::log(1.0 / smin));
  }
  if (xs.size() < 4)
    throw NumericalError("resolvent_pole_order: only " + std::to_string(xs.size()) +
                         " usable samples (resolvent saturates machine precision)");

  const std::size_t cnt = xs.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < cnt; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= cnt;
  my /= cnt;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < cnt; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double ss_res = 0;
  for (std::size_t i = 0; i < cnt; ++i) {
    const double e = ys[i] - (my + slope * (xs[i] - mx));
    ss_res += e * e;
  }
  PoleOrderResult out;
  out.slope = slope;
  out.order = static_cast<int>(std::lround(slope));
  out.fit_residual = std::sqrt(ss_res / cnt) / std::sqrt(sxx / cnt);
  return out;
}

}  // namespace specres::jordan
