#include "specres/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "specres/detail/clustering.hpp"

namespace specres::linalg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite())
    throw ValidationError(std::string(who) + ": non-finite matrix entry");
}

void require_square_nonempty(const Matrix& m, const char* who) {
  if (m.rows() == 0 || m.cols() == 0)
    throw ValidationError(std::string(who) + ": empty matrix");
  if (m.rows() != m.cols())
    throw ValidationError(std::string(who) + ": matrix is " +
                          std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected square");
}

}  // namespace

double frobenius_norm(const Matrix& m) { return m.norm(); }

double matching_tolerance(const Matrix& m) {
  return 1e-8 * std::max(1.0, frobenius_norm(m));
}

int EigenResult::total_multiplicity() const {
  int s = 0;
  for (const auto& g : values) s += g.multiplicity;
  return s;
}

std::vector<Complex> eigenvalues_raw(const Matrix& m, double* residual) {
  require_square_nonempty(m, "eigenvalues");
  require_finite(m, "eigenvalues");
  if (m.rows() > kEigenDimensionCap)
    throw ValidationError("eigenvalues: dimension " + std::to_string(m.rows()) +
                          " exceeds cap " + std::to_string(kEigenDimensionCap));

  Eigen::ComplexEigenSolver<Matrix> solver(m, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigenvalues: QR iteration did not converge for dimension " +
                         std::to_string(m.rows()));

  std::vector<Complex> vals(m.rows());
  for (int i = 0; i < m.rows(); ++i) vals[i] = solver.eigenvalues()(i);

  if (residual) {
    const double denom = std::max(frobenius_norm(m), 1e-300);
    double worst = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
      Vector v = solver.eigenvectors().col(i);
      worst = std::max(worst, (m * v - solver.eigenvalues()(i) * v).norm() / denom);
    }
    *residual = worst;
  }

  std::sort(vals.begin(), vals.end(), detail::complex_less);
  return vals;
}

EigenResult eigenvalues(const Matrix& m, double match_tol) {
  if (match_tol <= 0.0) match_tol = matching_tolerance(m);
  double residual = 0.0;
  std::vector<Complex> raw = eigenvalues_raw(m, &residual);

  EigenResult out;
  out.dimension = static_cast<int>(m.rows());
  out.residual_norm = residual;
  for (const auto& cluster : detail::single_linkage_clusters(raw, match_tol)) {
    Complex mean = 0.0;
    for (int idx : cluster) mean += raw[idx];
    mean /= static_cast<double>(cluster.size());
    out.values.push_back({mean, static_cast<int>(cluster.size())});
  }
  std::sort(out.values.begin(), out.values.end(),
            [](const EigenvalueGroup& a, const EigenvalueGroup& b) {
              return detail::complex_less(a.value, b.value);
            });
  return out;
}

namespace {

// Horner evaluation of p and p' at z; coeffs ascending.
void horner(const std::vector<Complex>& coeffs, Complex z, Complex* p, Complex* dp) {
  Complex v = 0.0, dv = 0.0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k) {
    dv = dv * z + v;
    v = v * z + coeffs[k];
  }
  *p = v;
  *dp = dv;
}

}  // namespace

std::vector<Complex> aberth_roots(const std::vector<Complex>& coeffs_in) {
  if (coeffs_in.empty())
    throw ValidationError("aberth_roots: empty coefficient list");
  for (const Complex& c : coeffs_in)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw ValidationError("aberth_roots: non-finite coefficient");
  const int degree = static_cast<int>(coeffs_in.size()) - 1;
  if (degree > kAberthDegreeCap)
    throw ValidationError("aberth_roots: degree " + std::to_string(degree) +
                          " exceeds cap " + std::to_string(kAberthDegreeCap));
  if (coeffs_in.back() == Complex(0.0, 0.0))
    throw ValidationError("aberth_roots: zero leading coefficient");
  if (degree == 0) return {};

  // Normalize so the stopping test is scale-free.
  double scale = 0.0;
  for (const Complex& c : coeffs_in) scale = std::max(scale, std::abs(c));
  std::vector<Complex> coeffs(coeffs_in);
  for (Complex& c : coeffs) c /= scale;

  if (degree == 1) return {-coeffs[0] / coeffs[1]};

  // Initial placement: circle of the Cauchy-style radius around the
  // root centroid, with a fixed angular offset to break symmetry.
  const Complex an = coeffs[degree];
  const Complex center = -coeffs[degree - 1] / (static_cast<double>(degree) * an);
  double radius = 0.0;
  for (int k = 0; k < degree; ++k)
    radius = std::max(radius, std::abs(coeffs[k] / an));
  radius = 1.0 + radius;

  std::vector<Complex> z(degree);
  for (int j = 0; j < degree; ++j) {
    const double angle = 2.0 * M_PI * j / degree + 0.4;
    z[j] = center + radius * Complex(std::cos(angle), std::sin(angle));
  }

  const double target = 1e-13;  // on coefficients normalized to max 1
  const int max_sweeps = 1000;
  double worst = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < max_sweeps && worst > target; ++sweep) {
    worst = 0.0;
    for (int k = 0; k < degree; ++k) {
      Complex p, dp;
      horner(coeffs, z[k], &p, &dp);
      worst = std::max(worst, std::abs(p));
      if (std::abs(p) <= target) continue;
      if (dp == Complex(0.0, 0.0)) {
        // Stationary point; deterministic nudge off it.
        z[k] += Complex(1e-6 * (1.0 + std::abs(z[k])), 1e-6);
        continue;
      }
      const Complex newton = p / dp;
      Complex repulsion = 0.0;
      bool collided = false;
      for (int j = 0; j < degree; ++j) {
        if (j == k) continue;
        const Complex d = z[k] - z[j];
        if (std::abs(d) < 1e-300) {
          collided = true;
          break;
        }
        repulsion += 1.0 / d;
      }
      if (collided) {
        z[k] += Complex(1e-6 * (1.0 + std::abs(z[k])), -1e-6);
        continue;
      }
      const Complex denom = 1.0 - newton * repulsion;
      z[k] -= (std::abs(denom) < 1e-300) ? newton : newton / denom;
    }
  }

  // Final verification; refuse to hand back junk.
  for (int k = 0; k < degree; ++k) {
    Complex p, dp;
    horner(coeffs, z[k], &p, &dp);
    if (!(std::abs(p) <= 1e-10))
      throw NumericalError("aberth_roots: iteration failed to converge (degree " +
                           std::to_string(degree) + ", residual " +
                           std::to_string(std::abs(p)) + ")");
  }

  std::sort(z.begin(), z.end(), detail::complex_less);
  return z;
}

int rank_with_tolerance(const Matrix& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0)
    throw ValidationError("rank_with_tolerance: empty matrix");
  require_finite(m, "rank_with_tolerance");

  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  const double threshold =
      tol >= 0.0
          ? tol
          : sigma_max * static_cast<double>(std::max(m.rows(), m.cols())) * kEps * 64.0;
  int rank = 0;
  for (int i = 0; i < sigma.size(); ++i)
    if (sigma(i) > threshold) ++rank;
  return rank;
}

Matrix matrix_power(const Matrix& m, int k) {
  require_square_nonempty(m, "matrix_power");
  require_finite(m, "matrix_power");
  if (k < 0) throw ValidationError("matrix_power: negative exponent");
  Matrix acc = Matrix::Identity(m.rows(), m.cols());
  for (int i = 0; i < k; ++i) acc = acc * m;
  return acc;
}

}  // namespace specres::linalg
