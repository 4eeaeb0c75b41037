#include "specres/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "specres/expression.hpp"
#include "specres/linalg.hpp"

namespace specres {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Rule {
  enum class Kind { linear, constant, expr } kind = Kind::linear;
  std::optional<Expression> expr;

  double operator()(double t) const {
    switch (kind) {
      case Kind::linear: return t;
      case Kind::constant: return 1.0;
      case Kind::expr: return evaluate(*expr, {{"s", t}});
    }
    return t;
  }
};

Rule resolve_rule(const std::string& text, const std::string& coupling_id) {
  Rule r;
  if (text == "linear") {
    r.kind = Rule::Kind::linear;
  } else if (text == "constant") {
    r.kind = Rule::Kind::constant;
  } else {
    r.kind = Rule::Kind::expr;
    try {
      r.expr = parse_expression(text);
    } catch (const ParseError& e) {
      throw ValidationError("sweep rule for interface '" + coupling_id +
                            "' does not parse: " + e.what());
    }
    for (const std::string& v : r.expr->variables())
      if (v != "s")
        throw ValidationError("sweep rule for interface '" + coupling_id +
                              "' uses variable '" + v + "' (only s is allowed)");
  }
  return r;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void append_once(std::vector<std::string>& diags, const std::string& msg) {
  if (std::find(diags.begin(), diags.end(), msg) == diags.end()) diags.push_back(msg);
}

// Fits y = a + b x by least squares; returns {b, rms residual}.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw NumericalError("degenerate abscissa in log-log fit");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    ss += r * r;
  }
  return {slope, std::sqrt(ss / n)};
}

}  // namespace

StratifiedSystem deformed_system(const StratifiedSystem& sys, double t,
                                 const std::string& default_rule) {
  if (!std::isfinite(t)) throw ValidationError("sweep parameter must be finite");
  std::vector<InterfaceCoupling> couplings = sys.interfaces();
  for (auto& c : couplings) {
    const Rule rule = resolve_rule(c.sweep_rule.empty() ? default_rule : c.sweep_rule, c.id);
    double factor = 0.0;
    try {
      factor = rule(t);
    } catch (const EvalError& e) {
      throw ValidationError("sweep rule for interface '" + c.id + "' failed at t=" +
                            std::to_string(t) + ": " + e.what());
    }
    if (!std::isfinite(factor))
      throw ValidationError("sweep rule for interface '" + c.id + "' is not finite at t=" +
                            std::to_string(t));
    c.tau *= factor;
  }
  Tolerances tol = sys.tolerances();
  tol.match_tol = sys.match_tol();
  return StratifiedSystem(sys.strata(), std::move(couplings), tol);
}

SweepSchedule SweepSchedule::uniform(int steps) {
  if (steps < 1) throw ValidationError("sweep needs at least 1 step");
  SweepSchedule s;
  s.values.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k)
    s.values.push_back(static_cast<double>(k) / static_cast<double>(steps));
  return s;
}

DeformationTrajectory run_sweep(const StratifiedSystem& sys, const SweepSchedule& schedule) {
  if (schedule.values.size() < 2)
    throw ValidationError("sweep schedule needs at least two parameter values");
  for (std::size_t i = 0; i < schedule.values.size(); ++i) {
    const double t = schedule.values[i];
    if (!std::isfinite(t) || t < 0.0 || t > 1.0)
      throw ValidationError("sweep parameter values must lie in [0, 1]");
    if (i > 0 && t <= schedule.values[i - 1])
      throw ValidationError("sweep parameter values must be strictly increasing");
  }
  if (!std::isfinite(schedule.beta0_gap) || schedule.beta0_gap < 0.0)
    throw ValidationError("beta0 gap must be nonnegative");

  // Validate every rule up front (cheap) so a bad rule fails before any
  // eigenvalue work.
  for (const auto& c : sys.interfaces())
    resolve_rule(c.sweep_rule.empty() ? schedule.default_rule : c.sweep_rule, c.id);

  DeformationTrajectory traj;
  traj.branch_count = sys.dimension();
  const double base_tol = sys.match_tol();

  // Pass 1: residues and raw spectra at every t.
  std::vector<ResidueComputation> rcs;
  std::vector<std::vector<Complex>> raw;
  rcs.reserve(schedule.values.size());
  raw.reserve(schedule.values.size());
  for (const double t : schedule.values) {
    const StratifiedSystem at_t = deformed_system(sys, t, schedule.default_rule);
    try {
      rcs.push_back(compute_residue(at_t));
    } catch (const Error& e) {
      throw NumericalError("sweep at t=" + std::to_string(t) + ": " + e.what());
    }
    raw.push_back(eigenvalues_raw(assemble_global(at_t)));
  }

  // Resolve the component-count gap.
  double gap = schedule.beta0_gap;
  if (gap == 0.0) gap = sys.tolerances().cluster_gap;
  if (gap == 0.0) {
    for (const auto& rc : rcs) {
      const auto& pts = rc.residue.points();
      if (pts.size() < 2) continue;
      std::vector<double> nn(pts.size(), std::numeric_limits<double>::infinity());
      for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j)
          if (i != j) nn[i] = std::min(nn[i], std::abs(pts[i] - pts[j]));
      gap = 0.1 * median(nn);
      break;
    }
    if (gap == 0.0) {
      gap = 0.1;
      append_once(traj.diagnostics,
                  "no multi-point residue along the sweep; beta0 gap fell back to 0.1");
    }
  }
  traj.beta0_gap = gap;

  // Pass 2: assemble trajectory points with branch continuity.
  traj.points.reserve(schedule.values.size());
  for (std::size_t k = 0; k < schedule.values.size(); ++k) {
    TrajectoryPoint p;
    p.t = schedule.values[k];
    p.residue = rcs[k].residue;
    p.beta0 = cluster_components(p.residue, gap).beta0;

    const auto& rpts = p.residue.points();
    const auto& lpts = rcs[k].local_union.points();
    if (!rpts.empty() && !lpts.empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (const Complex& r : rpts)
        for (const Complex& l : lpts) best = std::min(best, std::abs(r - l));
      p.gap_to_local = best;
    }
    if (k > 0) p.hausdorff_increment = hausdorff_distance(p.residue, rcs[k - 1].residue);

    if (k == 0) {
      p.global_eigenvalues = raw[0];  // eigenvalues_raw is already sorted
    } else {
      const std::vector<Complex>& prev = traj.points[k - 1].global_eigenvalues;
      const std::vector<Complex>& cur = raw[k];
      const std::size_t n = prev.size();
      struct Pair {
        double d;
        std::size_t i, j;
      };
      std::vector<Pair> pairs;
      pairs.reserve(n * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) pairs.push_back({std::abs(prev[i] - cur[j]), i, j});
      std::stable_sort(pairs.begin(), pairs.end(),
                       [](const Pair& a, const Pair& b) { return a.d < b.d; });
      std::vector<bool> row_used(n, false), col_used(n, false);
      std::vector<std::size_t> assign(n, 0);
      std::size_t assigned = 0;
      int ambiguous = 0;
      for (const Pair& pr : pairs) {
        if (assigned == n) break;
        if (row_used[pr.i] || col_used[pr.j]) continue;
        // A second distinct unused target at nearly the same distance
        // makes the continuation of this branch ambiguous.
        for (std::size_t j2 = 0; j2 < n; ++j2) {
          if (j2 == pr.j || col_used[j2]) continue;
          const double d2 = std::abs(prev[pr.i] - cur[j2]);
          if (d2 - pr.d <= 0.1 * std::max(pr.d, base_tol) &&
              std::abs(cur[j2] - cur[pr.j]) > base_tol) {
            ++ambiguous;
            break;
          }
        }
        row_used[pr.i] = true;
        col_used[pr.j] = true;
        assign[pr.i] = pr.j;
        ++assigned;
      }
      if (ambiguous > 0)
        append_once(traj.diagnostics,
                    "ambiguous branch continuation at t=" + std::to_string(p.t));
      p.global_eigenvalues.resize(n);
      for (std::size_t i = 0; i < n; ++i) p.global_eigenvalues[i] = cur[assign[i]];
    }
    traj.points.push_back(std::move(p));
  }
  return traj;
}

GapCheck check_gap_condition(const DeformationTrajectory& traj, double delta) {
  if (!std::isfinite(delta) || delta < 0.0)
    throw ValidationError("gap threshold must be nonnegative");
  GapCheck out;
  for (const auto& p : traj.points) {
    if (!p.gap_to_local) continue;
    const double g = *p.gap_to_local;
    if (!out.min_gap || g < *out.min_gap) out.min_gap = g;
    if (g < delta && out.holds) {
      out.holds = false;
      out.first_violation_t = p.t;
    }
  }
  return out;
}

Beta0Check track_beta0_constancy(const DeformationTrajectory& traj) {
  Beta0Check out;
  bool seen = false;
  int last = 0;
  for (const auto& p : traj.points) {
    if (p.residue.points().empty()) continue;
    if (!seen) {
      out.value = p.beta0;
      last = p.beta0;
      seen = true;
      continue;
    }
    if (p.beta0 != last) {
      out.constant = false;
      out.transitions.emplace_back(p.t, p.beta0);
      last = p.beta0;
    }
  }
  return out;
}

ExceptionalResult detect_exceptional(const std::function<Matrix(double)>& builder,
                                     Complex lambda0, std::vector<double> grid) {
  if (!builder) throw ValidationError("perturbation builder is empty");
  if (grid.empty()) {
    for (int k = 0; k <= 12; ++k) grid.push_back(std::pow(10.0, -8.0 + 0.5 * k));
  }
  if (grid.size() < 4)
    throw ValidationError("perturbation grid needs at least four strengths");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] <= 0.0)
      throw ValidationError("perturbation strengths must be positive");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw ValidationError("perturbation strengths must be strictly increasing");
  }

  const Matrix m0 = builder(0.0);
  if (m0.rows() != m0.cols() || m0.rows() == 0)
    throw ValidationError("perturbation builder must return a square matrix");
  const auto n = m0.rows();
  const double scale = std::max(1.0, std::abs(lambda0));
  const double accept =
      std::max(10.0 * matching_tolerance(m0),
               4.0 * scale * std::pow(kEps, 1.0 / static_cast<double>(n + 1)));

  // Base-point eigenvalue cluster around lambda0.
  const std::vector<Complex> base_raw = eigenvalues_raw(m0);
  std::vector<Complex> cluster;
  double d_other = std::numeric_limits<double>::infinity();
  for (const Complex& v : base_raw) {
    const double d = std::abs(v - lambda0);
    if (d <= accept)
      cluster.push_back(v);
    else
      d_other = std::min(d_other, d);
  }
  if (cluster.empty())
    throw ValidationError("lambda0 is not an eigenvalue of the base matrix");
  const std::size_t m0_count = cluster.size();
  const double half_sep = std::isfinite(d_other) ? 0.5 * d_other
                                                 : std::numeric_limits<double>::infinity();
  if (half_sep <= accept)
    throw NumericalError("eigenvalue branches too close to isolate around lambda0");

  // Intrinsic numerical splitting at eps = 0 sets the noise floor.
  double rho0 = 0.0;
  for (const Complex& v : cluster) rho0 = std::max(rho0, std::abs(v - lambda0));
  const double noise = std::max(4.0 * rho0, 1e3 * kEps * scale);

  ExceptionalResult out;
  out.lambda0 = lambda0;
  for (const double eps : grid) {
    const Matrix m = builder(eps);
    if (m.rows() != n || m.cols() != n)
      throw ValidationError("perturbation builder changed the matrix dimension");
    const std::vector<Complex> vals = eigenvalues_raw(m);
    std::size_t count = 0;
    double rho = 0.0;
    for (const Complex& v : vals) {
      if (std::abs(v - lambda0) <= half_sep) {
        ++count;
        rho = std::max(rho, std::abs(v - lambda0));
      }
    }
    if (count != m0_count)
      throw NumericalError("perturbation mixes eigenvalue branches at eps=" +
                           std::to_string(eps));
    if (rho <= noise) continue;  // below the measurement floor
    out.epsilons.push_back(eps);
    out.radii.push_back(rho);
  }
  if (out.epsilons.size() < 4)
    throw NumericalError("not enough usable perturbation samples above the noise floor");
  for (std::size_t i = 1; i < out.radii.size(); ++i)
    if (out.radii[i] < out.radii[i - 1] * (1.0 - 1e-6))
      throw NumericalError("splitting radius is not monotone in the perturbation strength");

  std::vector<double> lx, ly;
  lx.reserve(out.epsilons.size());
  ly.reserve(out.radii.size());
  for (std::size_t i = 0; i < out.epsilons.size(); ++i) {
    lx.push_back(std::log(out.epsilons[i]));
    ly.push_back(std::log(out.radii[i]));
  }
  const auto [slope, rms] = fit_line(lx, ly);
  if (slope <= 0) throw NumericalError("splitting radius does not grow with eps");
  out.exponent = slope;
  out.fit_residual = rms;
  out.m = static_cast<int>(std::max(1L, std::lround(1.0 / slope)));
  return out;
}

}  // namespace specres
