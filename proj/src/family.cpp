#include "specres/family.hpp"

#include <algorithm>
#include <cmath>

namespace specres::family {

Domain Domain::interval(double a, double b, const std::string& var) {
  Domain d;
  d.dims = 1;
  d.lo[0] = a;
  d.hi[0] = b;
  d.vars[0] = var;
  return d;
}

Domain Domain::rectangle(double ax, double bx, double ay, double by) {
  Domain d;
  d.dims = 2;
  d.lo = {ax, ay};
  d.hi = {bx, by};
  d.vars = {"x", "y"};
  return d;
}

namespace {

void validate_domain(const Domain& d) {
  if (d.dims != 1 && d.dims != 2)
    throw ValidationError("family domain: dims must be 1 or 2");
  for (int k = 0; k < d.dims; ++k) {
    if (!std::isfinite(d.lo[k]) || !std::isfinite(d.hi[k]) || !(d.lo[k] < d.hi[k]))
      throw ValidationError("family domain: need finite lo < hi on each axis");
    if (d.vars[k].empty())
      throw ValidationError("family domain: missing variable name");
  }
}

}  // namespace

FamilyResult sample_family(const Expression& expr, const Domain& domain, int n,
                           int bins) {
  validate_domain(domain);
  if (n < 2) throw ValidationError("sample_family: need n >= 2 samples per axis");
  if (bins < 1) throw ValidationError("sample_family: need bins >= 1");
  {
    std::set<std::string> allowed;
    for (int k = 0; k < domain.dims; ++k) allowed.insert(domain.vars[k]);
    for (const std::string& v : expr.variables())
      if (!allowed.count(v))
        throw ValidationError("sample_family: expression uses variable '" + v +
                              "' outside the domain");
  }

  FamilyResult r;
  r.expr = expr;
  r.domain = domain;
  r.samples_per_axis = n;

  auto axis_value = [&](int k, int i) {
    return domain.lo[k] + (domain.hi[k] - domain.lo[k]) * i / double(n - 1);
  };

  std::map<std::string, double> env;
  if (domain.dims == 1) {
    r.values.resize(n);
    for (int i = 0; i < n; ++i) {
      env[domain.vars[0]] = axis_value(0, i);
      r.values[i] = evaluate(expr, env);
    }
  } else {
    r.values.resize(static_cast<std::size_t>(n) * n);
    for (int iy = 0; iy < n; ++iy) {
      env[domain.vars[1]] = axis_value(1, iy);
      for (int ix = 0; ix < n; ++ix) {
        env[domain.vars[0]] = axis_value(0, ix);
        r.values[static_cast<std::size_t>(iy) * n + ix] = evaluate(expr, env);
      }
    }
  }

  r.vmin = *std::min_element(r.values.begin(), r.values.end());
  r.vmax = *std::max_element(r.values.begin(), r.values.end());
  const double range = r.vmax - r.vmin;

  // Support intervals: single-linkage on the sampled values with a gap
  // proportional to the per-axis resolution.
  {
    std::vector<double> sorted(r.values);
    std::sort(sorted.begin(), sorted.end());
    const double gap = 4.0 * range / double(n);
    double lo = sorted.front(), hi = sorted.front();
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i] - hi <= gap) {
        hi = sorted[i];
      } else {
        r.support_intervals.emplace_back(lo, hi);
        lo = hi = sorted[i];
      }
    }
    r.support_intervals.emplace_back(lo, hi);
  }

  // Histogram over [vmin, vmax].
  r.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b)
    r.bin_edges[b] = r.vmin + (range * b) / bins;
  r.bin_counts.assign(bins, 0);
  for (double v : r.values) {
    int b = range > 0.0 ? static_cast<int>((v - r.vmin) / range * bins) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++r.bin_counts[b];
  }

  // Near-critical interior grid points (centered differences).  The
  // threshold is strict, so a constant family reports none.
  const double threshold = range * 1e-3;
  if (domain.dims == 1 && n >= 3) {
    const double h = (domain.hi[0] - domain.lo[0]) / double(n - 1);
    for (int i = 1; i + 1 < n; ++i) {
      const double g = (r.values[i + 1] - r.values[i - 1]) / (2.0 * h);
      if (std::abs(g) < threshold) {
        CriticalPoint cp;
        cp.param[0] = axis_value(0, i);
        cp.index[0] = i;
        cp.value = r.values[i];
        cp.gradient_norm = std::abs(g);
        cp.near_boundary = (i < 2 || i + 2 >= n);
        r.critical_points.push_back(cp);
      }
    }
  } else if (domain.dims == 2 && n >= 3) {
    const double hx = (domain.hi[0] - domain.lo[0]) / double(n - 1);
    const double hy = (domain.hi[1] - domain.lo[1]) / double(n - 1);
    auto at = [&](int ix, int iy) {
      return r.values[static_cast<std::size_t>(iy) * n + ix];
    };
    for (int iy = 1; iy + 1 < n; ++iy) {
      for (int ix = 1; ix + 1 < n; ++ix) {
        const double gx = (at(ix + 1, iy) - at(ix - 1, iy)) / (2.0 * hx);
        const double gy = (at(ix, iy + 1) - at(ix, iy - 1)) / (2.0 * hy);
        const double g = std::hypot(gx, gy);
        if (g < threshold) {
          CriticalPoint cp;
          cp.param = {axis_value(0, ix), axis_value(1, iy)};
          cp.index = {ix, iy};
          cp.value = at(ix, iy);
          cp.gradient_norm = g;
          cp.near_boundary = (ix < 2 || iy < 2 || ix + 2 >= n || iy + 2 >= n);
          r.critical_points.push_back(cp);
        }
      }
    }
  }

  // Dedupe critical values at the threshold scale.
  {
    std::vector<double> vals;
    for (const auto& cp : r.critical_points) vals.push_back(cp.value);
    std::sort(vals.begin(), vals.end());
    const double merge = std::max(range * 1e-3, 0.0);
    for (double v : vals)
      if (r.critical_values.empty() || v - r.critical_values.back() > merge)
        r.critical_values.push_back(v);
  }

  return r;
}

std::vector<VanHoveFlag> detect_van_hove(const FamilyResult& result) {
  std::vector<VanHoveFlag> flags;
  if (result.domain.dims != 2) return flags;
  const int n = result.samples_per_axis;
  const double hx = (result.domain.hi[0] - result.domain.lo[0]) / double(n - 1);
  const double hy = (result.domain.hi[1] - result.domain.lo[1]) / double(n - 1);
  auto at = [&](int ix, int iy) {
    return result.values[static_cast<std::size_t>(iy) * n + ix];
  };

  // Median bin count, for the density-enhancement ratio.
  std::vector<long> counts(result.bin_counts);
  std::sort(counts.begin(), counts.end());
  const double median =
      counts.empty() ? 0.0
                     : (counts.size() % 2 ? double(counts[counts.size() / 2])
                                          : 0.5 * double(counts[counts.size() / 2 - 1] +
                                                         counts[counts.size() / 2]));

  for (const auto& cp : result.critical_points) {
    const int ix = cp.index[0], iy = cp.index[1];
    if (ix < 1 || iy < 1 || ix + 1 >= n || iy + 1 >= n) continue;
    const double fxx = (at(ix + 1, iy) - 2.0 * at(ix, iy) + at(ix - 1, iy)) / (hx * hx);
    const double fyy = (at(ix, iy + 1) - 2.0 * at(ix, iy) + at(ix, iy - 1)) / (hy * hy);
    const double fxy = (at(ix + 1, iy + 1) - at(ix + 1, iy - 1) - at(ix - 1, iy + 1) +
                        at(ix - 1, iy - 1)) /
                       (4.0 * hx * hy);
    const double det = fxx * fyy - fxy * fxy;
    const double scale = std::max({std::abs(fxx), std::abs(fyy), std::abs(fxy)});

    VanHoveFlag f;
    f.value = cp.value;
    f.param = cp.param;
    f.reliable = !cp.near_boundary;
    if (scale == 0.0 || std::abs(det) < 1e-6 * scale * scale) {
      f.kind = VanHoveKind::degenerate;
    } else if (det < 0.0) {
      f.kind = VanHoveKind::saddle;
    } else {
      f.kind = fxx > 0.0 ? VanHoveKind::minimum : VanHoveKind::maximum;
    }

    if (median > 0.0 && !result.bin_counts.empty()) {
      const double range = result.vmax - result.vmin;
      const int bins = static_cast<int>(result.bin_counts.size());
      int b = range > 0.0
                  ? static_cast<int>((cp.value - result.vmin) / range * bins)
                  : 0;
      b = std::clamp(b, 0, bins - 1);
      f.enhancement = double(result.bin_counts[b]) / median;
    }
    flags.push_back(f);
  }
  return flags;
}

FamilyResidue family_residue(const FamilyResult& result, const SpectralSet& local,
                             double tol) {
  if (!(tol >= 0.0) || !std::isfinite(tol))
    throw ValidationError("family_residue: tol must be finite and >= 0");
  FamilyResidue out;
  out.intervals = result.support_intervals;
  // Grid resolution bounds how precisely the interval endpoints are
  // known; coverage has to be judged at that scale, not at the matrix
  // matching tolerance.
  const double range = result.vmax - result.vmin;
  out.slack = std::max(tol, 4.0 * range / double(result.samples_per_axis));

  for (const Complex& p : local.points()) {
    int hit = -1;
    for (std::size_t k = 0; k < out.intervals.size(); ++k) {
      const auto& [lo, hi] = out.intervals[k];
      const double horiz = std::max({0.0, lo - p.real(), p.real() - hi});
      if (std::max(horiz, std::abs(p.imag())) <= out.slack) {
        hit = static_cast<int>(k);
        break;
      }
    }
    if (hit >= 0)
      out.covered.push_back({p, hit});
    else
      out.isolated_locals.push_back(p);
  }
  return out;
}

}  // namespace specres::family
