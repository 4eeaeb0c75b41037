#include "specres/system.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "specres/linalg.hpp"

namespace specres {

StratifiedSystem::StratifiedSystem(std::vector<Stratum> strata,
                                   std::vector<InterfaceCoupling> interfaces,
                                   Tolerances tol)
    : strata_(std::move(strata)), interfaces_(std::move(interfaces)),
      tolerances_(tol) {
  validate();
  offsets_.resize(strata_.size());
  int off = 0;
  for (std::size_t i = 0; i < strata_.size(); ++i) {
    offsets_[i] = off;
    off += static_cast<int>(strata_[i].block.rows());
  }
  dimension_ = off;
  resolved_match_tol_ = tolerances_.match_tol > 0.0
                            ? tolerances_.match_tol
                            : linalg::matching_tolerance(assemble_global(*this));
}

void StratifiedSystem::validate() const {
  if (strata_.empty()) throw ValidationError("system: no strata");
  std::set<std::string> ids;
  int total = 0;
  for (std::size_t i = 0; i < strata_.size(); ++i) {
    const Stratum& s = strata_[i];
    const std::string where = "strata[" + std::to_string(i) + "]";
    if (s.id.empty()) throw ValidationError(where + ": empty id");
    if (!ids.insert(s.id).second)
      throw ValidationError(where + ": duplicate id '" + s.id + "'");
    if (s.block.rows() == 0 || s.block.rows() != s.block.cols())
      throw ValidationError(where + " ('" + s.id + "'): block must be square and nonempty");
    if (!s.block.allFinite())
      throw ValidationError(where + " ('" + s.id + "'): non-finite block entry");
    total += static_cast<int>(s.block.rows());
  }
  if (total > linalg::kEigenDimensionCap)
    throw ValidationError("system: total dimension " + std::to_string(total) +
                          " exceeds cap " + std::to_string(linalg::kEigenDimensionCap));

  std::set<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < interfaces_.size(); ++i) {
    const InterfaceCoupling& c = interfaces_[i];
    const std::string where = "interfaces[" + std::to_string(i) + "]";
    if (c.id.empty()) throw ValidationError(where + ": empty id");
    if (!ids.insert(c.id).second)
      throw ValidationError(where + ": id '" + c.id + "' already used");
    const Stratum* src = nullptr;
    const Stratum* dst = nullptr;
    for (const Stratum& s : strata_) {
      if (s.id == c.source) src = &s;
      if (s.id == c.target) dst = &s;
    }
    if (!src) throw ValidationError(where + ": unknown source '" + c.source + "'");
    if (!dst) throw ValidationError(where + ": unknown target '" + c.target + "'");
    if (c.source == c.target)
      throw ValidationError(where + ": source and target must differ");
    if (!pairs.insert({c.source, c.target}).second)
      throw ValidationError(where + ": second coupling for ordered pair (" + c.source +
                            ", " + c.target + ")");
    if (c.tau.rows() != dst->block.rows() || c.tau.cols() != src->block.rows())
      throw ValidationError(where + ": tau is " + std::to_string(c.tau.rows()) + "x" +
                            std::to_string(c.tau.cols()) + ", expected " +
                            std::to_string(dst->block.rows()) + "x" +
                            std::to_string(src->block.rows()));
    if (!c.tau.allFinite())
      throw ValidationError(where + ": non-finite tau entry");
    if (c.geometry.kind == GeometryKind::line && c.geometry.domain.size() != 1)
      throw ValidationError(where + ": line geometry needs a 1-D domain");
    if (c.geometry.kind == GeometryKind::surface && c.geometry.domain.size() != 2)
      throw ValidationError(where + ": surface geometry needs a 2-D domain");
    for (auto [lo, hi] : c.geometry.domain)
      if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
        throw ValidationError(where + ": domain bounds must satisfy lo < hi");
  }
  for (const InterfaceCoupling& c : interfaces_) {
    if (c.hermitian_completion && pairs.count({c.target, c.source}))
      throw ValidationError("interface '" + c.id +
                            "': hermitian completion would collide with the explicit (" +
                            c.target + ", " + c.source + ") coupling");
  }
  if (tolerances_.match_tol < 0.0 || !std::isfinite(tolerances_.match_tol))
    throw ValidationError("tolerances: match_tol must be finite and >= 0");
  if (tolerances_.cluster_gap < 0.0 || !std::isfinite(tolerances_.cluster_gap))
    throw ValidationError("tolerances: cluster_gap must be finite and >= 0");
}

const Stratum& StratifiedSystem::stratum(const std::string& id) const {
  const int i = stratum_index(id);
  if (i < 0) throw ValidationError("unknown stratum '" + id + "'");
  return strata_[i];
}

int StratifiedSystem::stratum_index(const std::string& id) const {
  for (std::size_t i = 0; i < strata_.size(); ++i)
    if (strata_[i].id == id) return static_cast<int>(i);
  return -1;
}

int StratifiedSystem::stratum_offset(const std::string& id) const {
  const int i = stratum_index(id);
  if (i < 0) throw ValidationError("unknown stratum '" + id + "'");
  return offsets_[i];
}

Matrix assemble_global(const StratifiedSystem& sys) {
  Matrix g = Matrix::Zero(sys.dimension(), sys.dimension());
  for (const Stratum& s : sys.strata()) {
    const int off = sys.stratum_offset(s.id);
    g.block(off, off, s.block.rows(), s.block.cols()) = s.block;
  }
  for (const InterfaceCoupling& c : sys.interfaces()) {
    const int ro = sys.stratum_offset(c.target);
    const int co = sys.stratum_offset(c.source);
    g.block(ro, co, c.tau.rows(), c.tau.cols()) = c.tau;
    if (c.hermitian_completion)
      g.block(co, ro, c.tau.cols(), c.tau.rows()) = c.tau.adjoint();
  }
  return g;
}

namespace {

SpectralSet spectrum_of(const Matrix& m, double tol) {
  const auto eig = linalg::eigenvalues(m, tol);
  std::vector<Complex> pts;
  std::vector<int> wts;
  for (const auto& g : eig.values) {
    pts.push_back(g.value);
    wts.push_back(g.multiplicity);
  }
  return SpectralSet(std::move(pts), std::move(wts), tol);
}

}  // namespace

std::vector<std::pair<std::string, SpectralSet>> local_spectra(const StratifiedSystem& sys) {
  std::vector<std::pair<std::string, SpectralSet>> out;
  for (const Stratum& s : sys.strata())
    if (!s.interface_block)
      out.emplace_back(s.id, spectrum_of(s.block, sys.match_tol()));
  return out;
}

std::vector<std::pair<std::string, SpectralSet>> interface_block_spectra(
    const StratifiedSystem& sys) {
  std::vector<std::pair<std::string, SpectralSet>> out;
  for (const Stratum& s : sys.strata())
    if (s.interface_block)
      out.emplace_back(s.id, spectrum_of(s.block, sys.match_tol()));
  return out;
}

ResidueComputation compute_residue(const StratifiedSystem& sys) {
  ResidueComputation rc;
  rc.tol = sys.match_tol();
  rc.global = spectrum_of(assemble_global(sys), rc.tol);
  rc.locals = local_spectra(sys);
  rc.interface_blocks = interface_block_spectra(sys);

  std::vector<Complex> pts;
  std::vector<int> wts;
  for (const auto& [id, set] : rc.locals) {
    pts.insert(pts.end(), set.points().begin(), set.points().end());
    wts.insert(wts.end(), set.weights().begin(), set.weights().end());
  }
  rc.local_union = SpectralSet(std::move(pts), std::move(wts), rc.tol);

  rc.residue = set_difference(rc.global, rc.local_union, rc.tol);
  rc.partition = verify_partition(rc.global, rc.local_union, rc.residue, rc.tol);
  if (!rc.partition.holds) {
    const Complex w = rc.partition.witness.value_or(Complex(0, 0));
    throw NumericalError(
        "interaction residue: partition identity failed to verify at tol=" +
        std::to_string(rc.tol) + " (witness " + std::to_string(w.real()) + "+" +
        std::to_string(w.imag()) + "i); tolerance pathology");
  }
  for (const Complex& p : rc.residue.points()) {
    const double d = rc.local_union.distance_to(p);
    if (d >= rc.tol && d <= 10.0 * rc.tol) rc.boundary_ambiguous.push_back(p);
  }
  return rc;
}

SpectralSet interaction_residue(const StratifiedSystem& sys) {
  return compute_residue(sys).residue;
}

StratifiedSystem refine_stratum(const StratifiedSystem& sys, const std::string& id,
                                int split_index) {
  const Stratum& s = sys.stratum(id);
  const int dim = static_cast<int>(s.block.rows());
  if (split_index <= 0 || split_index >= dim)
    throw ValidationError("refine_stratum: split index " + std::to_string(split_index) +
                          " out of range for dimension " + std::to_string(dim));
  const int k = split_index;
  const double ztol = sys.match_tol();
  const double cross = std::max(s.block.block(0, k, k, dim - k).cwiseAbs().maxCoeff(),
                                s.block.block(k, 0, dim - k, k).cwiseAbs().maxCoeff());
  if (cross > ztol)
    throw ValidationError("refine_stratum: stratum '" + id +
                          "' is not block-diagonal at index " + std::to_string(k) +
                          " (cross-block magnitude " + std::to_string(cross) + ")");

  const std::string id1 = id + ".1", id2 = id + ".2";
  for (const Stratum& other : sys.strata())
    if (other.id == id1 || other.id == id2)
      throw ValidationError("refine_stratum: derived id '" + other.id + "' already exists");

  std::vector<Stratum> strata;
  for (const Stratum& other : sys.strata()) {
    if (other.id != id) {
      strata.push_back(other);
      continue;
    }
    Stratum a = other, b = other;
    a.id = id1;
    a.block = other.block.block(0, 0, k, k).eval();
    b.id = id2;
    b.block = other.block.block(k, k, dim - k, dim - k).eval();
    strata.push_back(a);
    strata.push_back(b);
  }

  std::vector<InterfaceCoupling> interfaces;
  for (const InterfaceCoupling& c : sys.interfaces()) {
    if (c.source != id && c.target != id) {
      interfaces.push_back(c);
      continue;
    }
    // A coupling touching the split stratum becomes two couplings, one
    // per half, taking the matching rows (target side) or columns
    // (source side) of tau.  Zero halves are kept: assembly is unchanged
    // entry for entry either way, and dropping them would silently
    // change the interface list.
    InterfaceCoupling c1 = c, c2 = c;
    c1.id = c.id + ".1";
    c2.id = c.id + ".2";
    if (c.target == id) {
      c1.target = id1;
      c2.target = id2;
      c1.tau = c.tau.topRows(k).eval();
      c2.tau = c.tau.bottomRows(c.tau.rows() - k).eval();
    } else {
      c1.source = id1;
      c2.source = id2;
      c1.tau = c.tau.leftCols(k).eval();
      c2.tau = c.tau.rightCols(c.tau.cols() - k).eval();
    }
    interfaces.push_back(c1);
    interfaces.push_back(c2);
  }
  return StratifiedSystem(std::move(strata), std::move(interfaces), sys.tolerances());
}

StratifiedSystem scale_system(const StratifiedSystem& sys, Complex c) {
  if (c == Complex(0.0, 0.0))
    throw ValidationError("scale_system: zero scale factor");
  const bool real_scale = c.imag() == 0.0;

  std::vector<Stratum> strata = sys.strata();
  for (Stratum& s : strata) s.block *= c;

  std::vector<InterfaceCoupling> interfaces;
  for (const InterfaceCoupling& ic : sys.interfaces()) {
    InterfaceCoupling scaled = ic;
    if (ic.hermitian_completion && !real_scale) {
      // (c tau)^adjoint is conj(c) tau^adjoint, which is no longer c
      // times the mirrored block; materialize the mirror explicitly so
      // the assembled matrix is exactly c times the original.
      scaled.hermitian_completion = false;
      InterfaceCoupling mirror;
      mirror.id = ic.id + ".h";
      mirror.source = ic.target;
      mirror.target = ic.source;
      mirror.tau = (ic.tau.adjoint() * c).eval();
      mirror.geometry = ic.geometry;
      mirror.sweep_rule = ic.sweep_rule;
      scaled.tau = (ic.tau * c).eval();
      interfaces.push_back(scaled);
      interfaces.push_back(mirror);
      continue;
    }
    scaled.tau = (ic.tau * c).eval();
    interfaces.push_back(scaled);
  }

  Tolerances tol = sys.tolerances();
  if (tol.match_tol > 0.0) tol.match_tol *= std::abs(c);
  if (tol.cluster_gap > 0.0) tol.cluster_gap *= std::abs(c);
  return StratifiedSystem(std::move(strata), std::move(interfaces), tol);
}

}  // namespace specres
