#include "specres/localization.hpp"

#include <algorithm>
#include <cstdlib>
#include <future>
#include <limits>
#include <utility>

#include "specres/linalg.hpp"

namespace specres {
namespace {

struct Entity {
  std::string id;
  bool from_block = false;
  GeometryKind kind = GeometryKind::point;
  bool zero = false;  // zero coupling tensor / zero block: attributes nothing
};

std::vector<Entity> list_entities(const StratifiedSystem& sys) {
  std::vector<Entity> out;
  for (const auto& c : sys.interfaces())
    out.push_back({c.id, false, c.geometry.kind, frobenius_norm(c.tau) == 0.0});
  for (const auto& s : sys.strata())
    if (s.interface_block)
      out.push_back({s.id, true, s.geometry.kind, frobenius_norm(s.block) == 0.0});
  return out;
}

double distance_to_points(const std::vector<Complex>& pts, Complex z) {
  double best = std::numeric_limits<double>::infinity();
  for (const Complex& p : pts) best = std::min(best, std::abs(z - p));
  return best;
}

// Global spectrum with one interface entity suppressed: couplings get a
// zeroed tau, interface-block strata are removed outright together with
// couplings touching them.
std::vector<Complex> spectrum_without(const StratifiedSystem& sys, const Entity& ent) {
  std::vector<Stratum> strata = sys.strata();
  std::vector<InterfaceCoupling> couplings = sys.interfaces();
  if (ent.from_block) {
    std::erase_if(couplings, [&](const InterfaceCoupling& c) {
      return c.source == ent.id || c.target == ent.id;
    });
    std::erase_if(strata, [&](const Stratum& s) { return s.id == ent.id; });
    if (strata.empty()) return {};  // nothing left: empty spectrum
  } else {
    for (auto& c : couplings)
      if (c.id == ent.id) c.tau.setZero();
  }
  Tolerances tol = sys.tolerances();
  tol.match_tol = sys.match_tol();  // pin the original scale for comparability
  StratifiedSystem modified(std::move(strata), std::move(couplings), tol);
  return eigenvalues_raw(assemble_global(modified));
}

int requested_threads() {
  const char* env = std::getenv("SPECRES_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n > 1 ? n : 1;
}

}  // namespace

Matrix interface_operator(const StratifiedSystem& sys, const std::string& id) {
  for (const auto& c : sys.interfaces())
    if (c.id == id) return c.tau.adjoint() * c.tau;
  const int idx = sys.stratum_index(id);
  if (idx >= 0 && sys.strata()[static_cast<std::size_t>(idx)].interface_block)
    return sys.strata()[static_cast<std::size_t>(idx)].block;
  throw ValidationError("no interface entity with id '" + id + "'");
}

DefectReport attribute_residue(const StratifiedSystem& sys, AttributionMode mode,
                               const ResidueComputation* precomputed) {
  ResidueComputation owned;
  const ResidueComputation* rc = precomputed;
  if (rc == nullptr) {
    owned = compute_residue(sys);
    rc = &owned;
  }

  DefectReport report;
  report.mode = mode;
  report.tol = rc->tol;
  report.residue = rc->residue;

  const std::vector<Entity> entities = list_entities(sys);
  report.entries.reserve(entities.size());
  for (const auto& ent : entities) {
    DefectEntry e;
    e.id = ent.id;
    e.from_interface_block = ent.from_block;
    e.geometric_class = ent.kind;
    report.entries.push_back(std::move(e));
  }

  const std::vector<Complex>& pts = rc->residue.points();
  if (pts.empty()) return report;

  // claimed[i] = indices into pts this entity accounts for
  std::vector<std::vector<std::size_t>> claimed(entities.size());
  if (mode == AttributionMode::leave_one_out) {
    auto solve_one = [&](std::size_t i) -> std::vector<std::size_t> {
      if (entities[i].zero) return {};
      const std::vector<Complex> spec = spectrum_without(sys, entities[i]);
      std::vector<std::size_t> mine;
      for (std::size_t k = 0; k < pts.size(); ++k)
        if (distance_to_points(spec, pts[k]) > rc->tol) mine.push_back(k);
      return mine;
    };
    if (requested_threads() > 1 && entities.size() > 1) {
      std::vector<std::future<std::vector<std::size_t>>> jobs;
      jobs.reserve(entities.size());
      for (std::size_t i = 0; i < entities.size(); ++i)
        jobs.push_back(std::async(std::launch::async, solve_one, i));
      for (std::size_t i = 0; i < entities.size(); ++i) claimed[i] = jobs[i].get();
    } else {
      for (std::size_t i = 0; i < entities.size(); ++i) claimed[i] = solve_one(i);
    }
  } else {
    for (std::size_t i = 0; i < entities.size(); ++i) {
      if (entities[i].zero) continue;
      const std::vector<Complex> spec =
          eigenvalues_raw(interface_operator(sys, entities[i].id));
      for (std::size_t k = 0; k < pts.size(); ++k)
        if (distance_to_points(spec, pts[k]) <= rc->tol) claimed[i].push_back(k);
    }
  }

  std::vector<int> owners(pts.size(), 0);
  for (std::size_t i = 0; i < entities.size(); ++i) {
    for (const std::size_t k : claimed[i]) {
      owners[k] += 1;
      report.entries[i].points.push_back(pts[k]);
    }
  }
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (owners[k] == 0) report.uncovered.push_back(pts[k]);
    if (owners[k] >= 2) report.multi_attributed.push_back(pts[k]);
  }
  return report;
}

void classify_defects(DefectReport& report,
                      const std::map<std::string, jordan::EigenStructure>& structures) {
  for (auto& e : report.entries) {
    if (e.points.empty()) continue;
    const auto it = structures.find(e.id);
    if (it == structures.end())
      throw NumericalError("missing eigenvalue structure for interface '" + e.id + "'");
    int depth = 1;
    for (const auto& ev : it->second.eigenvalues) depth = std::max(depth, ev.depth);
    e.nilpotent_depth = depth;
    e.classified = true;
  }
}

LocalizedAnalysis analyze_defects(const StratifiedSystem& sys, AttributionMode mode,
                                  const ResidueComputation* precomputed) {
  LocalizedAnalysis out;
  out.report = attribute_residue(sys, mode, precomputed);
  for (const auto& e : out.report.entries) {
    if (e.points.empty()) continue;
    out.structures.emplace(e.id, jordan::eigen_structure(interface_operator(sys, e.id)));
  }
  classify_defects(out.report, out.structures);
  return out;
}

}  // namespace specres
