#pragma once

#include <map>
#include <string>
#include <vector>

#include "specres/jordan.hpp"
#include "specres/system.hpp"

namespace specres {

// How residue points get attached to interfaces.
//  - leave_one_out: a point is attributed to an interface if zeroing
//    that interface's coupling (or removing the interface-block stratum)
//    makes the point disappear from the global spectrum.  The default:
//    it answers the causal question directly.
//  - tau_support: a point is attributed if it matches the spectrum of
//    the interface operator (tau^dagger tau for couplings, the block
//    itself for interface-block strata).  Cheaper, but the two modes
//    genuinely disagree on systems where the coupling shifts eigenvalues
//    away from the interface operator's own spectrum.
enum class AttributionMode { leave_one_out, tau_support };

struct DefectEntry {
  std::string id;
  bool from_interface_block = false;
  GeometryKind geometric_class = GeometryKind::point;
  std::vector<Complex> points;  // attributed residue points
  bool classified = false;      // set by classify_defects
  int nilpotent_depth = 0;      // >= 1 when classified
  bool semisimple() const { return nilpotent_depth <= 1; }
};

struct DefectReport {
  AttributionMode mode = AttributionMode::leave_one_out;
  std::vector<DefectEntry> entries;       // one per interface entity, declaration order
  std::vector<Complex> uncovered;         // residue points no entity claims
  std::vector<Complex> multi_attributed;  // residue points claimed more than once
  SpectralSet residue;
  double tol = 0.0;
};

// The interface operator whose spectral/algebraic data characterizes an
// interface: tau^dagger tau (acting on the source stratum) for a
// coupling, the block itself for an interface-block stratum.
Matrix interface_operator(const StratifiedSystem& sys, const std::string& id);

// Attributes each residue point to interfaces under the given mode.
// Zero couplings (and zero interface blocks) attribute nothing: the
// zero coupling tensor carries no defect support, even though a zero
// block still contributes {0} to the global spectrum -- such points
// simply stay uncovered.  Uncovered points are data, not an error.
// Honors the SPECRES_THREADS environment variable for the per-interface
// leave-one-out recomputations (results are order-independent).
DefectReport attribute_residue(const StratifiedSystem& sys, AttributionMode mode,
                               const ResidueComputation* precomputed = nullptr);

// Fills geometric x algebraic classification on entries that carry
// attributed points, from the Jordan structure of each entity's
// interface operator.  Missing structure for such an entry is an error.
void classify_defects(DefectReport& report,
                      const std::map<std::string, jordan::EigenStructure>& structures);

struct LocalizedAnalysis {
  DefectReport report;
  // Jordan structure of the interface operator, for every entity that
  // received points (same ids as report entries).
  std::map<std::string, jordan::EigenStructure> structures;
};

// attribute_residue + interface-operator Jordan analysis + classify.
LocalizedAnalysis analyze_defects(const StratifiedSystem& sys, AttributionMode mode,
                                  const ResidueComputation* precomputed = nullptr);

}  // namespace specres
