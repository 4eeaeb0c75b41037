#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specres/spectral_set.hpp"
#include "specres/types.hpp"

namespace specres {

enum class GeometryKind { point, line, surface };

// Where a defect lives parameter-wise.  Point interfaces need nothing
// else; line/surface interfaces carry a sampling domain and a scalar
// family expression (in s, respectively x and y).
struct InterfaceGeometry {
  GeometryKind kind = GeometryKind::point;
  std::vector<std::pair<double, double>> domain;  // size 0 / 1 / 2
  std::string expr;                               // family expression text
};

struct Stratum {
  std::string id;
  Matrix block;  // square
  // When true this stratum is an effective interface representation: its
  // spectrum enters the global spectrum but is excluded from the local
  // union, so it shows up in the residue and can carry nontrivial Jordan
  // structure.
  bool interface_block = false;
  InterfaceGeometry geometry;  // meaningful when interface_block
};

struct InterfaceCoupling {
  std::string id;
  std::string source, target;  // stratum ids, source != target
  Matrix tau;                  // dim(target) x dim(source)
  // Mirror tau as its adjoint into the transposed block, producing the
  // familiar [[H1, tau], [tau*, H2]] layout from a single declaration.
  bool hermitian_completion = false;
  InterfaceGeometry geometry;
  std::string sweep_rule;  // "", "linear", "constant", or expression in s
};

struct Tolerances {
  double match_tol = 0.0;    // 0 = auto: 1e-8 * max(1, ||assembled||_F)
  double cluster_gap = 0.0;  // 0 = auto (resolved by the sweep driver)
};

class StratifiedSystem {
public:
  StratifiedSystem(std::vector<Stratum> strata, std::vector<InterfaceCoupling> interfaces,
                   Tolerances tol = {});

  const std::vector<Stratum>& strata() const { return strata_; }
  const std::vector<InterfaceCoupling>& interfaces() const { return interfaces_; }
  const Tolerances& tolerances() const { return tolerances_; }

  const Stratum& stratum(const std::string& id) const;
  int stratum_index(const std::string& id) const;  // -1 if absent
  int stratum_offset(const std::string& id) const; // block offset in the global matrix
  int dimension() const { return dimension_; }

  // Matching tolerance with "auto" resolved against the assembled norm.
  double match_tol() const { return resolved_match_tol_; }

private:
  void validate() const;

  std::vector<Stratum> strata_;
  std::vector<InterfaceCoupling> interfaces_;
  Tolerances tolerances_;
  std::vector<int> offsets_;
  int dimension_ = 0;
  double resolved_match_tol_ = 0.0;
};

// Block-diagonal strata plus coupling blocks (tau of interface s -> t at
// block row t, block column s; adjoint mirrored when the interface asks
// for Hermitian completion).
Matrix assemble_global(const StratifiedSystem& sys);

// Per-stratum spectra of the diagonal blocks, independent of couplings,
// in declaration order.  Interface-block strata are excluded here (their
// spectra are not "local"); interface_block_spectra lists them.
std::vector<std::pair<std::string, SpectralSet>> local_spectra(const StratifiedSystem& sys);
std::vector<std::pair<std::string, SpectralSet>> interface_block_spectra(
    const StratifiedSystem& sys);

// Everything the residue pipeline produces in one pass.
struct ResidueComputation {
  SpectralSet global;       // clustered, weights = algebraic multiplicities
  SpectralSet local_union;  // union over non-interface-block strata
  SpectralSet residue;      // global \ local_union at tol
  std::vector<std::pair<std::string, SpectralSet>> locals;
  std::vector<std::pair<std::string, SpectralSet>> interface_blocks;
  PartitionCheck partition;                // holds on success by construction
  std::vector<Complex> boundary_ambiguous; // residue points within [tol, 10 tol] of the local union
  double tol = 0.0;
};

ResidueComputation compute_residue(const StratifiedSystem& sys);

// The headline operation: spectral content of the coupled system not
// explained by the decoupled strata.  Throws NumericalError if the
// partition identity fails to verify at the matching tolerance (a
// tolerance pathology, e.g. residue points merging across the local
// spectrum) rather than returning an untrustworthy set.
SpectralSet interaction_residue(const StratifiedSystem& sys);

// Splits one stratum into two at the given index.  The block must be
// block-diagonal there (cross blocks zero within the matching tolerance)
// and incident couplings are partitioned row-/column-wise, so the
// assembled global matrix is unchanged entry for entry.  New ids get
// ".1"/".2" suffixes.
StratifiedSystem refine_stratum(const StratifiedSystem& sys, const std::string& id,
                                int split_index);

// Multiplies every block and coupling by c != 0 (spectra and residue
// scale covariantly).  Explicit tolerances scale by |c|; automatic ones
// stay automatic.  With a non-real c, Hermitian-completion declarations
// are first materialized into explicit reverse couplings so the
// assembled matrix is exactly c times the original.
StratifiedSystem scale_system(const StratifiedSystem& sys, Complex c);

}  // namespace specres
