#pragma once

#include <string>

#include "specres/deformation.hpp"
#include "specres/family.hpp"
#include "specres/localization.hpp"
#include "specres/system.hpp"

namespace specres {

std::string library_version();

// FNV-1a 64-bit digest of raw bytes, rendered as "fnv1a64:<16 hex>".
std::string input_digest(const std::string& bytes);

// Loads a stratified system from its JSON description (see README for
// the schema).  Schema violations surface as ValidationError with the
// offending JSON path; malformed JSON as ParseError.
StratifiedSystem load_system_json(const std::string& text);
StratifiedSystem load_system(const std::string& path);  // reads the file, then parses

// Serializes back to the schema; load_system_json(serialize_system(s))
// reproduces the system.
std::string serialize_system(const StratifiedSystem& sys);

// One command's complete output: a machine report, a human report, and
// (for sweep/family) a tabular payload.  status 0 = clean; status 2 =
// the report is valid but a declared condition failed (unattributed
// residue points for analyze, a violated gap threshold for sweep).
struct ReportBundle {
  std::string json;
  std::string text;
  std::string csv;
  int status = 0;
};

struct AnalyzeOptions {
  AttributionMode mode = AttributionMode::leave_one_out;
  double tol = 0.0;  // <= 0: the system's (possibly automatic) tolerance
};

// Residue + attribution + global Jordan structure, with partition,
// minimality/universality, and rigidity verdicts.
ReportBundle run_analyze(const StratifiedSystem& sys, const std::string& raw_input,
                         const AnalyzeOptions& opt);

struct SweepOptions {
  int steps = 10;                       // uniform schedule 0, 1/steps, ..., 1
  std::string rule = "linear";          // default rule for couplings without one
  double beta0_gap = 0.0;               // 0 = auto
  double delta = 0.0;                   // > 0: enforce gap_to_local >= delta
};

// Deformation sweep: per-step residue, gap, component count, Hausdorff
// increment, plus perturbation-order analysis around defective
// eigenvalues at the initial step.  CSV columns:
//   t,gap,beta0,hausdorff_increment,residue_points
// where residue_points is a semicolon-joined list of re:im pairs and
// undefined gaps/increments print as "undefined".
ReportBundle run_sweep_cmd(const StratifiedSystem& sys, const std::string& raw_input,
                           const SweepOptions& opt);

struct FamilyOptions {
  int samples = 201;  // grid points per axis
  int bins = 64;      // histogram bins
};

// Samples every line/surface interface family in the system: support
// intervals, value histogram, critical values/points (with saddle /
// extremum classification for surfaces), and coverage of the local
// spectra by the family bands.  CSV columns:
//   family,bin_left,bin_right,count
ReportBundle run_family_cmd(const StratifiedSystem& sys, const std::string& raw_input,
                            const FamilyOptions& opt);

}  // namespace specres
