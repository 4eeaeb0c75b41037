#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specres/system.hpp"

namespace specres {

// Coupling deformation schedule over t in [0, 1].  Each coupling's tau is
// multiplied by its rule evaluated at t: the coupling's own sweep_rule if
// declared, otherwise default_rule.  "linear" means t, "constant" means 1
// (the coupling does not deform); anything else is parsed as an
// expression in the variable s and evaluated at s = t.
struct SweepSchedule {
  std::vector<double> values;           // >= 2, strictly increasing, within [0, 1]
  std::string default_rule = "linear";
  // Clustering gap for the component count of the residue.  0 = resolve
  // automatically: the system's cluster_gap if set, otherwise a tenth of
  // the median nearest-neighbour spacing of the first multi-point
  // residue along the sweep (0.1 as a last resort).
  double beta0_gap = 0.0;

  static SweepSchedule uniform(int steps);  // 0, 1/steps, ..., 1
};

struct TrajectoryPoint {
  double t = 0.0;
  SpectralSet residue;
  // min distance between the residue and the local union; empty residue
  // (or empty local union) leaves it unset.
  std::optional<double> gap_to_local;
  int beta0 = 0;  // connected components of the residue at the resolved gap
  // Hausdorff distance to the previous step's residue; unset at the first
  // step and whenever either residue is empty.
  std::optional<double> hausdorff_increment;
  // Raw global eigenvalues, ordered so index k continues branch k of the
  // previous step (greedy nearest matching).
  std::vector<Complex> global_eigenvalues;
};

struct DeformationTrajectory {
  std::vector<TrajectoryPoint> points;
  double beta0_gap = 0.0;  // the gap actually used
  int branch_count = 0;
  std::vector<std::string> diagnostics;  // ambiguous branch continuations etc.
};

// The system at sweep parameter t: every coupling's tau multiplied by
// its rule (own sweep_rule, else default_rule) evaluated at t, strata
// blocks untouched, the base system's matching tolerance pinned so
// spectra at different t are comparable.
StratifiedSystem deformed_system(const StratifiedSystem& sys, double t,
                                 const std::string& default_rule = "linear");

// Sweeps the coupling strengths along the schedule.  Strata blocks stay
// fixed (including interface-block strata); only coupling tensors scale.
// Every step reuses the base system's matching tolerance so residues are
// comparable across t.  A step whose residue fails the partition check
// surfaces as NumericalError tagged with that t.
DeformationTrajectory run_sweep(const StratifiedSystem& sys, const SweepSchedule& schedule);

struct GapCheck {
  bool holds = true;  // every defined gap_to_local >= delta
  std::optional<double> first_violation_t;
  std::optional<double> min_gap;
};

GapCheck check_gap_condition(const DeformationTrajectory& traj, double delta);

struct Beta0Check {
  bool constant = true;  // over the points with nonempty residue
  int value = 0;         // beta0 at the first nonempty point
  std::vector<std::pair<double, int>> transitions;  // (t, new beta0) on change
};

Beta0Check track_beta0_constancy(const DeformationTrajectory& traj);

// Perturbation analysis around one eigenvalue.  builder(eps) returns the
// matrix at perturbation strength eps (builder(0) is the base point);
// the splitting radius rho(eps) = max distance from lambda0 to the
// eigenvalue branch cluster is fitted as rho ~ eps^(1/m) in log-log
// coordinates.  m >= 2 flags lambda0 as defective at the base point (an
// exceptional point of the family); analytic perturbations of a simple
// or semisimple eigenvalue come out as m = 1 even when rho scales like
// a higher power of eps.
struct ExceptionalResult {
  Complex lambda0;
  int m = 1;               // max(1, round(1 / fitted exponent))
  double exponent = 1.0;   // fitted d(log rho) / d(log eps)
  double fit_residual = 0.0;  // RMS log-space deviation from the fit line
  std::vector<double> epsilons;  // samples that survived the noise floor
  std::vector<double> radii;     // rho at those samples
};

ExceptionalResult detect_exceptional(const std::function<Matrix(double)>& builder,
                                     Complex lambda0, std::vector<double> grid = {});

}  // namespace specres
