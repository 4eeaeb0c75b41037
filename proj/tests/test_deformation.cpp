#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "specres/deformation.hpp"
#include "specres/io.hpp"
#include "specres/system.hpp"
#include "test_util.hpp"

using namespace specres;
using testutil::fixture_path;
using testutil::greedy_match;

namespace {

Matrix defective_pair(double e) {
  Matrix m(2, 2);
  m << Complex(0.7), Complex(1.0), Complex(e), Complex(0.7);
  return m;
}

}  // namespace

TEST_CASE("deforming scales couplings by their rules and leaves strata alone") {
  const StratifiedSystem sys = load_system(fixture_path("jordan_perturb.json"));
  const StratifiedSystem def = deformed_system(sys, 0.5);

  REQUIRE(def.interfaces().size() == 2);
  CHECK(def.interfaces()[0].id == "up");
  CHECK(def.interfaces()[0].tau(0, 0) == Complex(1.0));  // "constant" does not deform
  CHECK(def.interfaces()[1].id == "down");
  CHECK(def.interfaces()[1].tau(0, 0) == Complex(0.5));  // "linear" scales by t

  CHECK((def.stratum("X").block - sys.stratum("X").block).norm() == 0.0);
  CHECK((def.stratum("Y").block - sys.stratum("Y").block).norm() == 0.0);
  CHECK(def.match_tol() == sys.match_tol());  // pinned for cross-t comparability
  CHECK(def.match_tol() > 0.0);

  // Couplings without their own rule follow the default rule.
  const StratifiedSystem pair = load_system(fixture_path("coupled_diagonal_pair.json"));
  const StratifiedSystem quad = deformed_system(pair, 0.5, "s^2");
  CHECK((quad.interfaces()[0].tau - 0.25 * pair.interfaces()[0].tau).norm() == 0.0);

  CHECK_THROWS_AS(deformed_system(pair, std::nan("")), ValidationError);
}

TEST_CASE("bad sweep rules are rejected with the offending interface named") {
  const StratifiedSystem pair = load_system(fixture_path("coupled_diagonal_pair.json"));
  CHECK_THROWS_WITH_AS(deformed_system(pair, 0.5, "x+1"),
                       doctest::Contains("uses variable 'x'"), ValidationError);
  CHECK_THROWS_WITH_AS(deformed_system(pair, 0.5, "2*(s"),
                       doctest::Contains("does not parse"), ValidationError);
  CHECK_THROWS_WITH_AS(deformed_system(pair, 0.0, "1/s"),
                       doctest::Contains("failed at t="), ValidationError);

  // run_sweep checks every rule before doing any eigenvalue work.
  SweepSchedule bad = SweepSchedule::uniform(2);
  bad.default_rule = "2*(s";
  CHECK_THROWS_WITH_AS(run_sweep(pair, bad), doctest::Contains("does not parse"),
                       ValidationError);
}

TEST_CASE("schedule construction and validation") {
  const SweepSchedule s4 = SweepSchedule::uniform(4);
  const std::vector<double> expected = {0.0, 0.25, 0.5, 0.75, 1.0};
  CHECK(s4.values == expected);
  CHECK(SweepSchedule::uniform(1).values.size() == 2);
  CHECK_THROWS_AS(SweepSchedule::uniform(0), ValidationError);
  CHECK_THROWS_AS(SweepSchedule::uniform(-3), ValidationError);

  const StratifiedSystem pair = load_system(fixture_path("coupled_diagonal_pair.json"));
  auto with_values = [](std::vector<double> v) {
    SweepSchedule s;
    s.values = std::move(v);
    return s;
  };
  CHECK_THROWS_AS(run_sweep(pair, with_values({0.5})), ValidationError);
  CHECK_THROWS_AS(run_sweep(pair, with_values({0.0, 0.5, 0.4})), ValidationError);
  CHECK_THROWS_AS(run_sweep(pair, with_values({0.0, 0.5, 0.5})), ValidationError);
  CHECK_THROWS_AS(run_sweep(pair, with_values({-0.1, 0.5})), ValidationError);
  CHECK_THROWS_AS(run_sweep(pair, with_values({0.0, 1.5})), ValidationError);
  CHECK_THROWS_AS(run_sweep(pair, with_values({0.0, std::nan("")})), ValidationError);

  SweepSchedule neg = SweepSchedule::uniform(2);
  neg.beta0_gap = -1.0;
  CHECK_THROWS_AS(run_sweep(pair, neg), ValidationError);
  neg.beta0_gap = std::nan("");
  CHECK_THROWS_AS(run_sweep(pair, neg), ValidationError);
}

TEST_CASE("a linear sweep of the coupled pair traces the closed-form gap") {
  const StratifiedSystem sys = load_system(fixture_path("coupled_diagonal_pair.json"));
  const DeformationTrajectory traj = run_sweep(sys, SweepSchedule::uniform(10));

  REQUIRE(traj.points.size() == 11);
  CHECK(traj.branch_count == 4);
  CHECK(traj.diagnostics.empty());
  // Auto gap: a tenth of the median nearest-neighbour spacing at t = 0.1.
  CHECK(traj.beta0_gap == doctest::Approx(0.1 * std::sqrt(1.01)).epsilon(1e-9));

  const TrajectoryPoint& start = traj.points[0];
  CHECK(start.residue.empty());
  CHECK_FALSE(start.gap_to_local.has_value());
  CHECK_FALSE(start.hausdorff_increment.has_value());
  CHECK(start.beta0 == 0);
  const std::vector<Complex> base = {Complex(1), Complex(2), Complex(4), Complex(5)};
  REQUIRE(start.global_eigenvalues.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(std::abs(start.global_eigenvalues[i] - base[i]) <= 1e-12);

  double prev_gap = 0.0;
  double prev_inc = 0.0;
  for (std::size_t k = 1; k < traj.points.size(); ++k) {
    const TrajectoryPoint& p = traj.points[k];
    CHECK(p.residue.size() == 4);
    CHECK(p.beta0 == 4);
    REQUIRE(p.gap_to_local.has_value());
    const double expected = (std::sqrt(1.0 + p.t * p.t) - 1.0) / 2.0;
    CHECK(std::abs(*p.gap_to_local - expected) <= 1e-9);
    CHECK(*p.gap_to_local > prev_gap);
    prev_gap = *p.gap_to_local;
    if (k == 1) {
      CHECK_FALSE(p.hausdorff_increment.has_value());  // previous residue was empty
    } else {
      REQUIRE(p.hausdorff_increment.has_value());
      CHECK(*p.hausdorff_increment > prev_inc);
      prev_inc = *p.hausdorff_increment;
    }
  }

  // Branch k continues branch k of the previous step, so the endpoint
  // order mirrors the starting order.
  const double r2 = std::sqrt(2.0);
  const std::vector<Complex> endpoint = {Complex((3.0 - r2) / 2.0), Complex((3.0 + r2) / 2.0),
                                         Complex((9.0 - r2) / 2.0), Complex((9.0 + r2) / 2.0)};
  const std::vector<Complex>& last = traj.points.back().global_eigenvalues;
  REQUIRE(last.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(last[i] - endpoint[i]) <= 1e-9);

  const Beta0Check b0 = track_beta0_constancy(traj);
  CHECK(b0.constant);
  CHECK(b0.value == 4);
  CHECK(b0.transitions.empty());

  const double min_gap = (std::sqrt(1.01) - 1.0) / 2.0;
  const GapCheck ok = check_gap_condition(traj, 0.001);
  CHECK(ok.holds);
  CHECK_FALSE(ok.first_violation_t.has_value());
  REQUIRE(ok.min_gap.has_value());
  CHECK(*ok.min_gap == doctest::Approx(min_gap).epsilon(1e-9));

  const GapCheck bad = check_gap_condition(traj, 0.01);
  CHECK_FALSE(bad.holds);
  REQUIRE(bad.first_violation_t.has_value());
  CHECK(*bad.first_violation_t == doctest::Approx(0.1));
  REQUIRE(bad.min_gap.has_value());
  CHECK(*bad.min_gap == doctest::Approx(min_gap).epsilon(1e-9));

  CHECK_THROWS_AS(check_gap_condition(traj, -1.0), ValidationError);
  CHECK_THROWS_AS(check_gap_condition(traj, std::nan("")), ValidationError);
}

TEST_CASE("component count transitions are recorded at the step where they happen") {
  // Residue points sit at 0.7 +- sqrt(t): separation 2 sqrt(t) crosses a
  // 0.3 clustering gap between t = 0.01 and t = 0.04.
  const StratifiedSystem sys = load_system(fixture_path("jordan_perturb.json"));
  SweepSchedule sch;
  sch.values = {0.01, 0.04, 1.0};
  sch.beta0_gap = 0.3;
  const DeformationTrajectory traj = run_sweep(sys, sch);

  REQUIRE(traj.points.size() == 3);
  CHECK(traj.beta0_gap == 0.3);
  CHECK(traj.points[0].beta0 == 1);
  CHECK(traj.points[1].beta0 == 2);
  CHECK(traj.points[2].beta0 == 2);
  const std::vector<Complex> at_004 = {Complex(0.5), Complex(0.9)};
  CHECK(greedy_match(traj.points[1].residue.points(), at_004) <= 1e-8);

  const Beta0Check b0 = track_beta0_constancy(traj);
  CHECK_FALSE(b0.constant);
  CHECK(b0.value == 1);
  REQUIRE(b0.transitions.size() == 1);
  CHECK(b0.transitions[0].first == doctest::Approx(0.04));
  CHECK(b0.transitions[0].second == 2);
}

TEST_CASE("defective base points are flagged with the splitting exponent") {
  const ExceptionalResult dd = detect_exceptional(defective_pair, Complex(0.7));
  CHECK(dd.lambda0 == Complex(0.7));
  CHECK(dd.m == 2);
  CHECK(dd.exponent >= 0.45);
  CHECK(dd.exponent <= 0.55);
  CHECK(dd.fit_residual <= 0.05);
  CHECK(dd.epsilons.size() >= 12);
  CHECK(dd.radii.size() == dd.epsilons.size());

  // Depth-3 cycle: three branches split like eps^(1/3).
  auto cycle3 = [](double e) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = m(1, 1) = m(2, 2) = Complex(0.5);
    m(0, 1) = m(1, 2) = Complex(1.0);
    m(2, 0) = Complex(e);
    return m;
  };
  const ExceptionalResult d3 = detect_exceptional(cycle3, Complex(0.5));
  CHECK(d3.m == 3);
  CHECK(d3.exponent >= 1.0 / 3.0 - 0.05);
  CHECK(d3.exponent <= 1.0 / 3.0 + 0.05);

  // A symmetric analytic perturbation of a simple eigenvalue splits like
  // eps^2 but is still order m = 1: no defectiveness.
  auto symmetric = [](double e) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = Complex(1.0);
    m(1, 1) = Complex(2.0);
    m(0, 1) = m(1, 0) = Complex(e);
    return m;
  };
  const ExceptionalResult ds = detect_exceptional(symmetric, Complex(1.0));
  CHECK(ds.m == 1);
  CHECK(ds.exponent >= 1.9);
  CHECK(ds.exponent <= 2.1);

  // A plain shift moves the eigenvalue linearly: exponent 1, order 1.
  auto shift = [](double e) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = Complex(1.0 + e);
    m(1, 1) = Complex(2.0);
    return m;
  };
  const ExceptionalResult d1 = detect_exceptional(shift, Complex(1.0));
  CHECK(d1.m == 1);
  CHECK(d1.exponent >= 0.95);
  CHECK(d1.exponent <= 1.05);
}

TEST_CASE("perturbation analysis refuses ill-posed inputs") {
  CHECK_THROWS_WITH_AS(detect_exceptional(defective_pair, Complex(5.0)),
                       doctest::Contains("not an eigenvalue"), ValidationError);
  CHECK_THROWS_AS(detect_exceptional(defective_pair, Complex(0.7), {1e-3, 1e-2, 1e-1}),
                  ValidationError);
  CHECK_THROWS_AS(detect_exceptional(defective_pair, Complex(0.7), {1e-3, 1e-3, 1e-2, 1e-1}),
                  ValidationError);
  CHECK_THROWS_AS(detect_exceptional(defective_pair, Complex(0.7), {-1e-3, 1e-3, 1e-2, 1e-1}),
                  ValidationError);
  CHECK_THROWS_AS(detect_exceptional(std::function<Matrix(double)>{}, Complex(0.0)),
                  ValidationError);

  auto dimension_change = [](double e) {
    return e == 0.0 ? Matrix(Matrix::Identity(2, 2)) : Matrix(Matrix::Identity(3, 3));
  };
  CHECK_THROWS_WITH_AS(detect_exceptional(dimension_change, Complex(1.0)),
                       doctest::Contains("dimension"), ValidationError);

  // Two nearby but distinct base eigenvalues: the perturbation pushes the
  // tracked branch across the isolation radius, which is a measurement
  // failure, not a structure result.
  auto mixing = [](double e) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = Complex(0.7);
    m(1, 1) = Complex(0.7001);
    m(0, 1) = m(1, 0) = Complex(e);
    return m;
  };
  CHECK_THROWS_AS(detect_exceptional(mixing, Complex(0.7)), NumericalError);
}
