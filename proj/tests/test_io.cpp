#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "specres/io.hpp"
#include "specres/system.hpp"
#include "test_util.hpp"

using namespace specres;
using nlohmann::json;
using testutil::fixture_path;
using testutil::read_file;

namespace {

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace

TEST_CASE("round-trip through the serializer reproduces every fixture") {
  const char* fixtures[] = {"two_level_pair.json",    "coupled_diagonal_pair.json",
                            "decoupled.json",         "point_defect.json",
                            "nilpotent_interface.json", "line_family.json",
                            "plane_family.json",      "saddle.json",
                            "vanhove_min.json",       "jordan_perturb.json"};
  for (const char* f : fixtures) {
    CAPTURE(f);
    const StratifiedSystem sys = load_system_json(read_file(fixture_path(f)));
    const std::string once = serialize_system(sys);
    const StratifiedSystem back = load_system_json(once);
    CHECK((assemble_global(sys) - assemble_global(back)).norm() == 0.0);
    CHECK(back.strata().size() == sys.strata().size());
    CHECK(back.interfaces().size() == sys.interfaces().size());
    CHECK(back.tolerances().match_tol == sys.tolerances().match_tol);
    CHECK(serialize_system(back) == once);  // stable after one pass
  }
}

TEST_CASE("input digests are stable fnv-1a values") {
  CHECK(input_digest("") == "fnv1a64:cbf29ce484222325");
  CHECK(input_digest("a") == "fnv1a64:af63dc4c8601ec8c");
  CHECK(input_digest("hello") == "fnv1a64:a430d84680aabd0b");
  CHECK(library_version() == std::string("0.1.0"));
}

TEST_CASE("the loader pins schema violations to a JSON path") {
  CHECK_THROWS_WITH_AS(load_system_json("{}"), doctest::Contains("$.version"), ValidationError);
  CHECK_THROWS_WITH_AS(load_system_json(R"({"version":"2"})"), doctest::Contains("$.version"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(load_system_json(R"({"version":"1"})"), doctest::Contains("$.strata"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(load_system_json(R"({"version":"1","strata":[{"id":"a"}]})"),
                       doctest::Contains("$.strata[0].matrix"), ValidationError);
  CHECK_THROWS_WITH_AS(
      load_system_json(R"({"version":"1","strata":[{"id":"a","matrix":[[1,2],[3]]}]})"),
      doctest::Contains("$.strata[0].matrix[1]"), ValidationError);
  CHECK_THROWS_WITH_AS(
      load_system_json(R"({"version":"1","strata":[{"id":"a","matrix":[["x"]]}]})"),
      doctest::Contains("$.strata[0].matrix[0][0]"), ValidationError);
  CHECK_THROWS_WITH_AS(
      load_system_json(R"({"version":"1","extra":1,"strata":[{"id":"a","matrix":[[1]]}]})"),
      doctest::Contains("unknown key 'extra'"), ValidationError);
  CHECK_THROWS_WITH_AS(
      load_system_json(
          R"({"version":"1","strata":[{"id":"a","matrix":[[1]]}],
              "interfaces":[{"id":"c","source":"nope","target":"a"}]})"),
      doctest::Contains("references unknown stratum"), ValidationError);
  CHECK_THROWS_WITH_AS(
      load_system_json(
          R"({"version":"1","strata":[{"id":"a","matrix":[[1]],
              "geometry":{"type":"point"}}]})"),
      doctest::Contains("only interface-block strata carry a geometry"), ValidationError);
  CHECK_THROWS_WITH_AS(
      load_system_json(
          R"({"version":"1","strata":[{"id":"a","matrix":[[1]],"interface_block":true,
              "geometry":{"type":"line","expr":"s"}}]})"),
      doctest::Contains("needs exactly 1"), ValidationError);
  CHECK_THROWS_WITH_AS(
      load_system_json(
          R"({"version":"1","strata":[{"id":"a","matrix":[[1]],"interface_block":true,
              "geometry":{"type":"point","expr":"s"}}]})"),
      doctest::Contains("carries no family expression"), ValidationError);
  CHECK_THROWS_WITH_AS(
      load_system_json(
          R"({"version":"1","strata":[{"id":"a","matrix":[[1]],"interface_block":true,
              "geometry":{"type":"line","domain":[[0,1]]}}]})"),
      doctest::Contains("needs a family expression"), ValidationError);
  CHECK_THROWS_AS(load_system_json("["), ParseError);
  CHECK_THROWS_WITH_AS(load_system_json("[]"), doctest::Contains("expected a JSON object"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(load_system("/nonexistent/system.json"),
                       doctest::Contains("cannot open"), ValidationError);
}

TEST_CASE("analyze reports are deterministic and carry the full structure") {
  const std::string raw = read_file(fixture_path("coupled_diagonal_pair.json"));
  const StratifiedSystem sys = load_system_json(raw);
  const ReportBundle b1 = run_analyze(sys, raw, {});
  const ReportBundle b2 = run_analyze(sys, raw, {});
  CHECK(b1.json == b2.json);
  CHECK(b1.text == b2.text);
  CHECK(b1.status == 0);
  CHECK(b1.csv.empty());

  const json j = json::parse(b1.json);
  for (const char* key : {"tool", "input", "tolerances", "local_spectra", "interface_blocks",
                          "global_spectrum", "residue", "verdicts", "attribution", "jordan",
                          "warnings"}) {
    CAPTURE(key);
    CHECK(j.contains(key));
  }
  CHECK(j["tool"]["name"] == "specres");
  CHECK(j["tool"]["version"] == library_version());
  CHECK(j["input"]["digest"] == input_digest(raw));
  CHECK(j["input"]["strata"] == 2);
  CHECK(j["input"]["interfaces"] == 1);
  CHECK(j["input"]["dimension"] == 4);
  CHECK(j["tolerances"]["match_tol"].get<double>() > 0.0);

  CHECK(j["verdicts"]["partition"].is_boolean());
  CHECK(j["verdicts"]["partition"] == true);
  CHECK(j["verdicts"]["minimality_universality"] == true);
  CHECK(j["verdicts"]["rigidity_regime"] == false);

  CHECK(j["residue"]["points"].size() == 4);
  CHECK(j["residue"]["weights"].size() == 4);
  CHECK(j["local_spectra"].size() == 2);
  CHECK(j["interface_blocks"].empty());

  CHECK(j["attribution"]["mode"] == "leave_one_out");
  const json& ifc = j["attribution"]["interfaces"][0];
  CHECK(ifc["id"] == "I12");
  CHECK(ifc["kind"] == "coupling");
  CHECK(ifc["geometric_class"] == "point");
  CHECK(ifc["algebraic_class"] == "semisimple");
  CHECK(ifc["nilpotent_depth"] == 1);
  CHECK(ifc["points"].size() == 4);
  CHECK(j["attribution"]["uncovered"].empty());
  CHECK(j["attribution"]["multi_attributed"].empty());

  CHECK_FALSE(j["jordan"].is_null());
  CHECK(j["jordan"]["max_depth"] == 1);

  CHECK(b1.text.find("interaction residue (4 points)") != std::string::npos);
  CHECK(b1.text.find("partition identity: verified") != std::string::npos);
  CHECK(b1.text.find("minimality/universality: verified") != std::string::npos);
  CHECK(b1.text.find("attribution (leave-one-out)") != std::string::npos);
}

TEST_CASE("an empty residue is reported as the rigidity regime") {
  const std::string raw = read_file(fixture_path("decoupled.json"));
  const ReportBundle b = run_analyze(load_system_json(raw), raw, {});
  CHECK(b.status == 0);
  CHECK(b.text.find("interaction residue: empty -- spectral rigidity regime") !=
        std::string::npos);
  const json j = json::parse(b.json);
  CHECK(j["verdicts"]["rigidity_regime"] == true);
  CHECK(j["residue"]["points"].empty());
}

TEST_CASE("uncovered residue points set the caveat status") {
  // A zero interface block contributes {0} to the global spectrum but no
  // entity claims the point.
  const std::string raw = R"({"version":"1","strata":[
    {"id":"P","matrix":[[1,0],[0,2]]},
    {"id":"Z","matrix":[[0]],"interface_block":true}]})";
  const ReportBundle b = run_analyze(load_system_json(raw), raw, {});
  CHECK(b.status == 2);
  const json j = json::parse(b.json);
  CHECK(j["attribution"]["uncovered"].size() == 1);
  CHECK(b.text.find("uncovered:") != std::string::npos);
}

TEST_CASE("a tolerance override rebuilds the comparison scale") {
  const std::string raw = read_file(fixture_path("coupled_diagonal_pair.json"));
  const StratifiedSystem sys = load_system_json(raw);
  AnalyzeOptions opt;
  opt.tol = 3.0;  // swallows every coupling shift
  const ReportBundle b = run_analyze(sys, raw, opt);
  CHECK(b.status == 0);
  const json j = json::parse(b.json);
  CHECK(j["tolerances"]["match_tol"] == 3.0);
  CHECK(j["verdicts"]["rigidity_regime"] == true);

  opt.tol = std::nan("");
  CHECK_THROWS_AS(run_analyze(sys, raw, opt), ValidationError);
}

TEST_CASE("sweep bundles carry the trajectory in CSV and JSON") {
  const std::string raw = read_file(fixture_path("coupled_diagonal_pair.json"));
  const StratifiedSystem sys = load_system_json(raw);
  const ReportBundle b = run_sweep_cmd(sys, raw, {});
  CHECK(b.status == 0);
  CHECK(b.json == run_sweep_cmd(sys, raw, {}).json);
  CHECK(b.csv == run_sweep_cmd(sys, raw, {}).csv);

  const std::vector<std::string> lines = split_lines(b.csv);
  REQUIRE(lines.size() == 12);  // header + 11 steps
  CHECK(lines[0] == "t,gap,beta0,hausdorff_increment,residue_points");
  CHECK(starts_with(lines[1], "0,undefined,0,undefined"));

  const json j = json::parse(b.json);
  CHECK(j["sweep"]["steps"] == 10);
  CHECK(j["sweep"]["default_rule"] == "linear");
  CHECK(j["sweep"]["branch_count"] == 4);
  CHECK(j["sweep"]["beta0_gap"].get<double>() ==
        doctest::Approx(0.1 * std::sqrt(1.01)).epsilon(1e-9));

  REQUIRE(j["trajectory"].size() == 11);
  const json& first = j["trajectory"][0];
  CHECK(first["t"] == 0.0);
  CHECK(first["gap"].is_null());
  CHECK(first["hausdorff_increment"].is_null());
  CHECK(first["residue"].empty());
  CHECK(first["beta0"] == 0);
  const json& mid = j["trajectory"][5];
  CHECK(mid["t"].get<double>() == doctest::Approx(0.5));
  CHECK(mid["gap"].get<double>() ==
        doctest::Approx((std::sqrt(1.25) - 1.0) / 2.0).epsilon(1e-9));
  CHECK(mid["beta0"] == 4);
  CHECK(mid["residue"].size() == 4);

  CHECK(j["verdicts"]["beta0_constant"]["constant"] == true);
  CHECK(j["verdicts"]["beta0_constant"]["value"] == 4);
  CHECK(j["verdicts"]["beta0_constant"]["transitions"].empty());
  CHECK(j["verdicts"]["gap_condition"].is_null());  // no delta requested
  CHECK(j["exceptional"].empty());
  CHECK(b.text.find("beta0 over nonempty residues: constant at 4") != std::string::npos);

  SweepOptions strict;
  strict.delta = 0.5;  // the maximum gap is (sqrt(2)-1)/2, about 0.207
  const ReportBundle v = run_sweep_cmd(sys, raw, strict);
  CHECK(v.status == 2);
  const json jv = json::parse(v.json);
  CHECK(jv["verdicts"]["gap_condition"]["holds"] == false);
  CHECK(jv["verdicts"]["gap_condition"]["first_violation_t"].get<double>() ==
        doctest::Approx(0.1));
  CHECK(v.text.find("VIOLATED at t=0.1") != std::string::npos);

  SweepOptions zero;
  zero.steps = 0;
  CHECK_THROWS_AS(run_sweep_cmd(sys, raw, zero), ValidationError);
}

TEST_CASE("sweep flags defective starting points with the splitting order") {
  const std::string raw = read_file(fixture_path("jordan_perturb.json"));
  SweepOptions opt;
  opt.steps = 4;
  const ReportBundle b = run_sweep_cmd(load_system_json(raw), raw, opt);
  const json j = json::parse(b.json);
  REQUIRE(j["exceptional"].size() == 1);
  const json& e = j["exceptional"][0];
  CHECK(e["lambda0"][0].get<double>() == doctest::Approx(0.7));
  CHECK(std::abs(e["lambda0"][1].get<double>()) <= 1e-9);
  CHECK(e["m"] == 2);
  CHECK(e["exponent"].get<double>() >= 0.45);
  CHECK(e["exponent"].get<double>() <= 0.55);
  CHECK(e["samples"].get<int>() >= 4);
  CHECK(b.text.find("splitting order m=2") != std::string::npos);
}

TEST_CASE("family bundles sample every declared family") {
  const std::string raw = read_file(fixture_path("line_family.json"));
  const ReportBundle b = run_family_cmd(load_system_json(raw), raw, {});
  CHECK(b.status == 0);

  const std::vector<std::string> lines = split_lines(b.csv);
  REQUIRE(lines.size() == 65);  // header + 64 bins
  CHECK(lines[0] == "family,bin_left,bin_right,count");
  for (std::size_t i = 1; i < lines.size(); ++i) CHECK(starts_with(lines[i], "IL,"));

  const json j = json::parse(b.json);
  REQUIRE(j["families"].size() == 1);
  const json& f = j["families"][0];
  CHECK(f["id"] == "IL");
  CHECK(f["kind"] == "line");
  CHECK(f["samples_per_axis"] == 201);
  REQUIRE(f["support"].size() == 1);
  CHECK(f["support"][0][0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f["support"][0][1].get<double>() == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(f["histogram"]["edges"].size() == 65);
  CHECK(f["histogram"]["counts"].size() == 64);
  REQUIRE(f["coverage"]["covered"].size() == 1);
  CHECK(f["coverage"]["covered"][0]["value"][0].get<double>() == doctest::Approx(3.0));
  CHECK(f["coverage"]["isolated"].size() == 3);
  CHECK(b.text.find("covered locals: 3 (interval") != std::string::npos);

  // Surface families carry saddle / extremum flags.
  const std::string sraw = read_file(fixture_path("saddle.json"));
  FamilyOptions sopt;
  sopt.samples = 201;
  sopt.bins = 32;
  const ReportBundle sb = run_family_cmd(load_system_json(sraw), sraw, sopt);
  const json sj = json::parse(sb.json);
  REQUIRE(sj["families"].size() == 1);
  const json& vf = sj["families"][0]["van_hove"];
  REQUIRE(vf.size() == 1);
  CHECK(vf[0]["kind"] == "saddle");
  CHECK(vf[0]["reliable"] == true);
  CHECK(std::abs(vf[0]["value"].get<double>()) <= 1e-12);
  CHECK(split_lines(sb.csv).size() == 33);

  // No declared families: an explicit warning, no rows.
  const std::string draw = read_file(fixture_path("decoupled.json"));
  const ReportBundle db = run_family_cmd(load_system_json(draw), draw, {});
  CHECK(db.status == 0);
  const json dj = json::parse(db.json);
  CHECK(dj["families"].empty());
  REQUIRE(dj["warnings"].size() == 1);
  CHECK(dj["warnings"][0] == "the system declares no line or surface interface families");
  CHECK(split_lines(db.csv).size() == 1);
}
