#include "specres/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <optional>

#include <json.hpp>

#include "specres/jordan.hpp"
#include "specres/linalg.hpp"

#ifndef SPECRES_VERSION
#define SPECRES_VERSION "0.0.0"
#endif

namespace specres {
namespace {

using nlohmann::ordered_json;

// ---------------------------------------------------------------- formatting

std::string fmt_double(double v) {  // shortest round-trip form
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_g(double v, int prec = 9) {  // compact display form
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, prec);
  return std::string(buf, res.ptr);
}

std::string fmt_complex(Complex z) {
  const double scale = std::max(1.0, std::abs(z.real()));
  if (std::abs(z.imag()) <= 1e-12 * scale) return fmt_g(z.real());
  std::string s = fmt_g(z.real());
  s += z.imag() < 0 ? '-' : '+';
  s += fmt_g(std::abs(z.imag()));
  s += 'i';
  return s;
}

std::string join_points(const std::vector<Complex>& pts) {
  if (pts.empty()) return "(none)";
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ", ";
    s += fmt_complex(pts[i]);
  }
  return s;
}

std::string join_set(const SpectralSet& set) {
  if (set.empty()) return "(none)";
  std::string s;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) s += ", ";
    s += fmt_complex(set.points()[i]);
    if (set.weights()[i] > 1) s += " (x" + std::to_string(set.weights()[i]) + ")";
  }
  return s;
}

const char* kind_name(GeometryKind k) {
  switch (k) {
    case GeometryKind::point: return "point";
    case GeometryKind::line: return "line";
    case GeometryKind::surface: return "surface";
  }
  return "point";
}

const char* mode_name(AttributionMode m) {
  return m == AttributionMode::leave_one_out ? "leave_one_out" : "tau_support";
}

ordered_json json_complex(Complex z) { return ordered_json::array({z.real(), z.imag()}); }

ordered_json json_points(const std::vector<Complex>& pts) {
  ordered_json a = ordered_json::array();
  for (const Complex& p : pts) a.push_back(json_complex(p));
  return a;
}

ordered_json json_set(const SpectralSet& s) {
  return ordered_json{{"points", json_points(s.points())}, {"weights", s.weights()}};
}

ordered_json json_named_spectra(const std::vector<std::pair<std::string, SpectralSet>>& v) {
  ordered_json a = ordered_json::array();
  for (const auto& [id, set] : v) {
    ordered_json e;
    e["id"] = id;
    e["points"] = json_points(set.points());
    e["weights"] = set.weights();
    a.push_back(std::move(e));
  }
  return a;
}

ordered_json jordan_json(const jordan::EigenStructure& st) {
  ordered_json evs = ordered_json::array();
  for (const auto& ev : st.eigenvalues) {
    ordered_json e;
    e["value"] = json_complex(ev.value);
    e["algebraic"] = ev.algebraic;
    e["geometric"] = ev.geometric;
    e["weyr"] = ev.weyr;
    e["blocks"] = ev.blocks;
    e["depth"] = ev.depth;
    evs.push_back(std::move(e));
  }
  return ordered_json{{"max_depth", st.max_depth()}, {"eigenvalues", std::move(evs)}};
}

ordered_json tool_json() {
  return ordered_json{{"name", "specres"}, {"version", library_version()}};
}

ordered_json input_json(const StratifiedSystem& sys, const std::string& raw) {
  return ordered_json{{"digest", input_digest(raw)},
                      {"strata", sys.strata().size()},
                      {"interfaces", sys.interfaces().size()},
                      {"dimension", sys.dimension()}};
}

std::string input_line(const StratifiedSystem& sys, const std::string& raw) {
  const std::size_t ns = sys.strata().size();
  const std::size_t ni = sys.interfaces().size();
  return "input: " + std::to_string(ns) + (ns == 1 ? " stratum, " : " strata, ") +
         std::to_string(ni) + (ni == 1 ? " interface" : " interfaces") + ", dimension " +
         std::to_string(sys.dimension()) + " (" + input_digest(raw) + ")";
}

void append_warnings(std::string& text, const std::vector<std::string>& warnings) {
  if (warnings.empty()) return;
  text += "warnings:\n";
  for (const auto& w : warnings) text += "  " + w + "\n";
}

// ------------------------------------------------------------------- loading

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

void check_keys(const ordered_json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) fail(path, "unknown key '" + it.key() + "'");
  }
}

std::string require_string(const ordered_json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

double require_number(const ordered_json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

bool require_bool(const ordered_json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

Complex parse_entry(const ordered_json& j, const std::string& path) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  fail(path, "expected a number or a [re, im] pair");
}

Matrix parse_matrix(const ordered_json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of rows");
  if (!j[0].is_array() || j[0].empty()) fail(path + "[0]", "expected a nonempty row");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) fail(rp, "rows must all have equal length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_entry(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

InterfaceGeometry parse_geometry(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path, {"type", "domain", "expr"});
  if (!j.contains("type")) fail(path + ".type", "required");
  const std::string type = require_string(j["type"], path + ".type");
  InterfaceGeometry g;
  int need = 0;
  if (type == "point") {
    g.kind = GeometryKind::point;
  } else if (type == "line") {
    g.kind = GeometryKind::line;
    need = 1;
  } else if (type == "surface") {
    g.kind = GeometryKind::surface;
    need = 2;
  } else {
    fail(path + ".type", "must be \"point\", \"line\" or \"surface\"");
  }
  if (j.contains("domain")) {
    const std::string dp = path + ".domain";
    if (!j["domain"].is_array()) fail(dp, "expected an array of [lo, hi] pairs");
    for (std::size_t i = 0; i < j["domain"].size(); ++i) {
      const auto& pair = j["domain"][i];
      const std::string pp = dp + "[" + std::to_string(i) + "]";
      if (!pair.is_array() || pair.size() != 2) fail(pp, "expected a [lo, hi] pair");
      g.domain.emplace_back(require_number(pair[0], pp + "[0]"),
                            require_number(pair[1], pp + "[1]"));
    }
  }
  if (static_cast<int>(g.domain.size()) != need)
    fail(path + ".domain", "a " + type + " geometry needs exactly " + std::to_string(need) +
                               " [lo, hi] pair(s)");
  if (j.contains("expr")) g.expr = require_string(j["expr"], path + ".expr");
  if (need > 0 && g.expr.empty())
    fail(path + ".expr", "a " + type + " geometry needs a family expression");
  if (need == 0 && !g.expr.empty())
    fail(path + ".expr", "a point geometry carries no family expression");
  return g;
}

// --------------------------------------------------------------- csv helpers

void csv_row(std::string& csv, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) csv += ',';
    csv += c;
    first = false;
  }
  csv += '\n';
}

std::string csv_points(const std::vector<Complex>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ';';
    s += fmt_double(pts[i].real());
    s += ':';
    s += fmt_double(pts[i].imag());
  }
  return s;
}

std::string csv_opt(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string("undefined");
}

}  // namespace

std::string library_version() { return SPECRES_VERSION; }

std::string input_digest(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  char hex[16];
  for (int i = 15; i >= 0; --i) {
    hex[i] = digits[h & 0xF];
    h >>= 4;
  }
  return "fnv1a64:" + std::string(hex, 16);
}

StratifiedSystem load_system_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!j.is_object()) throw ValidationError("$: expected a JSON object");
  check_keys(j, "$", {"version", "strata", "interfaces", "tolerances"});
  if (!j.contains("version")) fail("$.version", "required");
  if (require_string(j["version"], "$.version") != "1") fail("$.version", "must be \"1\"");

  if (!j.contains("strata") || !j["strata"].is_array() || j["strata"].empty())
    fail("$.strata", "expected a nonempty array");
  std::vector<Stratum> strata;
  for (std::size_t i = 0; i < j["strata"].size(); ++i) {
    const auto& js = j["strata"][i];
    const std::string path = "$.strata[" + std::to_string(i) + "]";
    if (!js.is_object()) fail(path, "expected an object");
    check_keys(js, path, {"id", "matrix", "interface_block", "geometry"});
    Stratum s;
    if (!js.contains("id")) fail(path + ".id", "required");
    s.id = require_string(js["id"], path + ".id");
    if (s.id.empty()) fail(path + ".id", "must be nonempty");
    if (!js.contains("matrix")) fail(path + ".matrix", "required");
    s.block = parse_matrix(js["matrix"], path + ".matrix");
    if (js.contains("interface_block"))
      s.interface_block = require_bool(js["interface_block"], path + ".interface_block");
    if (js.contains("geometry")) {
      if (!s.interface_block)
        fail(path + ".geometry", "only interface-block strata carry a geometry");
      s.geometry = parse_geometry(js["geometry"], path + ".geometry");
    }
    strata.push_back(std::move(s));
  }

  std::vector<InterfaceCoupling> interfaces;
  if (j.contains("interfaces")) {
    if (!j["interfaces"].is_array()) fail("$.interfaces", "expected an array");
    for (std::size_t i = 0; i < j["interfaces"].size(); ++i) {
      const auto& jc = j["interfaces"][i];
      const std::string path = "$.interfaces[" + std::to_string(i) + "]";
      if (!jc.is_object()) fail(path, "expected an object");
      check_keys(jc, path,
                 {"id", "source", "target", "tau", "hermitian_completion", "geometry",
                  "sweep_rule"});
      InterfaceCoupling c;
      for (const char* k : {"id", "source", "target"})
        if (!jc.contains(k)) fail(path + "." + k, "required");
      c.id = require_string(jc["id"], path + ".id");
      c.source = require_string(jc["source"], path + ".source");
      c.target = require_string(jc["target"], path + ".target");
      if (c.id.empty()) fail(path + ".id", "must be nonempty");
      if (jc.contains("tau")) {
        c.tau = parse_matrix(jc["tau"], path + ".tau");
      } else {
        // Omitted tau means a declared-but-zero coupling; size it from
        // the endpoint strata.
        const Stratum* src = nullptr;
        const Stratum* tgt = nullptr;
        for (const auto& s : strata) {
          if (s.id == c.source) src = &s;
          if (s.id == c.target) tgt = &s;
        }
        if (!src) fail(path + ".source", "references unknown stratum '" + c.source + "'");
        if (!tgt) fail(path + ".target", "references unknown stratum '" + c.target + "'");
        c.tau = Matrix::Zero(tgt->block.rows(), src->block.rows());
      }
      if (jc.contains("hermitian_completion"))
        c.hermitian_completion =
            require_bool(jc["hermitian_completion"], path + ".hermitian_completion");
      if (jc.contains("geometry")) c.geometry = parse_geometry(jc["geometry"], path + ".geometry");
      if (jc.contains("sweep_rule"))
        c.sweep_rule = require_string(jc["sweep_rule"], path + ".sweep_rule");
      interfaces.push_back(std::move(c));
    }
  }

  Tolerances tol;
  if (j.contains("tolerances")) {
    const auto& jt = j["tolerances"];
    if (!jt.is_object()) fail("$.tolerances", "expected an object");
    check_keys(jt, "$.tolerances", {"match_tol", "cluster_gap"});
    if (jt.contains("match_tol"))
      tol.match_tol = require_number(jt["match_tol"], "$.tolerances.match_tol");
    if (jt.contains("cluster_gap"))
      tol.cluster_gap = require_number(jt["cluster_gap"], "$.tolerances.cluster_gap");
  }

  return StratifiedSystem(std::move(strata), std::move(interfaces), tol);
}

StratifiedSystem load_system(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_system_json(text);
}

namespace {

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(json_complex(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json geometry_json(const InterfaceGeometry& g) {
  ordered_json out;
  out["type"] = kind_name(g.kind);
  if (!g.domain.empty()) {
    ordered_json dom = ordered_json::array();
    for (const auto& [lo, hi] : g.domain) dom.push_back(ordered_json::array({lo, hi}));
    out["domain"] = std::move(dom);
  }
  if (!g.expr.empty()) out["expr"] = g.expr;
  return out;
}

bool default_geometry(const InterfaceGeometry& g) {
  return g.kind == GeometryKind::point && g.domain.empty() && g.expr.empty();
}

}  // namespace

std::string serialize_system(const StratifiedSystem& sys) {
  ordered_json j;
  j["version"] = "1";
  j["strata"] = ordered_json::array();
  for (const auto& s : sys.strata()) {
    ordered_json js;
    js["id"] = s.id;
    js["matrix"] = matrix_json(s.block);
    if (s.interface_block) {
      js["interface_block"] = true;
      if (!default_geometry(s.geometry)) js["geometry"] = geometry_json(s.geometry);
    }
    j["strata"].push_back(std::move(js));
  }
  j["interfaces"] = ordered_json::array();
  for (const auto& c : sys.interfaces()) {
    ordered_json jc;
    jc["id"] = c.id;
    jc["source"] = c.source;
    jc["target"] = c.target;
    jc["tau"] = matrix_json(c.tau);
    if (c.hermitian_completion) jc["hermitian_completion"] = true;
    if (!default_geometry(c.geometry)) jc["geometry"] = geometry_json(c.geometry);
    if (!c.sweep_rule.empty()) jc["sweep_rule"] = c.sweep_rule;
    j["interfaces"].push_back(std::move(jc));
  }
  j["tolerances"] = ordered_json{{"match_tol", sys.tolerances().match_tol},
                                 {"cluster_gap", sys.tolerances().cluster_gap}};
  return j.dump(2) + "\n";
}

ReportBundle run_analyze(const StratifiedSystem& sys_in, const std::string& raw_input,
                         const AnalyzeOptions& opt) {
  if (std::isnan(opt.tol)) throw ValidationError("tolerance override must not be NaN");
  std::optional<StratifiedSystem> rebuilt;
  if (opt.tol > 0) {
    Tolerances t;
    t.match_tol = opt.tol;
    t.cluster_gap = sys_in.tolerances().cluster_gap;
    rebuilt.emplace(sys_in.strata(), sys_in.interfaces(), t);
  }
  const StratifiedSystem& sys = rebuilt ? *rebuilt : sys_in;

  const ResidueComputation rc = compute_residue(sys);
  const LocalizedAnalysis loc = analyze_defects(sys, opt.mode, &rc);
  const bool min_univ = verify_minimality_universality(rc.global, rc.local_union, rc.residue,
                                                       rc.tol, 64, 0x5eedULL);
  const bool rigid = rc.residue.empty();

  std::vector<std::string> warnings;
  for (const Complex& z : rc.boundary_ambiguous)
    warnings.push_back("residue point " + fmt_complex(z) +
                       " lies within 10x tolerance of the local union");

  bool have_structure = false;
  jordan::EigenStructure st;
  if (sys.dimension() <= jordan::kJordanDimensionCap) {
    try {
      st = jordan::eigen_structure(assemble_global(sys));
      have_structure = true;
    } catch (const Error& e) {
      warnings.push_back(std::string("eigenvalue structure unavailable: ") + e.what());
    }
  } else {
    warnings.push_back("dimension exceeds the structure-analysis cap (" +
                       std::to_string(jordan::kJordanDimensionCap) +
                       "); Jordan data skipped");
  }

  ordered_json rep;
  rep["tool"] = tool_json();
  rep["input"] = input_json(sys, raw_input);
  rep["tolerances"] = ordered_json{{"match_tol", rc.tol},
                                   {"cluster_gap", sys.tolerances().cluster_gap}};
  rep["local_spectra"] = json_named_spectra(rc.locals);
  rep["interface_blocks"] = json_named_spectra(rc.interface_blocks);
  rep["global_spectrum"] = ordered_json{{"points", json_points(rc.global.points())},
                                        {"multiplicities", rc.global.weights()}};
  rep["residue"] = json_set(rc.residue);
  rep["verdicts"] = ordered_json{{"partition", rc.partition.holds},
                                 {"minimality_universality", min_univ},
                                 {"rigidity_regime", rigid}};
  ordered_json entries = ordered_json::array();
  for (const auto& e : loc.report.entries) {
    ordered_json je;
    je["id"] = e.id;
    je["kind"] = e.from_interface_block ? "interface_block" : "coupling";
    je["geometric_class"] = kind_name(e.geometric_class);
    if (e.classified) {
      je["algebraic_class"] = e.semisimple() ? "semisimple" : "defective";
      je["nilpotent_depth"] = e.nilpotent_depth;
    } else {
      je["algebraic_class"] = nullptr;
      je["nilpotent_depth"] = nullptr;
    }
    je["points"] = json_points(e.points);
    entries.push_back(std::move(je));
  }
  rep["attribution"] = ordered_json{{"mode", mode_name(opt.mode)},
                                    {"interfaces", std::move(entries)},
                                    {"uncovered", json_points(loc.report.uncovered)},
                                    {"multi_attributed", json_points(loc.report.multi_attributed)}};
  rep["jordan"] = have_structure ? jordan_json(st) : ordered_json(nullptr);
  rep["warnings"] = warnings;

  std::string text;
  text += "specres " + library_version() + " analyze\n";
  text += input_line(sys, raw_input) + "\n";
  text += "matching tolerance: " + fmt_g(rc.tol) + "\n";
  text += "local spectra:\n";
  if (rc.locals.empty()) text += "  (none)\n";
  for (const auto& [id, set] : rc.locals) text += "  " + id + ": " + join_set(set) + "\n";
  if (!rc.interface_blocks.empty()) {
    text += "interface blocks:\n";
    for (const auto& [id, set] : rc.interface_blocks)
      text += "  " + id + ": " + join_set(set) + "\n";
  }
  text += "global spectrum: " + join_set(rc.global) + "\n";
  if (rigid) {
    text += "interaction residue: empty -- spectral rigidity regime\n";
  } else {
    text += "interaction residue (" + std::to_string(rc.residue.size()) +
            " points): " + join_set(rc.residue) + "\n";
  }
  text += std::string("partition identity: ") + (rc.partition.holds ? "verified" : "FAILED") +
          "\n";
  text += std::string("minimality/universality: ") + (min_univ ? "verified" : "FAILED") + "\n";
  text += std::string("attribution (") +
          (opt.mode == AttributionMode::leave_one_out ? "leave-one-out" : "tau-support") +
          "):\n";
  if (loc.report.entries.empty()) text += "  (no interfaces)\n";
  for (const auto& e : loc.report.entries) {
    std::string tags = e.from_interface_block ? "interface block, " : "coupling, ";
    tags += kind_name(e.geometric_class);
    if (e.classified) {
      tags += e.semisimple() ? ", semisimple" : ", defective";
      tags += ", depth " + std::to_string(e.nilpotent_depth);
    }
    text += "  " + e.id + " [" + tags + "]: " +
            (e.points.empty() ? "(no points)" : join_points(e.points)) + "\n";
  }
  if (!loc.report.uncovered.empty())
    text += "  uncovered: " + join_points(loc.report.uncovered) + "\n";
  if (!loc.report.multi_attributed.empty())
    text += "  multi-attributed: " + join_points(loc.report.multi_attributed) + "\n";
  if (have_structure) {
    text += "eigenvalue structure: max depth " + std::to_string(st.max_depth());
    if (st.max_depth() <= 1) {
      text += " (diagonalizable)\n";
    } else {
      text += "; defective:";
      bool first = true;
      for (const auto& ev : st.eigenvalues) {
        if (ev.depth < 2) continue;
        text += std::string(first ? " " : ", ") + fmt_complex(ev.value) + " (depth " +
                std::to_string(ev.depth) + ")";
        first = false;
      }
      text += "\n";
    }
  } else {
    text += "eigenvalue structure: unavailable\n";
  }
  append_warnings(text, warnings);

  ReportBundle out;
  out.json = rep.dump(2) + "\n";
  out.text = std::move(text);
  out.status = loc.report.uncovered.empty() ? 0 : 2;
  return out;
}

ReportBundle run_sweep_cmd(const StratifiedSystem& sys, const std::string& raw_input,
                           const SweepOptions& opt) {
  SweepSchedule sch = SweepSchedule::uniform(opt.steps);
  sch.default_rule = opt.rule;
  sch.beta0_gap = opt.beta0_gap;
  const DeformationTrajectory traj = run_sweep(sys, sch);
  const Beta0Check b0 = track_beta0_constancy(traj);
  std::optional<GapCheck> gap;
  if (opt.delta > 0) gap = check_gap_condition(traj, opt.delta);

  std::vector<std::string> warnings = traj.diagnostics;

  // Perturbation-order analysis around defective eigenvalues at the
  // initial step: for each of them the sweep itself is the perturbation.
  ordered_json exceptional = ordered_json::array();
  const double t0 = sch.values.front();
  if (sys.dimension() <= jordan::kJordanDimensionCap) {
    try {
      const Matrix m0 = assemble_global(deformed_system(sys, t0, sch.default_rule));
      const jordan::EigenStructure st0 = jordan::eigen_structure(m0);
      for (const auto& ev : st0.eigenvalues) {
        if (ev.depth < 2) continue;
        if (t0 + 1e-2 > 1.0) {
          warnings.push_back(
              "defective eigenvalue at the last admissible sweep parameter; "
              "perturbation analysis skipped");
          break;
        }
        try {
          const ExceptionalResult res = detect_exceptional(
              [&](double eps) {
                return assemble_global(deformed_system(sys, t0 + eps, sch.default_rule));
              },
              ev.value);
          ordered_json je;
          je["lambda0"] = json_complex(res.lambda0);
          je["m"] = res.m;
          je["exponent"] = res.exponent;
          je["fit_residual"] = res.fit_residual;
          je["samples"] = res.epsilons.size();
          exceptional.push_back(std::move(je));
        } catch (const Error& e) {
          warnings.push_back("perturbation analysis at " + fmt_complex(ev.value) +
                             " failed: " + e.what());
        }
      }
    } catch (const Error& e) {
      warnings.push_back(std::string("initial-step structure analysis failed: ") + e.what());
    }
  }

  ordered_json rep;
  rep["tool"] = tool_json();
  rep["input"] = input_json(sys, raw_input);
  rep["sweep"] = ordered_json{{"steps", opt.steps},
                              {"default_rule", opt.rule},
                              {"beta0_gap", traj.beta0_gap},
                              {"branch_count", traj.branch_count}};
  ordered_json steps = ordered_json::array();
  for (const auto& p : traj.points) {
    ordered_json jp;
    jp["t"] = p.t;
    jp["residue"] = json_points(p.residue.points());
    jp["gap"] = p.gap_to_local ? ordered_json(*p.gap_to_local) : ordered_json(nullptr);
    jp["beta0"] = p.beta0;
    jp["hausdorff_increment"] =
        p.hausdorff_increment ? ordered_json(*p.hausdorff_increment) : ordered_json(nullptr);
    steps.push_back(std::move(jp));
  }
  rep["trajectory"] = std::move(steps);
  ordered_json verdicts;
  verdicts["beta0_constant"] = ordered_json{{"constant", b0.constant}, {"value", b0.value}};
  {
    ordered_json tr = ordered_json::array();
    for (const auto& [t, v] : b0.transitions) tr.push_back(ordered_json{{"t", t}, {"beta0", v}});
    verdicts["beta0_constant"]["transitions"] = std::move(tr);
  }
  if (gap) {
    verdicts["gap_condition"] =
        ordered_json{{"delta", opt.delta},
                     {"holds", gap->holds},
                     {"min_gap", gap->min_gap ? ordered_json(*gap->min_gap) : nullptr},
                     {"first_violation_t",
                      gap->first_violation_t ? ordered_json(*gap->first_violation_t) : nullptr}};
  } else {
    verdicts["gap_condition"] = nullptr;
  }
  rep["verdicts"] = std::move(verdicts);
  rep["exceptional"] = std::move(exceptional);
  rep["warnings"] = warnings;

  std::string csv = "t,gap,beta0,hausdorff_increment,residue_points\n";
  for (const auto& p : traj.points)
    csv_row(csv, {fmt_double(p.t), csv_opt(p.gap_to_local), std::to_string(p.beta0),
                  csv_opt(p.hausdorff_increment), csv_points(p.residue.points())});

  std::string text;
  text += "specres " + library_version() + " sweep\n";
  text += input_line(sys, raw_input) + "\n";
  text += "schedule: " + std::to_string(sch.values.size()) + " points on [" +
          fmt_g(sch.values.front()) + ", " + fmt_g(sch.values.back()) + "], default rule \"" +
          opt.rule + "\"\n";
  text += "beta0 gap: " + fmt_g(traj.beta0_gap) + "\n";
  const std::size_t show = std::min<std::size_t>(traj.points.size(), 20);
  for (std::size_t i = 0; i < show; ++i) {
    const auto& p = traj.points[i];
    text += "  t=" + fmt_g(p.t) + ": ";
    if (p.residue.empty()) {
      text += "residue empty";
    } else {
      text += "residue " + std::to_string(p.residue.size()) + " point" +
              (p.residue.size() == 1 ? "" : "s");
      if (p.gap_to_local) text += ", gap " + fmt_g(*p.gap_to_local, 6);
      text += ", beta0 " + std::to_string(p.beta0);
      if (p.hausdorff_increment) text += ", moved " + fmt_g(*p.hausdorff_increment, 6);
    }
    text += "\n";
  }
  if (traj.points.size() > show)
    text += "  ... " + std::to_string(traj.points.size() - show) + " more steps (see CSV)\n";
  text += "beta0 over nonempty residues: ";
  if (b0.constant) {
    text += "constant at " + std::to_string(b0.value) + "\n";
  } else {
    text += "NOT constant (starts at " + std::to_string(b0.value) + ", changes at";
    for (const auto& [t, v] : b0.transitions)
      text += " t=" + fmt_g(t) + "->" + std::to_string(v);
    text += ")\n";
  }
  if (gap) {
    text += "gap condition (delta=" + fmt_g(opt.delta) + "): ";
    if (gap->holds) {
      text += "holds";
      if (gap->min_gap) text += " (min gap " + fmt_g(*gap->min_gap, 6) + ")";
    } else {
      text += "VIOLATED at t=" + fmt_g(*gap->first_violation_t);
    }
    text += "\n";
  }
  for (const auto& je : rep["exceptional"])
    text += "exceptional point at " +
            fmt_complex(Complex(je["lambda0"][0].get<double>(), je["lambda0"][1].get<double>())) +
            ": splitting order m=" + std::to_string(je["m"].get<int>()) + " (exponent " +
            fmt_g(je["exponent"].get<double>(), 6) + ")\n";
  append_warnings(text, warnings);

  ReportBundle out;
  out.json = rep.dump(2) + "\n";
  out.text = std::move(text);
  out.csv = std::move(csv);
  out.status = (gap && !gap->holds) ? 2 : 0;
  return out;
}

ReportBundle run_family_cmd(const StratifiedSystem& sys, const std::string& raw_input,
                            const FamilyOptions& opt) {
  struct Entity {
    std::string id;
    const InterfaceGeometry* geo;
  };
  std::vector<Entity> entities;
  for (const auto& c : sys.interfaces())
    if (c.geometry.kind != GeometryKind::point) entities.push_back({c.id, &c.geometry});
  for (const auto& s : sys.strata())
    if (s.interface_block && s.geometry.kind != GeometryKind::point)
      entities.push_back({s.id, &s.geometry});

  std::vector<std::string> warnings;
  if (entities.empty())
    warnings.push_back("the system declares no line or surface interface families");

  const ResidueComputation rc = compute_residue(sys);

  ordered_json families = ordered_json::array();
  std::string csv = "family,bin_left,bin_right,count\n";
  std::string text;
  text += "specres " + library_version() + " family\n";
  text += input_line(sys, raw_input) + "\n";

  for (const auto& ent : entities) {
    Expression expr = [&] {
      try {
        return parse_expression(ent.geo->expr);
      } catch (const ParseError& e) {
        throw ValidationError("family expression for '" + ent.id + "' does not parse: " +
                              e.what());
      }
    }();
    const bool surface = ent.geo->kind == GeometryKind::surface;
    const family::Domain dom =
        surface ? family::Domain::rectangle(ent.geo->domain[0].first, ent.geo->domain[0].second,
                                            ent.geo->domain[1].first, ent.geo->domain[1].second)
                : family::Domain::interval(ent.geo->domain[0].first, ent.geo->domain[0].second);
    const family::FamilyResult fr = family::sample_family(expr, dom, opt.samples, opt.bins);
    const std::vector<family::VanHoveFlag> flags =
        surface ? family::detect_van_hove(fr) : std::vector<family::VanHoveFlag>{};
    const family::FamilyResidue cov = family::family_residue(fr, rc.local_union, rc.tol);

    ordered_json jf;
    jf["id"] = ent.id;
    jf["kind"] = kind_name(ent.geo->kind);
    jf["expr"] = to_string(fr.expr);
    {
      ordered_json jd = ordered_json::array();
      for (const auto& [lo, hi] : ent.geo->domain) jd.push_back(ordered_json::array({lo, hi}));
      jf["domain"] = std::move(jd);
    }
    jf["samples_per_axis"] = fr.samples_per_axis;
    jf["range"] = ordered_json::array({fr.vmin, fr.vmax});
    {
      ordered_json js = ordered_json::array();
      for (const auto& [lo, hi] : fr.support_intervals)
        js.push_back(ordered_json::array({lo, hi}));
      jf["support"] = std::move(js);
    }
    jf["histogram"] = ordered_json{{"edges", fr.bin_edges}, {"counts", fr.bin_counts}};
    jf["critical_values"] = fr.critical_values;
    {
      ordered_json jv = ordered_json::array();
      for (const auto& f : flags) {
        const char* kn = f.kind == family::VanHoveKind::minimum    ? "minimum"
                         : f.kind == family::VanHoveKind::maximum  ? "maximum"
                         : f.kind == family::VanHoveKind::saddle   ? "saddle"
                                                                   : "degenerate";
        jv.push_back(ordered_json{{"value", f.value},
                                  {"kind", kn},
                                  {"enhancement", f.enhancement},
                                  {"reliable", f.reliable},
                                  {"param", ordered_json::array({f.param[0], f.param[1]})}});
      }
      jf["van_hove"] = std::move(jv);
    }
    {
      ordered_json jc = ordered_json::array();
      for (const auto& c : cov.covered)
        jc.push_back(ordered_json{{"value", json_complex(c.value)},
                                  {"interval", c.interval_index}});
      jf["coverage"] = ordered_json{{"slack", cov.slack},
                                    {"covered", std::move(jc)},
                                    {"isolated", json_points(cov.isolated_locals)}};
    }
    families.push_back(std::move(jf));

    for (std::size_t b = 0; b + 1 < fr.bin_edges.size(); ++b)
      csv_row(csv, {ent.id, fmt_double(fr.bin_edges[b]), fmt_double(fr.bin_edges[b + 1]),
                    std::to_string(fr.bin_counts[b])});

    text += "family " + ent.id + " [" + kind_name(ent.geo->kind) + "] expr \"" +
            to_string(fr.expr) + "\", " + std::to_string(fr.samples_per_axis) +
            " samples/axis\n";
    text += "  range: [" + fmt_g(fr.vmin, 6) + ", " + fmt_g(fr.vmax, 6) + "]\n";
    text += "  support:";
    for (const auto& [lo, hi] : fr.support_intervals)
      text += " [" + fmt_g(lo, 6) + ", " + fmt_g(hi, 6) + "]";
    text += "\n";
    text += "  critical values:";
    if (fr.critical_values.empty()) text += " (none)";
    for (const double v : fr.critical_values) text += " " + fmt_g(v, 6);
    text += "\n";
    if (surface) {
      text += "  van hove flags:";
      if (flags.empty()) text += " (none)";
      for (const auto& f : flags) {
        const char* kn = f.kind == family::VanHoveKind::minimum    ? "minimum"
                         : f.kind == family::VanHoveKind::maximum  ? "maximum"
                         : f.kind == family::VanHoveKind::saddle   ? "saddle"
                                                                   : "degenerate";
        text += std::string(" ") + kn + "@" + fmt_g(f.value, 6);
        if (!f.reliable) text += "(near boundary)";
      }
      text += "\n";
    }
    text += "  covered locals:";
    if (cov.covered.empty()) text += " (none)";
    for (const auto& c : cov.covered)
      text += " " + fmt_complex(c.value) + " (interval " + std::to_string(c.interval_index) + ")";
    text += "\n";
    text += "  isolated locals: " + join_points(cov.isolated_locals) + "\n";
  }

  ordered_json rep;
  rep["tool"] = tool_json();
  rep["input"] = input_json(sys, raw_input);
  rep["families"] = std::move(families);
  rep["warnings"] = warnings;
  append_warnings(text, warnings);

  ReportBundle out;
  out.json = rep.dump(2) + "\n";
  out.text = std::move(text);
  out.csv = std::move(csv);
  out.status = 0;
  return out;
}

}  // namespace specres
