#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <specres.h>

namespace {

std::string fixture(const std::string& name) {
  return std::string(SPECRES_FIXTURE_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (const char c : s)
    if (c == '\n') ++n;
  if (!s.empty() && s.back() != '\n') ++n;
  return n;
}

struct CliRun {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliRun run_cli(const std::string& args) {
  const std::string out_path = "/tmp/specres_capi_cli_out.txt";
  const std::string cmd =
      "\"" + std::string(SPECRES_CLI_PATH) + "\" " + args + " > " + out_path + " 2>&1";
  const int rc = std::system(cmd.c_str());
  CliRun r;
  if (rc != -1 && WIFEXITED(rc)) r.exit_code = WEXITSTATUS(rc);
  r.output = slurp(out_path);
  std::remove(out_path.c_str());
  return r;
}

}  // namespace

TEST_CASE("the version string is stable static storage") {
  const char* v = specres_version();
  REQUIRE(v != nullptr);
  CHECK(std::string(v) == "0.1.0");
  CHECK(specres_version() == v);  // same pointer every call
}

TEST_CASE("load, analyze, and read every payload through the C surface") {
  char err[512] = {0};
  specres_system_t* sys = nullptr;
  REQUIRE(specres_system_load_file(fixture("coupled_diagonal_pair.json").c_str(), &sys, err,
                                   sizeof err) == SPECRES_OK);
  REQUIRE(sys != nullptr);

  specres_result_t* res = nullptr;
  REQUIRE(specres_analyze(sys, nullptr, 0.0, &res, err, sizeof err) == SPECRES_OK);
  REQUIRE(res != nullptr);
  CHECK(specres_result_status(res) == 0);

  const char* json = specres_result_json(res);
  const char* text = specres_result_text(res);
  const char* csv = specres_result_csv(res);
  REQUIRE(json != nullptr);
  REQUIRE(text != nullptr);
  REQUIRE(csv != nullptr);
  CHECK(json[0] == '{');
  CHECK(std::string(text).find("interaction residue") != std::string::npos);
  CHECK(std::string(csv).empty());  // analyze has no tabular payload
  specres_result_free(res);

  // Both spellings of each attribution mode are accepted.
  for (const char* mode : {"leave-one-out", "leave_one_out", "tau-support", "tau_support"}) {
    CAPTURE(mode);
    specres_result_t* r = nullptr;
    CHECK(specres_analyze(sys, mode, 0.0, &r, err, sizeof err) == SPECRES_OK);
    specres_result_free(r);
  }

  specres_result_t* bad = nullptr;
  err[0] = '\0';
  CHECK(specres_analyze(sys, "bogus", 0.0, &bad, err, sizeof err) ==
        SPECRES_ERR_INVALID_ARGUMENT);
  CHECK(bad == nullptr);
  CHECK(std::string(err).find("unknown mode") != std::string::npos);

  specres_system_free(sys);
}

TEST_CASE("load failures map to distinct error codes") {
  char err[512] = {0};
  specres_system_t* sys = nullptr;

  CHECK(specres_system_load_file("/nonexistent/system.json", &sys, err, sizeof err) ==
        SPECRES_ERR_IO);
  CHECK(sys == nullptr);
  CHECK(std::string(err).find("cannot open") != std::string::npos);

  CHECK(specres_system_load_json("{", &sys, err, sizeof err) == SPECRES_ERR_PARSE);
  CHECK(sys == nullptr);

  err[0] = '\0';
  CHECK(specres_system_load_json(R"({"version":"1"})", &sys, err, sizeof err) ==
        SPECRES_ERR_VALIDATION);
  CHECK(sys == nullptr);
  CHECK(std::string(err).find("$.strata") != std::string::npos);

  CHECK(specres_system_load_file(nullptr, &sys, err, sizeof err) ==
        SPECRES_ERR_INVALID_ARGUMENT);
  CHECK(specres_system_load_json(R"({"version":"1"})", nullptr, err, sizeof err) ==
        SPECRES_ERR_INVALID_ARGUMENT);
  // A missing error buffer must not crash the call.
  CHECK(specres_system_load_json("{", &sys, nullptr, 0) == SPECRES_ERR_PARSE);
}

TEST_CASE("null and invalid handles are rejected, not dereferenced") {
  char err[256] = {0};
  specres_result_t* res = nullptr;
  CHECK(specres_analyze(nullptr, nullptr, 0.0, &res, err, sizeof err) ==
        SPECRES_ERR_INVALID_ARGUMENT);
  CHECK(specres_sweep(nullptr, 4, nullptr, 0.0, 0.0, &res, err, sizeof err) ==
        SPECRES_ERR_INVALID_ARGUMENT);
  CHECK(specres_family(nullptr, 10, 8, &res, err, sizeof err) == SPECRES_ERR_INVALID_ARGUMENT);

  CHECK(specres_result_json(nullptr) == nullptr);
  CHECK(specres_result_text(nullptr) == nullptr);
  CHECK(specres_result_csv(nullptr) == nullptr);
  CHECK(specres_result_status(nullptr) == -1);

  specres_system_free(nullptr);  // must be safe no-ops
  specres_result_free(nullptr);
}

TEST_CASE("the sweep entry point produces the tabular payload") {
  char err[512] = {0};
  specres_system_t* sys = nullptr;
  REQUIRE(specres_system_load_file(fixture("jordan_perturb.json").c_str(), &sys, err,
                                   sizeof err) == SPECRES_OK);

  specres_result_t* res = nullptr;
  REQUIRE(specres_sweep(sys, 4, nullptr, 0.0, 0.0, &res, err, sizeof err) == SPECRES_OK);
  CHECK(specres_result_status(res) == 0);
  CHECK(count_lines(specres_result_csv(res)) == 6);  // header + 5 steps
  specres_result_free(res);

  // An unreachable gap demand still produces the report, with status 2.
  res = nullptr;
  REQUIRE(specres_sweep(sys, 4, nullptr, 0.0, 10.0, &res, err, sizeof err) == SPECRES_OK);
  CHECK(specres_result_status(res) == 2);
  specres_result_free(res);

  res = nullptr;
  CHECK(specres_sweep(sys, 0, nullptr, 0.0, 0.0, &res, err, sizeof err) ==
        SPECRES_ERR_VALIDATION);
  CHECK(res == nullptr);

  // A malformed default rule only matters for couplings that lack their
  // own; this fixture's coupling has none, so the rule gets parsed.
  specres_system_t* pair = nullptr;
  REQUIRE(specres_system_load_file(fixture("coupled_diagonal_pair.json").c_str(), &pair, err,
                                   sizeof err) == SPECRES_OK);
  res = nullptr;
  CHECK(specres_sweep(pair, 4, "2*(s", 0.0, 0.0, &res, err, sizeof err) ==
        SPECRES_ERR_VALIDATION);
  CHECK(res == nullptr);
  specres_system_free(pair);

  specres_system_free(sys);
}

TEST_CASE("the family entry point produces histograms") {
  char err[512] = {0};
  specres_system_t* sys = nullptr;
  REQUIRE(specres_system_load_file(fixture("line_family.json").c_str(), &sys, err, sizeof err) ==
          SPECRES_OK);

  specres_result_t* res = nullptr;
  REQUIRE(specres_family(sys, 201, 64, &res, err, sizeof err) == SPECRES_OK);
  CHECK(specres_result_status(res) == 0);
  const std::string csv = specres_result_csv(res);
  CHECK(count_lines(csv) == 65);  // header + 64 bins
  CHECK(csv.rfind("family,bin_left,bin_right,count\n", 0) == 0);
  specres_result_free(res);

  res = nullptr;
  CHECK(specres_family(sys, 1, 8, &res, err, sizeof err) == SPECRES_ERR_VALIDATION);
  CHECK(res == nullptr);

  specres_system_free(sys);
}

TEST_CASE("the command line drives the same reports") {
  const CliRun version = run_cli("version");
  CHECK(version.exit_code == 0);
  CHECK(version.output.find("specres 0.1.0") != std::string::npos);

  const CliRun text = run_cli("analyze --format text " + fixture("coupled_diagonal_pair.json"));
  CHECK(text.exit_code == 0);
  CHECK(text.output.find("interaction residue") != std::string::npos);

  const CliRun json = run_cli("analyze " + fixture("coupled_diagonal_pair.json"));
  CHECK(json.exit_code == 0);
  REQUIRE_FALSE(json.output.empty());
  CHECK(json.output[0] == '{');

  const CliRun missing = run_cli("analyze /nonexistent/system.json");
  CHECK(missing.exit_code == 1);
  CHECK(missing.output.find("error") != std::string::npos);

  const CliRun violated =
      run_cli("sweep --steps 4 --delta 10 " + fixture("jordan_perturb.json"));
  CHECK(violated.exit_code == 2);

  const std::string csv_path = "/tmp/specres_capi_family.csv";
  std::remove(csv_path.c_str());
  const CliRun fam = run_cli("family --samples 51 --bins 8 --csv " + csv_path + " " +
                             fixture("line_family.json"));
  CHECK(fam.exit_code == 0);
  const std::string table = slurp(csv_path);
  CHECK(count_lines(table) == 9);
  CHECK(table.rfind("family,bin_left,bin_right,count\n", 0) == 0);
  std::remove(csv_path.c_str());

  CHECK(run_cli("bogus-subcommand").exit_code != 0);
  CHECK(run_cli("").exit_code != 0);
}
