#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "specres.h"

namespace {

int print_error(const char* msg) {
  std::fprintf(stderr, "specres: error: %s\n", msg);
  return 1;
}

// Write-then-rename so readers never observe a half-written table.
bool write_file_atomic(const std::string& path, const char* data) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << data;
    if (!out.flush()) {
      std::remove(tmp.c_str());
      return false;
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interaction residues of stratified block-operator systems"};
  app.require_subcommand(1);

  std::string input;
  std::string mode = "leave-one-out";
  std::string format = "json";
  std::string rule = "linear";
  std::string csv_path;
  double tol = 0.0, beta0_gap = 0.0, delta = 0.0;
  int steps = 10, samples = 201, bins = 64;

  auto* analyze =
      app.add_subcommand("analyze", "Residue, attribution and spectral structure of a system");
  analyze->add_option("input", input, "system description (JSON)")->required();
  analyze->add_option("--mode", mode, "attribution mode (default leave-one-out)")
      ->check(CLI::IsMember({"leave-one-out", "tau-support"}));
  analyze->add_option("--tol", tol, "matching tolerance override (default: automatic)");
  analyze->add_option("--format", format, "report format (default json)")
      ->check(CLI::IsMember({"json", "text"}));

  auto* sweep = app.add_subcommand("sweep", "Deformation sweep of the coupling strengths");
  sweep->add_option("input", input, "system description (JSON)")->required();
  sweep->add_option("--steps", steps, "uniform steps on [0,1] (default 10)");
  sweep->add_option("--rule", rule,
                    "default deformation rule: linear, constant, or an expression in s");
  sweep->add_option("--beta0-gap", beta0_gap,
                    "clustering gap for residue component counts (default: automatic)");
  sweep->add_option("--delta", delta, "required minimum residue-to-local gap (default: off)");
  sweep->add_option("--csv", csv_path, "write the per-step table to this file");
  sweep->add_option("--format", format, "report format (default json)")
      ->check(CLI::IsMember({"json", "text"}));

  auto* family =
      app.add_subcommand("family", "Sample interface families and their spectral coverage");
  family->add_option("input", input, "system description (JSON)")->required();
  family->add_option("--samples", samples, "grid points per axis (default 201)");
  family->add_option("--bins", bins, "histogram bins (default 64)");
  family->add_option("--csv", csv_path, "write the density histogram to this file");
  family->add_option("--format", format, "report format (default json)")
      ->check(CLI::IsMember({"json", "text"}));

  auto* version = app.add_subcommand("version", "Print the library version");

  CLI11_PARSE(app, argc, argv);

  if (version->parsed()) {
    std::printf("specres %s\n", specres_version());
    return 0;
  }

  char err[1024] = {0};
  specres_system_t* sys = nullptr;
  if (specres_system_load_file(input.c_str(), &sys, err, sizeof err) != SPECRES_OK)
    return print_error(err);

  specres_result_t* res = nullptr;
  int rc = SPECRES_OK;
  if (analyze->parsed()) {
    rc = specres_analyze(sys, mode.c_str(), tol, &res, err, sizeof err);
  } else if (sweep->parsed()) {
    rc = specres_sweep(sys, steps, rule.c_str(), beta0_gap, delta, &res, err, sizeof err);
  } else {
    rc = specres_family(sys, samples, bins, &res, err, sizeof err);
  }
  if (rc != SPECRES_OK) {
    specres_system_free(sys);
    return print_error(err);
  }

  const char* payload =
      format == "text" ? specres_result_text(res) : specres_result_json(res);
  std::fputs(payload, stdout);

  int status = specres_result_status(res);
  if (!csv_path.empty()) {
    const char* csv = specres_result_csv(res);
    if (csv == nullptr || *csv == '\0') {
      std::fprintf(stderr, "specres: error: this command has no tabular payload\n");
      status = 1;
    } else if (!write_file_atomic(csv_path, csv)) {
      std::fprintf(stderr, "specres: error: cannot write '%s'\n", csv_path.c_str());
      status = 1;
    }
  }
  specres_result_free(res);
  specres_system_free(sys);
  return status;
}
