#include "specres.h"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <new>
#include <string>
#include <utility>

#include "specres/io.hpp"

namespace {

constexpr std::uint32_t kSystemMagic = 0x53595331;  // "SYS1"
constexpr std::uint32_t kResultMagic = 0x52455331;  // "RES1"
constexpr std::uint32_t kFreedMagic = 0xDEADDEAD;

void write_err(char* err, size_t err_len, const char* msg) {
  if (err == nullptr || err_len == 0) return;
  std::snprintf(err, err_len, "%s", msg);
}

}  // namespace

struct specres_system_t {
  std::uint32_t magic = kSystemMagic;
  specres::StratifiedSystem system;
  std::string raw;  // original input bytes, for report digests

  specres_system_t(specres::StratifiedSystem s, std::string r)
      : system(std::move(s)), raw(std::move(r)) {}
};

struct specres_result_t {
  std::uint32_t magic = kResultMagic;
  specres::ReportBundle bundle;

  explicit specres_result_t(specres::ReportBundle b) : bundle(std::move(b)) {}
};

namespace {

bool valid(const specres_system_t* s) { return s != nullptr && s->magic == kSystemMagic; }
bool valid(const specres_result_t* r) { return r != nullptr && r->magic == kResultMagic; }

template <typename F>
int guarded(char* err, size_t err_len, F&& f) {
  try {
    return f();
  } catch (const specres::ParseError& e) {
    write_err(err, err_len, e.what());
    return SPECRES_ERR_PARSE;
  } catch (const specres::ValidationError& e) {
    write_err(err, err_len, e.what());
    return SPECRES_ERR_VALIDATION;
  } catch (const specres::NumericalError& e) {
    write_err(err, err_len, e.what());
    return SPECRES_ERR_NUMERICAL;
  } catch (const specres::EvalError& e) {
    write_err(err, err_len, e.what());
    return SPECRES_ERR_VALIDATION;
  } catch (const specres::Error& e) {
    write_err(err, err_len, e.what());
    return SPECRES_ERR_INTERNAL;
  } catch (const std::bad_alloc&) {
    write_err(err, err_len, "out of memory");
    return SPECRES_ERR_INTERNAL;
  } catch (const std::exception& e) {
    write_err(err, err_len, e.what());
    return SPECRES_ERR_INTERNAL;
  }
}

int load_from_text(std::string text, specres_system_t** out, char* err, size_t err_len) {
  return guarded(err, err_len, [&]() -> int {
    specres::StratifiedSystem sys = specres::load_system_json(text);
    *out = new specres_system_t(std::move(sys), std::move(text));
    return SPECRES_OK;
  });
}

}  // namespace

extern "C" {

const char* specres_version(void) {
  static const std::string v = specres::library_version();
  return v.c_str();
}

int specres_system_load_file(const char* path, specres_system_t** out, char* err,
                             size_t err_len) {
  if (path == nullptr || out == nullptr) {
    write_err(err, err_len, "null argument");
    return SPECRES_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    write_err(err, err_len, (std::string("cannot open '") + path + "'").c_str());
    return SPECRES_ERR_IO;
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_from_text(std::move(text), out, err, err_len);
}

int specres_system_load_json(const char* text, specres_system_t** out, char* err,
                             size_t err_len) {
  if (text == nullptr || out == nullptr) {
    write_err(err, err_len, "null argument");
    return SPECRES_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return load_from_text(text, out, err, err_len);
}

void specres_system_free(specres_system_t* sys) {
  if (!valid(sys)) return;
  sys->magic = kFreedMagic;
  delete sys;
}

int specres_analyze(const specres_system_t* sys, const char* mode, double tol,
                    specres_result_t** out, char* err, size_t err_len) {
  if (!valid(sys) || out == nullptr) {
    write_err(err, err_len, "invalid system handle or null output pointer");
    return SPECRES_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  specres::AnalyzeOptions opt;
  opt.tol = tol;
  if (mode != nullptr) {
    const std::string m = mode;
    if (m == "leave-one-out" || m == "leave_one_out") {
      opt.mode = specres::AttributionMode::leave_one_out;
    } else if (m == "tau-support" || m == "tau_support") {
      opt.mode = specres::AttributionMode::tau_support;
    } else {
      write_err(err, err_len,
                ("unknown mode '" + m + "' (expected leave-one-out or tau-support)").c_str());
      return SPECRES_ERR_INVALID_ARGUMENT;
    }
  }
  return guarded(err, err_len, [&]() -> int {
    *out = new specres_result_t(specres::run_analyze(sys->system, sys->raw, opt));
    return SPECRES_OK;
  });
}

int specres_sweep(const specres_system_t* sys, int steps, const char* default_rule,
                  double beta0_gap, double delta, specres_result_t** out, char* err,
                  size_t err_len) {
  if (!valid(sys) || out == nullptr) {
    write_err(err, err_len, "invalid system handle or null output pointer");
    return SPECRES_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  specres::SweepOptions opt;
  opt.steps = steps;
  opt.rule = default_rule != nullptr ? default_rule : "linear";
  opt.beta0_gap = beta0_gap;
  opt.delta = delta;
  return guarded(err, err_len, [&]() -> int {
    *out = new specres_result_t(specres::run_sweep_cmd(sys->system, sys->raw, opt));
    return SPECRES_OK;
  });
}

int specres_family(const specres_system_t* sys, int samples, int bins, specres_result_t** out,
                   char* err, size_t err_len) {
  if (!valid(sys) || out == nullptr) {
    write_err(err, err_len, "invalid system handle or null output pointer");
    return SPECRES_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  specres::FamilyOptions opt;
  opt.samples = samples;
  opt.bins = bins;
  return guarded(err, err_len, [&]() -> int {
    *out = new specres_result_t(specres::run_family_cmd(sys->system, sys->raw, opt));
    return SPECRES_OK;
  });
}

const char* specres_result_json(const specres_result_t* result) {
  return valid(result) ? result->bundle.json.c_str() : nullptr;
}

const char* specres_result_text(const specres_result_t* result) {
  return valid(result) ? result->bundle.text.c_str() : nullptr;
}

const char* specres_result_csv(const specres_result_t* result) {
  return valid(result) ? result->bundle.csv.c_str() : nullptr;
}

int specres_result_status(const specres_result_t* result) {
  return valid(result) ? result->bundle.status : -1;
}

void specres_result_free(specres_result_t* result) {
  if (!valid(result)) return;
  result->magic = kFreedMagic;
  delete result;
}

}  // extern "C"
