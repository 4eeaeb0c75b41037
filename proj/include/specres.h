/*
 * C interface to the specres library: interaction residues of stratified
 * block-operator systems.
 *
 * All fallible entry points return SPECRES_OK (0) on success or a
 * negative error code, and write a NUL-terminated message into the
 * caller-supplied (err, err_len) buffer when one is given.  Objects are
 * opaque handles created by this library and released with the matching
 * *_free function; handles are never shared between the two types.
 */
#ifndef SPECRES_H
#define SPECRES_H

#include <stddef.h>

#if defined(_WIN32)
#define SPECRES_API
#else
#define SPECRES_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  SPECRES_OK = 0,
  SPECRES_ERR_INVALID_ARGUMENT = -1, /* null/invalid handle, unknown mode string */
  SPECRES_ERR_VALIDATION = -2,       /* input rejected: schema, dimensions, ids */
  SPECRES_ERR_NUMERICAL = -3,        /* computation refused: ill-conditioning, ambiguity */
  SPECRES_ERR_PARSE = -4,            /* malformed JSON or expression text */
  SPECRES_ERR_IO = -5,               /* file could not be read */
  SPECRES_ERR_INTERNAL = -6          /* unexpected failure; please report */
};

typedef struct specres_system_t specres_system_t;
typedef struct specres_result_t specres_result_t;

/* Library version, e.g. "0.1.0".  Static storage; do not free. */
SPECRES_API const char* specres_version(void);

/* Load a stratified system from a JSON file / JSON text (see README for
 * the schema).  On success *out owns the system. */
SPECRES_API int specres_system_load_file(const char* path, specres_system_t** out, char* err,
                                         size_t err_len);
SPECRES_API int specres_system_load_json(const char* text, specres_system_t** out, char* err,
                                         size_t err_len);
SPECRES_API void specres_system_free(specres_system_t* sys);

/* Residue + attribution + spectral structure.
 * mode: "leave-one-out" (default when NULL) or "tau-support".
 * tol <= 0 selects the system's (possibly automatic) matching tolerance. */
SPECRES_API int specres_analyze(const specres_system_t* sys, const char* mode, double tol,
                                specres_result_t** out, char* err, size_t err_len);

/* Deformation sweep over t in [0,1] with `steps` uniform increments.
 * default_rule ("linear" when NULL) applies to couplings without their
 * own rule; beta0_gap 0 = automatic; delta > 0 additionally checks that
 * the residue keeps at least that distance from the local spectra. */
SPECRES_API int specres_sweep(const specres_system_t* sys, int steps, const char* default_rule,
                              double beta0_gap, double delta, specres_result_t** out, char* err,
                              size_t err_len);

/* Interface family sampling: support bands, density histogram, critical
 * values, coverage of the local spectra. */
SPECRES_API int specres_family(const specres_system_t* sys, int samples, int bins,
                               specres_result_t** out, char* err, size_t err_len);

/* Result payloads.  Pointers stay valid until specres_result_free and
 * must not be freed by the caller; NULL on an invalid handle.  csv is ""
 * for commands without a tabular payload. */
SPECRES_API const char* specres_result_json(const specres_result_t* result);
SPECRES_API const char* specres_result_text(const specres_result_t* result);
SPECRES_API const char* specres_result_csv(const specres_result_t* result);

/* 0 = clean; 2 = report produced but a declared condition failed
 * (unattributed residue points, violated gap threshold); -1 = invalid
 * handle. */
SPECRES_API int specres_result_status(const specres_result_t* result);
SPECRES_API void specres_result_free(specres_result_t* result);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPECRES_H */
