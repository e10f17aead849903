/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef SIEPI_H
#define SIEPI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SiepiStatus {
  SIEPI_STATUS_OK = 0,
  SIEPI_STATUS_NULL_POINTER = 1,
  SIEPI_STATUS_INVALID_UTF8 = 2,
  SIEPI_STATUS_CONFIG = 3,
  SIEPI_STATUS_DOMAIN = 4,
  SIEPI_STATUS_NUMERIC = 5,
  SIEPI_STATUS_STIFF_FAILURE = 6,
  SIEPI_STATUS_NON_FINITE = 7,
  SIEPI_STATUS_ASSUMPTIONS = 8,
  SIEPI_STATUS_IO = 9,
  SIEPI_STATUS_OUT_OF_RANGE = 10,
  // The requested quantity does not exist for this run (e.g. no spectral results).
  SIEPI_STATUS_NOT_AVAILABLE = 11,
  SIEPI_STATUS_PANIC = 12,
} SiepiStatus;

typedef enum SiepiOutcomeKind {
  SIEPI_OUTCOME_KIND_DISEASE_FREE_LIMIT = 0,
  SIEPI_OUTCOME_KIND_EXTINCTION_BOTH = 1,
  SIEPI_OUTCOME_KIND_PERSISTENT = 2,
  SIEPI_OUTCOME_KIND_PERIODIC_CANDIDATE = 3,
  SIEPI_OUTCOME_KIND_UNDETERMINED = 4,
} SiepiOutcomeKind;

typedef enum SiepiIncidenceKind {
  // `S^q I^p`
  SIEPI_INCIDENCE_KIND_POWER = 0,
  // `S ln(1 + k I)`; `param` is `k`
  SIEPI_INCIDENCE_KIND_BINOMIAL = 1,
  // `S^q I^p / (1 + I^ℓ)`; `param` is `ℓ`
  SIEPI_INCIDENCE_KIND_SATURATED = 2,
  // `S^q I^p e^{-I} / (1 + I^ℓ)`; `param` is `ℓ`
  SIEPI_INCIDENCE_KIND_MEDIA = 3,
} SiepiIncidenceKind;

// Finished run: trajectory, classification and summary.
typedef struct SiepiRun SiepiRun;

// Resolved scenario configuration.
typedef struct SiepiScenario SiepiScenario;

typedef struct SiepiSpectral {
  double lambda0;
  double rho;
  // NaN when undefined (no recovery).
  double r0;
  size_t iterations;
  double residual;
} SiepiSpectral;

typedef struct SiepiOutcome {
  enum SiepiOutcomeKind kind;
  // `S*`, persistence floor or period residual; NaN when the outcome has none.
  double value;
  // Tail sup-norm monitor; NaN when the tail window was too short.
  double n_infinity;
  // Running sup-norm monitor over the whole run.
  double m_infinity;
  // NaN unless a periodicity check ran.
  double period_residual;
} SiepiOutcome;

typedef struct SiepiDiagnosticsRow {
  double t;
  double mass_s;
  double mass_i;
  double sup_s;
  double sup_i;
  double min_s;
  double min_i;
  double l2_s;
  double l2_i;
  double flat_s;
  double flat_i;
} SiepiDiagnosticsRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call into this library on the same thread.
const char *siepi_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *siepi_version(void);

// Parse a scenario from config text. Relative table paths resolve against the working directory.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum SiepiStatus siepi_scenario_from_str(const char *text, struct SiepiScenario **out);

// Load a built-in preset; `two_d` selects the square-domain variant.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum SiepiStatus siepi_scenario_from_preset(const char *name,
                                            bool two_d,
                                            struct SiepiScenario **out);

// Apply one `section.key=value` override in place.
//
// # Safety
// `scenario` must come from this library; `assignment` must be NUL-terminated.
enum SiepiStatus siepi_scenario_override(struct SiepiScenario *scenario, const char *assignment);

// # Safety
// `scenario` must come from this library and not be used afterwards. Null is ignored.
void siepi_scenario_free(struct SiepiScenario *scenario);

// Principal eigenvalue and R0 of the scenario's linearization.
//
// # Safety
// `scenario` must come from this library; `out` must be writable.
enum SiepiStatus siepi_scenario_spectral(const struct SiepiScenario *scenario,
                                         struct SiepiSpectral *out);

// Run the scenario. With a non-null `out_dir`, artifacts are written there.
//
// # Safety
// `scenario` must come from this library; `out_dir` is null or NUL-terminated; `out` must be writable.
enum SiepiStatus siepi_scenario_run(const struct SiepiScenario *scenario,
                                    const char *out_dir,
                                    struct SiepiRun **out);

// # Safety
// `run` must come from this library and not be used afterwards. Null is ignored.
void siepi_run_free(struct SiepiRun *run);

// # Safety
// `run` must come from this library; `out` must be writable.
enum SiepiStatus siepi_run_outcome(const struct SiepiRun *run, struct SiepiOutcome *out);

// Number of diagnostics rows; 0 for a null handle.
//
// # Safety
// `run` is null or comes from this library.
size_t siepi_run_row_count(const struct SiepiRun *run);

// # Safety
// `run` must come from this library; `out` must be writable.
enum SiepiStatus siepi_run_row(const struct SiepiRun *run,
                               size_t index,
                               struct SiepiDiagnosticsRow *out);

// Spectral results computed with the run (`μ ≡ 0`, `p = 1` only).
//
// # Safety
// `run` must come from this library; `out` must be writable.
enum SiepiStatus siepi_run_spectral(const struct SiepiRun *run, struct SiepiSpectral *out);

// Human-readable summary; owned by `run`.
//
// # Safety
// `run` is null or comes from this library. Returns null for a null handle.
const char *siepi_run_summary(const struct SiepiRun *run);

// SIS threshold `q^q (p-1)^{p-1} / (p-1+q)^{p-1+q} · N^{p-1+q}`; interior states exist when it exceeds `γ/β`.
//
// # Safety
// `out` must be writable.
enum SiepiStatus siepi_n_star(double p,
                              double q,
                              double n,
                              double *out);

// Upper bound on the time at which S reaches zero in the SI ODE.
//
// # Safety
// `out` must be writable.
enum SiepiStatus siepi_extinction_time_bound(double beta,
                                             double mu,
                                             double p,
                                             double q,
                                             double s0,
                                             double i0,
                                             double *out);

// Incidence kernel `K(S, I)` (without β). `param` is `k` or `ℓ` as the kind requires.
//
// # Safety
// `out` must be writable.
enum SiepiStatus siepi_evaluate_incidence(enum SiepiIncidenceKind kind,
                                          double q,
                                          double p,
                                          double param,
                                          double s,
                                          double i,
                                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIEPI_H */
