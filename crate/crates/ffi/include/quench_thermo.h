#ifndef QUENCH_THERMO_H
#define QUENCH_THERMO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QtStatus {
  QT_STATUS_OK = 0,
  QT_STATUS_INVALID_ARGUMENT = 1,
  QT_STATUS_DOMAIN_ERROR = 2,
  QT_STATUS_NUMERICAL_ERROR = 3,
  QT_STATUS_NULL_POINTER = 4,
  QT_STATUS_PANIC = 5,
} QtStatus;

typedef enum QtTcMethod {
  QT_TC_METHOD_EXACT = 0,
  QT_TC_METHOD_APPROX = 1,
} QtTcMethod;

/**
 * Opaque Gaussian kernel.
 */
typedef struct QtKernel QtKernel;

/**
 * Opaque quench parameters.
 */
typedef struct QtQuench QtQuench;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *qt_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qt_version(void);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum QtStatus qt_quench_new(double k0_i,
                            double k0_f,
                            double j_i,
                            double j_f,
                            struct QtQuench **out);

/**
 * # Safety
 * `q` must be NULL or a handle from [`qt_quench_new`] not yet freed.
 */
void qt_quench_free(struct QtQuench *q);

/**
 * Writes (omega1_i, omega1_f, omega2_i, omega2_f).
 *
 * # Safety
 * `q` must be a live handle and `out` must point to four doubles.
 */
enum QtStatus qt_quench_normal_modes(const struct QtQuench *q, double *out);

/**
 * Purity tr ρ² of the coupled thermal state at inverse temperature `beta`.
 *
 * # Safety
 * `q` must be a live handle and `out` a valid pointer.
 */
enum QtStatus qt_purity(const struct QtQuench *q, double beta, double *out);

/**
 * Rényi entropy of order `alpha` (1 gives von Neumann).
 *
 * # Safety
 * `q` must be a live handle and `out` a valid pointer.
 */
enum QtStatus qt_entropy(const struct QtQuench *q, double beta, double alpha, double *out);

/**
 * # Safety
 * `q` must be a live handle and `out` a valid pointer.
 */
enum QtStatus qt_mutual_information(const struct QtQuench *q, double beta, double *out);

/**
 * Negativity-like quantity N of the coupled state.
 *
 * # Safety
 * `q` must be a live handle and `out` a valid pointer.
 */
enum QtStatus qt_negativity(const struct QtQuench *q, double beta, double *out);

/**
 * Temperature above which N vanishes for this quench.
 *
 * # Safety
 * `q` must be a live handle and `out` a valid pointer.
 */
enum QtStatus qt_critical_temperature(const struct QtQuench *q, double *out);

/**
 * Critical temperature of two unquenched normal modes.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QtStatus qt_critical_temperature_const(double omega1,
                                            double omega2,
                                            enum QtTcMethod method,
                                            double *out);

/**
 * Thermal density kernel of the coupled state.
 *
 * # Safety
 * `q` must be a live handle and `out` a valid pointer for one handle.
 */
enum QtStatus qt_thermal_kernel(const struct QtQuench *q, double beta, struct QtKernel **out);

/**
 * # Safety
 * `k` must be a live kernel handle and `out` a valid pointer for one handle.
 */
enum QtStatus qt_kernel_partial_transpose(const struct QtKernel *k, struct QtKernel **out);

/**
 * # Safety
 * `k` must be a live kernel handle and `out` a valid pointer.
 */
enum QtStatus qt_kernel_trace(const struct QtKernel *k, double *out);

/**
 * JSON form `{"dim", "norm", "Q"}`; release with [`qt_string_free`].
 *
 * # Safety
 * `k` must be a live kernel handle and `out` a valid pointer.
 */
enum QtStatus qt_kernel_to_json(const struct QtKernel *k, char **out);

/**
 * Parses a kernel from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QtStatus qt_kernel_from_json(const char *json, struct QtKernel **out);

/**
 * # Safety
 * `k` must be NULL or a kernel handle not yet freed.
 */
void qt_kernel_free(struct QtKernel *k);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void qt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUENCH_THERMO_H */
