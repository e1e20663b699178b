#ifndef UCOH_H
#define UCOH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UcohStatus {
  UCOH_STATUS_OK = 0,
  UCOH_STATUS_PROPERTY_VIOLATED = 1,
  UCOH_STATUS_INVALID_INPUT = 2,
  UCOH_STATUS_NULL_POINTER = 3,
  UCOH_STATUS_INVALID_UTF8 = 4,
  UCOH_STATUS_PANIC = 5,
} UcohStatus;

/**
 * Opaque interaction handle.
 */
typedef struct UcohInteraction UcohInteraction;

/**
 * Opaque locale handle.
 */
typedef struct UcohLocale UcohLocale;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty when none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ucoh_last_error(void);

/**
 * Runs a command on a JSON manifest. `*report` receives a JSON document to
 * be released with [`ucoh_string_free`]; the status mirrors the CLI exit
 * code (0, 1 or 2).
 *
 * # Safety
 * `command` and `manifest` must be NUL-terminated strings; `report` must be
 * a valid pointer.
 */
enum UcohStatus ucoh_run(const char *command, const char *manifest, char **report);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void ucoh_string_free(char *s);

/**
 * Builds a catalog interaction such as `exclusion` or `multispecies:3`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum UcohStatus ucoh_interaction_new(const char *name, struct UcohInteraction **out);

/**
 * # Safety
 * `h` must come from [`ucoh_interaction_new`] and not have been freed.
 */
void ucoh_interaction_free(struct UcohInteraction *h);

/**
 * # Safety
 * `h` must be a live handle; `out` a valid pointer.
 */
enum UcohStatus ucoh_interaction_n_states(const struct UcohInteraction *h, size_t *out);

/**
 * Dimension `c_φ` of the conserved quantities.
 *
 * # Safety
 * `h` must be a live handle; `out` a valid pointer.
 */
enum UcohStatus ucoh_interaction_consv_dim(const struct UcohInteraction *h, size_t *out);

/**
 * Copies `ξ⁽ⁱ⁾(s)` for all states into `values`, which must hold
 * `n_states` entries.
 *
 * # Safety
 * `h` must be a live handle; `values` must point to `len` writable entries.
 */
enum UcohStatus ucoh_interaction_consv_vector(const struct UcohInteraction *h,
                                              size_t i,
                                              int64_t *values,
                                              size_t len);

/**
 * # Safety
 * `h` must be a live handle; `out` a valid pointer.
 */
enum UcohStatus ucoh_interaction_is_exchangeable(const struct UcohInteraction *h, bool *out);

/**
 * Parses a locale descriptor such as `{"kind":"euclidean","d":2}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum UcohStatus ucoh_locale_from_json(const char *json, struct UcohLocale **out);

/**
 * # Safety
 * `h` must come from [`ucoh_locale_from_json`] and not have been freed.
 */
void ucoh_locale_free(struct UcohLocale *h);

/**
 * Graph distance between two vertices given as coordinate arrays.
 *
 * # Safety
 * `h` must be a live handle; `x` and `y` must point to `len` entries each;
 * `out` must be a valid pointer.
 */
enum UcohStatus ucoh_locale_distance(const struct UcohLocale *h,
                                     const int64_t *x,
                                     const int64_t *y,
                                     size_t len,
                                     uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UCOH_H */
