#ifndef RULEFACTOR_H
#define RULEFACTOR_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible FFI call.
 */
typedef enum RfStatus {
  RF_STATUS_OK = 0,
  /**
   * A pointer argument was null or not valid UTF-8.
   */
  RF_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Rule or clustering text failed to parse or validate.
   */
  RF_STATUS_PARSE_ERROR = 2,
  /**
   * The requested clustering name is not loaded.
   */
  RF_STATUS_UNKNOWN_CLUSTERING = 3,
  /**
   * No rule activated for the record; no local explanation exists.
   */
  RF_STATUS_NO_ACTIVATION = 4,
  /**
   * Unknown normalization mode string.
   */
  RF_STATUS_BAD_NORMALIZE = 5,
  /**
   * Any other engine failure; see `rf_last_error`.
   */
  RF_STATUS_INTERNAL = 6,
} RfStatus;

/**
 * Opaque engine: a parsed rule set plus its validated clusterings.
 */
typedef struct RfEngine RfEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds an engine from rule DSL text and optional clustering text.
 *
 * `factors_text` may be null; the identity ("technical") clustering is
 * always available. On failure returns null and, if `error_out` is
 * non-null, stores a message there (free with `rf_string_free`).
 *
 * # Safety
 * `rules_text` must be a valid NUL-terminated UTF-8 string; the same
 * holds for `factors_text` when non-null.
 */
struct RfEngine *rf_engine_new(const char *rules_text, const char *factors_text, char **error_out);

/**
 * Releases an engine created by `rf_engine_new`.
 *
 * # Safety
 * `engine` must be a pointer previously returned by `rf_engine_new`,
 * not yet freed. Null is ignored.
 */
void rf_engine_free(struct RfEngine *engine);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must originate from this library. Null is ignored.
 */
void rf_string_free(char *s);

/**
 * Message describing the engine's most recent failure, or null.
 * The pointer stays valid until the next failing call on the engine.
 *
 * # Safety
 * `engine` must be a live engine pointer.
 */
const char *rf_last_error(const struct RfEngine *engine);

/**
 * Number of rules in the loaded model; 0 for a null engine.
 *
 * # Safety
 * `engine` must be a live engine pointer or null.
 */
uintptr_t rf_rule_count(const struct RfEngine *engine);

/**
 * Global explanation as a JSON document in `json_out`.
 *
 * `clustering` may be null (identity clustering); `normalize` may be
 * null ("literal").
 *
 * # Safety
 * `engine` must be a live engine pointer; string arguments follow the
 * `rf_engine_new` contract; `json_out` must be a valid pointer.
 */
enum RfStatus rf_explain_global_json(struct RfEngine *engine,
                                     const char *clustering,
                                     const char *normalize,
                                     char **json_out);

/**
 * Local explanation for a patient record given as JSON
 * (flat `{"ATTR": value}` or `{"id": ..., "values": {...}}`).
 *
 * # Safety
 * Same contract as `rf_explain_global_json`; `record_json` must be a
 * valid NUL-terminated UTF-8 string.
 */
enum RfStatus rf_explain_local_json(struct RfEngine *engine,
                                    const char *record_json,
                                    const char *clustering,
                                    const char *normalize,
                                    char **json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RULEFACTOR_H */
