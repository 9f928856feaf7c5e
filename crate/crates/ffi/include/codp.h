#ifndef CODP_H
#define CODP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CodpStatus {
  CODP_STATUS_OK = 0,
  CODP_STATUS_NULL_POINTER = 1,
  CODP_STATUS_INVALID_ARGUMENT = 2,
  CODP_STATUS_OUT_OF_SEQUENCE = 3,
  CODP_STATUS_CAPACITY_EXCEEDED = 4,
  CODP_STATUS_IO = 5,
  CODP_STATUS_PANIC = 6,
} CodpStatus;

/**
 * Opaque private heavy-hitter tracker.
 */
typedef struct CodpHeavyHitters CodpHeavyHitters;

/**
 * Opaque frequency sketch: any of cms, cs, lazy-cms, lazy-cs, punctual-cms,
 * punctual-cs.
 */
typedef struct CodpSketch CodpSketch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t codp_last_error(char *buf, size_t len);

/**
 * Gaussian binary-mechanism noise scale for `capacity` arrivals and
 * per-arrival L2 sensitivity `sensitivity`.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum CodpStatus codp_calibrate_sigma(uint64_t capacity,
                                     double epsilon,
                                     double delta,
                                     uint32_t sensitivity,
                                     double *out);

/**
 * 64-bit key for a trace token, identical to the CLI's trace ingestion.
 *
 * # Safety
 * `token` must point to `len` readable bytes of UTF-8.
 */
enum CodpStatus codp_key_from_token(const char *token, size_t len, uint64_t *out);

/**
 * Creates a sketch. `kind` is a NUL-terminated name such as `"lazy-cms"`;
 * `capacity` bounds the number of arrivals (ignored by plain sketches).
 *
 * # Safety
 * `kind` must be a valid C string and `out` a valid pointer.
 */
enum CodpStatus codp_sketch_new(const char *kind,
                                size_t depth,
                                size_t width,
                                uint64_t capacity,
                                double epsilon,
                                double delta,
                                uint64_t seed,
                                struct CodpSketch **out);

/**
 * Records one arrival of `key`.
 *
 * # Safety
 * `sketch` must be a live handle from [`codp_sketch_new`].
 */
enum CodpStatus codp_sketch_update(struct CodpSketch *sketch, uint64_t key);

/**
 * Current (released) frequency estimate of `key`.
 *
 * # Safety
 * `sketch` must be a live handle and `out` a valid pointer.
 */
enum CodpStatus codp_sketch_query(const struct CodpSketch *sketch, uint64_t key, double *out);

/**
 * Memory footprint in 8-byte words.
 *
 * # Safety
 * `sketch` must be a live handle and `out` a valid pointer.
 */
enum CodpStatus codp_sketch_memory_words(const struct CodpSketch *sketch, size_t *out);

/**
 * Releases a sketch. Null is ignored.
 *
 * # Safety
 * `sketch` must be null or a handle not yet freed.
 */
void codp_sketch_free(struct CodpSketch *sketch);

/**
 * Creates a heavy-hitter tracker for at most `capacity` arrivals.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CodpStatus codp_hh_new(size_t k,
                            size_t k_tilde,
                            uint64_t capacity,
                            double epsilon,
                            double delta,
                            double beta,
                            uint64_t seed,
                            struct CodpHeavyHitters **out);

/**
 * Records one arrival of `key`.
 *
 * # Safety
 * `hh` must be a live handle from [`codp_hh_new`].
 */
enum CodpStatus codp_hh_update(struct CodpHeavyHitters *hh, uint64_t key);

/**
 * Time of the current report and its number of items.
 *
 * # Safety
 * `hh` must be a live handle; `t` and `len` valid pointers.
 */
enum CodpStatus codp_hh_report_len(const struct CodpHeavyHitters *hh, uint64_t *t, size_t *len);

/**
 * Copies up to `cap` report items (estimate-descending) into `keys` and
 * `estimates`; the number copied is stored in `written`.
 *
 * # Safety
 * `keys` and `estimates` must each point to `cap` writable elements.
 */
enum CodpStatus codp_hh_report_items(const struct CodpHeavyHitters *hh,
                                     uint64_t *keys,
                                     double *estimates,
                                     size_t cap,
                                     size_t *written);

/**
 * Releases a tracker. Null is ignored.
 *
 * # Safety
 * `hh` must be null or a handle not yet freed.
 */
void codp_hh_free(struct CodpHeavyHitters *hh);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CODP_H */
