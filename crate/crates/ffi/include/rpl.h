#ifndef RPL_H
#define RPL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RplStatus {
  RPL_STATUS_OK = 0,
  RPL_STATUS_NULL_POINTER = 1,
  RPL_STATUS_INVALID_INPUT = 2,
  /**
   * The requested object does not exist (no tree, no realization).
   */
  RPL_STATUS_ABSENT = 3,
  RPL_STATUS_BUDGET_EXHAUSTED = 4,
  /**
   * The output buffer is too small; the needed length was written.
   */
  RPL_STATUS_BUFFER_TOO_SMALL = 5,
  RPL_STATUS_INTERNAL = 6,
} RplStatus;

/**
 * Opaque finite coloring handle.
 */
typedef struct RplColoring RplColoring;

/**
 * Opaque permutation handle.
 */
typedef struct RplPermutation RplPermutation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *rpl_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void rpl_string_free(char *s);

/**
 * Parses a permutation such as `"2031"` or `"10,0,3,..."`.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` writable.
 */
enum RplStatus rpl_permutation_parse(const char *text, struct RplPermutation **out);

/**
 * The `k`-fractal of dimension `n`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RplStatus rpl_fractal_new(uintptr_t k, uintptr_t n, struct RplPermutation **out);

/**
 * # Safety
 * `p` must be null or a live handle from this library.
 */
void rpl_permutation_free(struct RplPermutation *p);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum RplStatus rpl_permutation_len(const struct RplPermutation *p, uintptr_t *out);

/**
 * Text form of the permutation; free with [`rpl_string_free`].
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum RplStatus rpl_permutation_to_string(const struct RplPermutation *p, char **out);

/**
 * Separating tree term such as `(-(+(0,0),+(0,0)))`; `Absent` when the
 * permutation is not separable.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum RplStatus rpl_permutation_separating_term(const struct RplPermutation *p, char **out);

/**
 * Parses a coloring in the text format (`N`, then one row of bits per vertex).
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` writable.
 */
enum RplStatus rpl_coloring_parse(const char *text, struct RplColoring **out);

/**
 * Coloring induced by a permutation: a pair is 0 when the earlier value is smaller.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum RplStatus rpl_coloring_from_permutation(const struct RplPermutation *p,
                                             struct RplColoring **out);

/**
 * # Safety
 * `f` must be null or a live handle from this library.
 */
void rpl_coloring_free(struct RplColoring *f);

/**
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum RplStatus rpl_coloring_size(const struct RplColoring *f, uintptr_t *out);

/**
 * Color of the pair `x < y`.
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum RplStatus rpl_coloring_color(const struct RplColoring *f,
                                  uintptr_t x,
                                  uintptr_t y,
                                  uint8_t *out);

/**
 * Lexicographically first set of vertices realizing the pattern of `p`.
 *
 * On `Ok` the vertices are written to `buf` and their count to `len`. When
 * `cap` is too small, `BufferTooSmall` is returned with `len` set to the
 * needed length.
 *
 * # Safety
 * `f` and `p` must be live handles, `buf` must hold `cap` entries, `len` writable.
 */
enum RplStatus rpl_find_realization(const struct RplColoring *f,
                                    const struct RplPermutation *p,
                                    uint64_t budget,
                                    uintptr_t *buf,
                                    uintptr_t cap,
                                    uintptr_t *len);

/**
 * Whether the strictly increasing set of `len` values is `ω^n`-large.
 *
 * # Safety
 * `set` must hold `len` entries and `out` be writable.
 */
enum RplStatus rpl_is_omega_n_large(const uintptr_t *set, uintptr_t len, uintptr_t n, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RPL_H */
