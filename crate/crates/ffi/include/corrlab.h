#ifndef CORRLAB_H
#define CORRLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result of every call.
 */
typedef enum CorrlabStatus {
  CORRLAB_STATUS_OK = 0,
  /*
   A required pointer argument was NULL.
   */
  CORRLAB_STATUS_NULL_ARGUMENT = 1,
  /*
   An input string was not UTF-8.
   */
  CORRLAB_STATUS_INVALID_UTF8 = 2,
  /*
   Input was empty or not JSON.
   */
  CORRLAB_STATUS_PARSE = 3,
  /*
   JSON did not match the expected document layout.
   */
  CORRLAB_STATUS_SCHEMA = 4,
  /*
   The data describe no valid algebra, map or module.
   */
  CORRLAB_STATUS_INVALID_INPUT = 5,
  /*
   A coherence condition such as a pentagon or unit condition failed.
   */
  CORRLAB_STATUS_INVARIANT_VIOLATED = 6,
  /*
   A horn could not be filled.
   */
  CORRLAB_STATUS_UNFILLABLE = 7,
  /*
   A dimension or index was out of the supported range.
   */
  CORRLAB_STATUS_OUT_OF_RANGE = 8,
  /*
   The call completed but reported failed checks.
   */
  CORRLAB_STATUS_CHECK_FAILED = 9,
  /*
   An internal error; the library state is unaffected.
   */
  CORRLAB_STATUS_PANIC = 10,
} CorrlabStatus;

/*
 An `n`-simplex of the correspondence nerve.
 */
typedef struct CorrlabSimplex CorrlabSimplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static nul-terminated string.
 */
const char *corrlab_version(void);

/*
 Message of the last failed call on this thread, or NULL. The pointer is
 valid until the next call into the library on the same thread.
 */
const char *corrlab_last_error(void);

/*
 Releases a string returned by the library.

 # Safety
 `s` is NULL or a string obtained from this library and not yet freed.
 */
void corrlab_string_free(char *s);

/*
 Parses and validates an `ncorr_simplex` document.

 # Safety
 `json` is a nul-terminated string; `out` is writable.
 */
enum CorrlabStatus corrlab_simplex_from_json(const char *json, struct CorrlabSimplex **out);

/*
 Serialises a simplex.

 # Safety
 `s` is a live handle; `out` is writable.
 */
enum CorrlabStatus corrlab_simplex_to_json(const struct CorrlabSimplex *s, char **out);

/*
 Dimension of a simplex.

 # Safety
 `s` is a live handle; `out` is writable.
 */
enum CorrlabStatus corrlab_simplex_dim(const struct CorrlabSimplex *s, size_t *out);

/*
 The face `d_i`.

 # Safety
 `s` is a live handle; `out` is writable.
 */
enum CorrlabStatus corrlab_simplex_face(const struct CorrlabSimplex *s,
                                        size_t i,
                                        struct CorrlabSimplex **out);

/*
 The degeneracy `s_i`.

 # Safety
 `s` is a live handle; `out` is writable.
 */
enum CorrlabStatus corrlab_simplex_degeneracy(const struct CorrlabSimplex *s,
                                              size_t i,
                                              struct CorrlabSimplex **out);

/*
 Frobenius distance between two simplices with the same shape, or
 infinity when the shapes differ.

 # Safety
 `a` and `b` are live handles; `out` is writable.
 */
enum CorrlabStatus corrlab_simplex_distance(const struct CorrlabSimplex *a,
                                            const struct CorrlabSimplex *b,
                                            double *out);

/*
 Releases a simplex handle.

 # Safety
 `s` is NULL or a handle from this library and not yet freed.
 */
void corrlab_simplex_free(struct CorrlabSimplex *s);

/*
 A random simplex of dimension `dim ≤ 3`: the image of a random chain of
 *-homomorphisms, twisted by random unitaries when `gauged` is nonzero.

 # Safety
 `out` is writable.
 */
enum CorrlabStatus corrlab_random_simplex(uint64_t seed,
                                          size_t dim,
                                          bool gauged,
                                          struct CorrlabSimplex **out);

/*
 Validates any document and writes the JSON report to `report`.
 Returns [`CorrlabStatus::CheckFailed`] when some invariant exceeds `eps`.

 # Safety
 `json` is a nul-terminated string; `report` is writable.
 */
enum CorrlabStatus corrlab_validate_json(const char *json, double eps, char **report);

/*
 Γ of a `star_hom` document, as a `correspondence` document.

 # Safety
 `hom_json` is a nul-terminated string; `out` is writable.
 */
enum CorrlabStatus corrlab_gamma_json(const char *hom_json, char **out);

/*
 Fills an inner or special outer horn given as a `horn` document.

 # Safety
 `horn_json` is a nul-terminated string; `out` is writable.
 */
enum CorrlabStatus corrlab_fill_horn_json(const char *horn_json, struct CorrlabSimplex **out);

/*
 The extension of K₀ evaluated on `s`, as JSON integer matrices.

 # Safety
 `s` is a live handle; `out` is writable.
 */
enum CorrlabStatus corrlab_extend_k0(const struct CorrlabSimplex *s, bool guided, char **out);

/*
 The extension of Γ evaluated on `s`; with `guided`, special horns are
 filled through `s` itself.

 # Safety
 `s` is a live handle; `out` is writable.
 */
enum CorrlabStatus corrlab_extend_gamma(const struct CorrlabSimplex *s,
                                        bool guided,
                                        struct CorrlabSimplex **out);

/*
 Runs one self-test suite (`suite` in 1..=10) or all of them (`suite`
 = 0) and writes the JSON report. Returns [`CorrlabStatus::CheckFailed`]
 when a suite fails.

 # Safety
 `out` is writable.
 */
enum CorrlabStatus corrlab_selftest(uint64_t seed,
                                    double eps,
                                    bool quick,
                                    size_t suite,
                                    char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRLAB_H */
