#ifndef GAPLAB_H
#define GAPLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `flavor` argument: 0 for permutation (covers), 1 for unitary (bundles).
 */
#define GAPLAB_FLAVOR_PERMUTATION 0

#define GAPLAB_FLAVOR_UNITARY 1

/**
 * Result code of every fallible call.
 */
typedef enum GaplabStatus {
  GAPLAB_STATUS_OK = 0,
  GAPLAB_STATUS_NULL_POINTER = 1,
  GAPLAB_STATUS_INVALID_ARGUMENT = 2,
  GAPLAB_STATUS_DOMAIN = 3,
  GAPLAB_STATUS_BUDGET = 4,
  GAPLAB_STATUS_CONVERGENCE = 5,
  GAPLAB_STATUS_NUMERIC = 6,
  GAPLAB_STATUS_PARSE = 7,
  GAPLAB_STATUS_INTERNAL = 99,
} GaplabStatus;

/**
 * Finitely supported matrix-valued coefficient map.
 */
typedef struct GaplabCoeffMap GaplabCoeffMap;

/**
 * Fuchsian surface model.
 */
typedef struct GaplabModel GaplabModel;

/**
 * Sampled representation of the free group.
 */
typedef struct GaplabRep GaplabRep;

/**
 * Rate schedule at a given n.
 */
typedef struct GaplabSchedule {
  double t;
  double kappa;
  double s_min;
  double gap_bound;
} GaplabSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gaplab_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * excluding the terminator, or 0 when no error is stored.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t gaplab_last_error(char *buf, size_t len);

/**
 * Samples a representation of F_d on ℂⁿ.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GaplabStatus gaplab_rep_sample(uint32_t flavor_code,
                                    size_t n,
                                    size_t d,
                                    uint64_t seed,
                                    struct GaplabRep **out);

/**
 * # Safety
 * `rep` must be null or a handle from [`gaplab_rep_sample`] not yet freed.
 */
void gaplab_rep_free(struct GaplabRep *rep);

/**
 * Dimension n of the representation.
 *
 * # Safety
 * `rep` and `out` must be valid.
 */
enum GaplabStatus gaplab_rep_dim(const struct GaplabRep *rep, size_t *out);

/**
 * Whether a permutation representation acts transitively.
 *
 * # Safety
 * `rep` and `out` must be valid.
 */
enum GaplabStatus gaplab_rep_is_transitive(const struct GaplabRep *rep, bool *out);

/**
 * Empty coefficient map with m×m coefficients.
 *
 * # Safety
 * `out` must be valid.
 */
enum GaplabStatus gaplab_coeff_new(size_t m, struct GaplabCoeffMap **out);

/**
 * ∑ (g_i + g_i⁻¹) with scalar coefficients.
 *
 * # Safety
 * `out` must be valid.
 */
enum GaplabStatus gaplab_coeff_generator_sum(size_t d, struct GaplabCoeffMap **out);

/**
 * Adds the m×m matrix (`re` + i·`im`, row-major) at the reduced form of the
 * word `letters[0..len]` over rank `rank`. Letters are ±1..=±rank.
 *
 * # Safety
 * `map` must be valid; `letters` valid for `len` entries (or null when
 * `len == 0`); `re` and `im` valid for m² entries.
 */
enum GaplabStatus gaplab_coeff_insert(struct GaplabCoeffMap *map,
                                      const int32_t *letters,
                                      size_t len,
                                      size_t rank,
                                      const double *re,
                                      const double *im);

/**
 * Number of words in the support.
 *
 * # Safety
 * `map` and `out` must be valid.
 */
enum GaplabStatus gaplab_coeff_len(const struct GaplabCoeffMap *map, size_t *out);

/**
 * New map (a + a*)/2 with a*_γ = (a_{γ⁻¹})*.
 *
 * # Safety
 * `map` and `out` must be valid.
 */
enum GaplabStatus gaplab_coeff_hermitize(const struct GaplabCoeffMap *map,
                                         struct GaplabCoeffMap **out);

/**
 * # Safety
 * `map` must be null or a live coefficient-map handle.
 */
void gaplab_coeff_free(struct GaplabCoeffMap *map);

/**
 * Operator norm of ∑ a_γ ⊗ ρ(γ), on the zero-mean subspace when requested.
 *
 * # Safety
 * `map`, `rep` and `out` must be valid.
 */
enum GaplabStatus gaplab_operator_norm(const struct GaplabCoeffMap *map,
                                       const struct GaplabRep *rep,
                                       bool zero_mean,
                                       double tol,
                                       uint64_t seed,
                                       double *out);

/**
 * Lower bound for the norm in the regular representation from the
 * compression to the ball of radius `radius`.
 *
 * # Safety
 * `map` and `out` must be valid.
 */
enum GaplabStatus gaplab_regular_norm_lower(const struct GaplabCoeffMap *map,
                                            size_t radius,
                                            double tol,
                                            double *out);

/**
 * The built-in punctured-torus model.
 *
 * # Safety
 * `out` must be valid.
 */
enum GaplabStatus gaplab_model_punctured_torus(struct GaplabModel **out);

/**
 * Model from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid.
 */
enum GaplabStatus gaplab_model_from_json(const char *json, struct GaplabModel **out);

/**
 * # Safety
 * `model` must be null or a live model handle.
 */
void gaplab_model_free(struct GaplabModel *model);

/**
 * |S(T)| for the model at the given κ and geometric constant.
 *
 * # Safety
 * `model` and `out` must be valid.
 */
enum GaplabStatus gaplab_lattice_count(const struct GaplabModel *model,
                                       double t,
                                       double kappa,
                                       double c_geo,
                                       size_t *out);

/**
 * Resolvent kernel R(s; r) of the hyperbolic plane.
 *
 * # Safety
 * `out` must be valid.
 */
enum GaplabStatus gaplab_resolvent_kernel(double s, double r, double *out);

/**
 * Remainder kernel at truncation time T, supported on [T, T+1].
 *
 * # Safety
 * `out` must be valid.
 */
enum GaplabStatus gaplab_remainder_kernel(double s, double t, double r, double *out);

/**
 * Rate schedule at n = 10^`log10_n`.
 *
 * # Safety
 * `out` must be valid.
 */
enum GaplabStatus gaplab_rate_schedule(uint32_t flavor_code,
                                       double log10_n,
                                       size_t d,
                                       struct GaplabSchedule *out);

/**
 * Whether norm_int + norm_cusp < 1.
 *
 * # Safety
 * `out` must be valid.
 */
enum GaplabStatus gaplab_neumann_verdict(double norm_int, double norm_cusp, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAPLAB_H */
