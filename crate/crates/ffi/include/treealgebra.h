#ifndef TREEALGEBRA_H
#define TREEALGEBRA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum TaStatus {
  TA_STATUS_OK = 0,
  TA_STATUS_NULL_ARGUMENT = 1,
  TA_STATUS_INVALID_UTF8 = 2,
  TA_STATUS_PARSE_ERROR = 3,
  TA_STATUS_INVALID_INPUT = 4,
  TA_STATUS_SCHEMA_MISMATCH = 5,
  TA_STATUS_LEAF_KIND_MISMATCH = 6,
  TA_STATUS_BUDGET_EXCEEDED = 7,
  TA_STATUS_UNSUPPORTED_GEOMETRY = 8,
  TA_STATUS_DEGENERATE_CORRELATION = 9,
  TA_STATUS_INTERNAL = 10,
} TaStatus;

/**
 * Opaque probability measure handle.
 */
typedef struct TaMeasure TaMeasure;

/**
 * Opaque tree handle.
 */
typedef struct TaTree TaTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *ta_last_error_message(void);

/**
 * Parses a tree file (JSON text, NUL-terminated).
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be writable.
 */
enum TaStatus ta_tree_from_json(const char *json, struct TaTree **out);

/**
 * Serializes a tree; release the string with [`ta_string_free`].
 *
 * # Safety
 * `tree` must be a live handle; `out` must be writable.
 */
enum TaStatus ta_tree_to_json(const struct TaTree *tree, char **out);

/**
 * # Safety
 * `s` must come from this library and not have been freed; null is ignored.
 */
void ta_string_free(char *s);

/**
 * # Safety
 * `tree` must come from this library and not have been freed; null is ignored.
 */
void ta_tree_free(struct TaTree *tree);

/**
 * Number of nodes in the tree.
 *
 * # Safety
 * `tree` must be a live handle; `out` must be writable.
 */
enum TaStatus ta_tree_node_count(const struct TaTree *tree, size_t *out);

/**
 * Value of a scalar tree at a point of `len` coordinates.
 *
 * # Safety
 * `point` must reference `len` doubles; `out` must be writable.
 */
enum TaStatus ta_tree_evaluate_scalar(const struct TaTree *tree,
                                      const double *point,
                                      size_t len,
                                      double *out);

/**
 * Uniform measure on the domain box.
 *
 * # Safety
 * `out` must be writable.
 */
enum TaStatus ta_measure_uniform(struct TaMeasure **out);

/**
 * Empirical measure on the schema of `schema_source`. `points` holds
 * `n_points` rows of `n_features` coordinates; `weights` may be null for
 * equal weights, otherwise `n_points` non-negative values summing to one.
 *
 * # Safety
 * Pointers must reference arrays of the stated sizes; `out` must be writable.
 */
enum TaStatus ta_measure_empirical(const struct TaTree *schema_source,
                                   const double *points,
                                   size_t n_points,
                                   size_t n_features,
                                   const double *weights,
                                   struct TaMeasure **out);

/**
 * # Safety
 * `measure` must come from this library and not have been freed; null is ignored.
 */
void ta_measure_free(struct TaMeasure *measure);

/**
 * L2 distance between two trees.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum TaStatus ta_tree_distance(const struct TaTree *a,
                               const struct TaTree *b,
                               const struct TaMeasure *measure,
                               double *out);

/**
 * Integral of the product of two scalar trees.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum TaStatus ta_tree_inner_product(const struct TaTree *a,
                                    const struct TaTree *b,
                                    const struct TaMeasure *measure,
                                    double *out);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum TaStatus ta_tree_covariance(const struct TaTree *a,
                                 const struct TaTree *b,
                                 const struct TaMeasure *measure,
                                 double *out);

/**
 * Fails with `DegenerateCorrelation` when either tree is constant.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum TaStatus ta_tree_correlation(const struct TaTree *a,
                                  const struct TaTree *b,
                                  const struct TaMeasure *measure,
                                  double *out);

/**
 * Mean of a scalar tree.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum TaStatus ta_tree_mean(const struct TaTree *tree, const struct TaMeasure *measure, double *out);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum TaStatus ta_tree_variance(const struct TaTree *tree,
                               const struct TaMeasure *measure,
                               double *out);

/**
 * Combines `n` trees into one. With `weights` null the result has tuple
 * leaves; otherwise it is the tree of `Σ weights[i]·trees[i]`. A
 * `max_nodes` of zero selects the default budget.
 *
 * # Safety
 * `trees` (and `weights` when non-null) must reference `n` elements;
 * `out` must be writable.
 */
enum TaStatus ta_combine(const struct TaTree *const *trees,
                         size_t n,
                         const double *weights,
                         size_t max_nodes,
                         struct TaTree **out);

/**
 * Distance between the sum of `nf` trees and the sum of `ng` trees.
 *
 * # Safety
 * Arrays must reference the stated number of live handles; `out` must be
 * writable.
 */
enum TaStatus ta_forest_distance(const struct TaTree *const *f,
                                 size_t nf,
                                 const struct TaTree *const *g,
                                 size_t ng,
                                 const struct TaMeasure *measure,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREEALGEBRA_H */
