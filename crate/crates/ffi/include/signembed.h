#ifndef SIGNEMBED_H
#define SIGNEMBED_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeStatus {
  SE_STATUS_OK = 0,
  SE_STATUS_USAGE = 1,
  SE_STATUS_NUMERICAL = 2,
  SE_STATUS_RESOURCE = 3,
  SE_STATUS_NULL_POINTER = 4,
  SE_STATUS_PANIC = 5,
  SE_STATUS_PARSE = 6,
  SE_STATUS_IO = 7,
} SeStatus;

// Opaque embedding operator.
typedef struct SeOperator SeOperator;

// Opaque test set.
typedef struct SeTestSet SeTestSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null if none. The
// pointer stays valid until the next failing call on the same thread.
const char *se_last_error_message(void);

// Normalized `m × n` Gaussian operator from stream `(seed, stream)`.
//
// # Safety
// `out` must be valid for a pointer write.
enum SeStatus se_operator_gaussian(size_t m,
                                   size_t n,
                                   uint64_t seed,
                                   uint64_t stream,
                                   struct SeOperator **out);

// Normalized partial circulant with generator `generator[0..n]` (entries
// ±1) restricted to rows `rows[0..m]`.
//
// # Safety
// `generator` must hold `n` values, `rows` must hold `m` values and `out`
// must be valid for a pointer write.
enum SeStatus se_operator_circulant(const int8_t *generator,
                                    size_t n,
                                    const size_t *rows,
                                    size_t m,
                                    struct SeOperator **out);

// Dense operator copied from a row-major `rows × cols` buffer.
//
// # Safety
// `data` must hold `rows * cols` values and `out` must be valid for a
// pointer write.
enum SeStatus se_operator_dense(const double *data,
                                size_t rows,
                                size_t cols,
                                struct SeOperator **out);

// New handle for `base · diag(signs)`; `base` is left untouched.
//
// # Safety
// `base` must be a live operator handle, `signs` must hold `n` values and
// `out` must be valid for a pointer write.
enum SeStatus se_operator_column_randomize(const struct SeOperator *base,
                                           const int8_t *signs,
                                           size_t n,
                                           struct SeOperator **out);

// # Safety
// `op` must be a live operator handle; `m` and `n` must be valid for writes.
enum SeStatus se_operator_dims(const struct SeOperator *op, size_t *m, size_t *n);

// `y = A x` with `x_len = n` and `y_len = m`.
//
// # Safety
// `x` and `y` must hold `x_len` and `y_len` values.
enum SeStatus se_operator_apply(const struct SeOperator *op,
                                const double *x,
                                size_t x_len,
                                double *y,
                                size_t y_len);

// Writes the dense `m × n` matrix, row-major, into `out[0..len]`.
//
// # Safety
// `out` must hold `len` values.
enum SeStatus se_operator_materialize(const struct SeOperator *op, double *out, size_t len);

// # Safety
// `op` must be null or a handle not yet freed.
void se_operator_free(struct SeOperator *op);

// Finite set of `count` points in `R^n`, row-major.
//
// # Safety
// `data` must hold `count * n` values; `out` must be valid for a write.
enum SeStatus se_test_set_points(const double *data,
                                 size_t count,
                                 size_t n,
                                 struct SeTestSet **out);

// Ball of the given radius in a random `d`-dimensional subspace of `R^n`.
//
// # Safety
// `out` must be valid for a pointer write.
enum SeStatus se_test_set_subspace_ball(size_t n,
                                        size_t d,
                                        double radius,
                                        uint64_t seed,
                                        uint64_t stream,
                                        struct SeTestSet **out);

// Unit `k`-sparse vectors in `R^n`.
//
// # Safety
// `out` must be valid for a pointer write.
enum SeStatus se_test_set_sparse_sphere(size_t n, size_t k, struct SeTestSet **out);

// `ℓ₁` ball of the given radius in `R^n`.
//
// # Safety
// `out` must be valid for a pointer write.
enum SeStatus se_test_set_l1_ball(size_t n, double radius, struct SeTestSet **out);

// # Safety
// `t` must be null or a handle not yet freed.
void se_test_set_free(struct SeTestSet *t);

// Exact `sup` over unit `k`-sparse `x` of `|‖Ax‖² − 1|` for a row-major
// `rows × cols` matrix.
//
// # Safety
// `data` must hold `rows * cols` values; `out` must be valid for a write.
enum SeStatus se_sparse_distortion_exact(const double *data,
                                         size_t rows,
                                         size_t cols,
                                         size_t k,
                                         double *out);

// `sup_{t ∈ T} |‖At‖² − ‖t‖²|`. `exact` receives 1 when the value is exact
// and 0 when it is a lower bound.
//
// # Safety
// Handles must be live; `value` and `exact` must be valid for writes.
enum SeStatus se_sup_distortion(const struct SeOperator *op,
                                const struct SeTestSet *set,
                                uint64_t seed,
                                uint64_t stream,
                                double *value,
                                int32_t *exact);

// Monte-Carlo mean width with its standard error.
//
// # Safety
// `set` must be live; `mean` and `std_error` must be valid for writes.
enum SeStatus se_mean_width(const struct SeTestSet *set,
                            size_t samples,
                            uint64_t seed,
                            uint64_t stream,
                            double *mean,
                            double *std_error);

// Reference error `u²(Λ·radius·δ·width + (δ·width)²)`.
//
// # Safety
// `out` must be valid for a write.
enum SeStatus se_evaluate_bound(double delta,
                                size_t n,
                                double width,
                                double radius,
                                double u,
                                double *out);

// `w_j = Σ_i u_{(j−i) mod n} v_i`.
//
// # Safety
// `u`, `v` and `w` must each hold `n` values.
enum SeStatus se_circular_convolve(const double *u, const double *v, size_t n, double *w);

// Ascending eigenvalues of a symmetric row-major `n × n` matrix.
//
// # Safety
// `data` must hold `n * n` values and `eigenvalues` must hold `n`.
enum SeStatus se_sym_eig(const double *data, size_t n, double *eigenvalues);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGNEMBED_H */
