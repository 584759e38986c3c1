#ifndef STABLE_LAB_H
#define STABLE_LAB_H

#include <stddef.h>
#include <stdint.h>

#define SL_OK 0

#define SL_ERR_NULL_POINTER 1

#define SL_ERR_INVALID_UTF8 2

#define SL_ERR_PANIC 3

#define SL_ERR_BUFFER_TOO_SMALL 4

#define SL_ERR_DIMENSION_OUT_OF_RANGE 10

#define SL_ERR_SPACING_TOO_COARSE 11

#define SL_ERR_INVALID_PARAMETER 12

#define SL_ERR_DOMAIN_MISMATCH 13

#define SL_ERR_NON_FINITE 14

#define SL_ERR_INDEFINITE_SHIFT 15

#define SL_ERR_NON_LIPSCHITZ 16

#define SL_ERR_EIGEN_NOT_CONVERGED 17

#define SL_ERR_SOLVE_NOT_CONVERGED 18

#define SL_ERR_NEWTON_FAILED 19

#define SL_ERR_MONOTONICITY_VIOLATION 20

#define SL_ERR_UNSTABLE_INPUT 21

#define SL_ERR_ORIGIN_RESOLUTION 22

#define SL_ERR_DEGENERATE_FIT 23

#define SL_ERR_PARSE 24

#define SL_ERR_UNKNOWN_SERIES 25

#define SL_ERR_IO 26

#define SL_ERR_JSON 27

#define SL_STABLE 0

#define SL_UNSTABLE 1

#define SL_MARGINAL 2

/**
 * Ball grid.
 */
typedef struct SlDomain SlDomain;

/**
 * Nodal field on a [`SlDomain`].
 */
typedef struct SlField SlField;

typedef struct SlNonlinearity SlNonlinearity;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static version string, e.g. `stable-lab 0.1.0`.
 */
const char *sl_version(void);

/**
 * Length in bytes (without the nul) of the last error message on this thread, 0 if none.
 */
size_t sl_last_error_length(void);

/**
 * Copies the last error message, nul-terminated, into `buf` of `len` bytes.
 *
 * # Safety
 * `buf` must be valid for `len` bytes.
 */
int32_t sl_last_error_message(char *buf, size_t len);

/**
 * Builds the grid on `B_radius(center)` in dimension `n`.
 *
 * # Safety
 * `center` must point to `n` doubles (or be null for the origin); `out` must be writable.
 */
int32_t sl_domain_new(size_t n,
                      const double *center,
                      double radius,
                      double spacing,
                      SlDomain **out);

/**
 * # Safety
 * `d` must come from [`sl_domain_new`] and not be used afterwards. Null is ignored.
 */
void sl_domain_free(SlDomain *d);

/**
 * Total nodes, interior first then boundary.
 *
 * # Safety
 * `d` must be a live domain handle and `out` writable.
 */
int32_t sl_domain_node_count(const SlDomain *d, size_t *out);

/**
 * # Safety
 * `d` must be a live domain handle and `out` writable.
 */
int32_t sl_domain_interior_count(const SlDomain *d, size_t *out);

/**
 * Coordinates of node `idx` into `coords[0..n]`.
 *
 * # Safety
 * `d` must be live; `coords` must hold `n` doubles.
 */
int32_t sl_domain_coord(const SlDomain *d, size_t idx, double *coords, size_t n);

/**
 * Field from `len == node_count` values in node order.
 *
 * # Safety
 * `d` must be live, `values` valid for `len` doubles, `out` writable.
 */
int32_t sl_field_from_values(const SlDomain *d, const double *values, size_t len, SlField **out);

/**
 * # Safety
 * `f` must come from this library and not be used afterwards. Null is ignored.
 */
void sl_field_free(SlField *f);

/**
 * Copies the nodal values into `buf`, which must hold exactly `node_count` doubles.
 *
 * # Safety
 * `f` must be live and `buf` valid for `len` doubles.
 */
int32_t sl_field_values(const SlField *f, double *buf, size_t len);

/**
 * Parses `exp`, `pow:p=…`, `affine:a=…,b=…`, `ramp` or `table:<csv>`.
 *
 * # Safety
 * `spec` must be a nul-terminated string and `out` writable.
 */
int32_t sl_nonlinearity_parse(const char *spec, SlNonlinearity **out);

/**
 * # Safety
 * `f` must come from this library and not be used afterwards. Null is ignored.
 */
void sl_nonlinearity_free(SlNonlinearity *f);

/**
 * # Safety
 * `f` must be live and `out` writable.
 */
int32_t sl_nonlinearity_eval(const SlNonlinearity *f, double t, double *out);

/**
 * Left derivative `f'_−(t)`.
 *
 * # Safety
 * `f` must be live and `out` writable.
 */
int32_t sl_nonlinearity_left_derivative(const SlNonlinearity *f, double t, double *out);

/**
 * Solves `−Δu = f(u)` with the boundary values of `boundary` by damped Newton.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
int32_t sl_newton_solve(const SlField *boundary,
                        const SlNonlinearity *f,
                        double tol,
                        SlField **out);

/**
 * Stability of `u` for `f`; `tol` NaN selects the default band.
 *
 * # Safety
 * Handles must be live; `verdict` and `lambda1` writable.
 */
int32_t sl_is_stable(const SlField *u,
                     const SlNonlinearity *f,
                     double tol,
                     int32_t *verdict,
                     double *lambda1);

/**
 * Random sweep of the matrix inequality in dimension `n`.
 *
 * # Safety
 * Output pointers must be writable.
 */
int32_t sl_matrix_sweep(size_t n,
                        uint64_t trials,
                        uint64_t seed,
                        double *min_scaled_margin,
                        uint64_t *violations);

/**
 * Radial `λ₁` of a catalog entry on `(delta, 1)` with `points` nodes.
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` writable.
 */
int32_t sl_catalog_radial_lambda1(const char *name, double delta, size_t points, double *out);

/**
 * Runs the experiment in the TOML file `config_path`, writing its report under
 * `out_dir` (null: the default output root). `exit_code` receives 0, 1 or 2 as
 * the command-line tool would return.
 *
 * # Safety
 * Strings must be nul-terminated; `exit_code` writable.
 */
int32_t sl_run_config(const char *config_path, const char *out_dir, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLE_LAB_H */
