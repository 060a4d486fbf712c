#ifndef SHIFTBEAM_H
#define SHIFTBEAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_INVALID_INPUT = 2,
  SB_STATUS_ASSUMPTION = 3,
  SB_STATUS_OUT_OF_DOMAIN = 4,
  SB_STATUS_MESH = 5,
  SB_STATUS_SINGULAR = 6,
  SB_STATUS_DOMINATION = 7,
  SB_STATUS_IO = 8,
  SB_STATUS_BUFFER_TOO_SMALL = 9,
  SB_STATUS_PANIC = 10,
} SbStatus;

/**
 * A mesh of `[0, 2]`.
 */
typedef struct SbMesh SbMesh;

/**
 * Problem data: coefficients, ε and boundary condition order.
 */
typedef struct SbProblem SbProblem;

/**
 * A discrete solution `(u_h, w_h)`.
 */
typedef struct SbSolution SbSolution;

/**
 * `u, u′, w, w′` at one point.
 */
typedef struct SbFieldValue {
  double u;
  double du;
  double w;
  double dw;
} SbFieldValue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *sb_last_error(void);

/**
 * Library version as a static string.
 */
const char *sb_version(void);

/**
 * Built-in example `"ex1"` or `"ex2"` at the given ε.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SbStatus sb_problem_example(const char *name, double epsilon, struct SbProblem **out);

/**
 * Constant-coefficient problem with history `Φ = 0`; `m` is 1 or 2.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SbStatus sb_problem_constant(double epsilon,
                                  uint32_t m,
                                  double b,
                                  double c,
                                  double d,
                                  double f,
                                  struct SbProblem **out);

/**
 * Coercivity constants `β` and `δ` of the problem.
 *
 * # Safety
 * All pointers must be valid.
 */
enum SbStatus sb_problem_constants(const struct SbProblem *p, double *beta, double *delta);

/**
 * # Safety
 * `p` must come from `sb_problem_*` and not be used afterwards; null is ignored.
 */
void sb_problem_free(struct SbProblem *p);

/**
 * Layer-adapted mesh with `n` cells for degree `q`. `label` names the
 * boundary and inner families, e.g. `"BS-BS"` or `"BS-weakShishkin"`;
 * `sigma ≤ 0` selects the default `q + 1`.
 *
 * # Safety
 * `problem` must be a live handle, `label` NUL-terminated, `out` valid.
 */
enum SbStatus sb_mesh_build(const struct SbProblem *problem,
                            const char *label,
                            uintptr_t n,
                            uintptr_t q,
                            double sigma,
                            struct SbMesh **out);

/**
 * Number of cells; 0 for a null handle.
 *
 * # Safety
 * `mesh` must be a live handle or null.
 */
uintptr_t sb_mesh_n_cells(const struct SbMesh *mesh);

/**
 * Copies the `n_cells + 1` nodes into `buf`.
 *
 * # Safety
 * `buf` must hold `len` doubles.
 */
enum SbStatus sb_mesh_nodes(const struct SbMesh *mesh, double *buf, uintptr_t len);

/**
 * # Safety
 * `m` must come from `sb_mesh_build` and not be used afterwards; null is ignored.
 */
void sb_mesh_free(struct SbMesh *m);

/**
 * Solves the problem with degree-`q` elements on `mesh`.
 *
 * # Safety
 * Handles must be live, `out` valid.
 */
enum SbStatus sb_solve(const struct SbProblem *problem,
                       const struct SbMesh *mesh,
                       uintptr_t q,
                       struct SbSolution **out);

/**
 * `u_h, u_h′, w_h, w_h′` at `x ∈ [0, 2]`.
 *
 * # Safety
 * `sol` must be live, `out` valid.
 */
enum SbStatus sb_solution_eval(const struct SbSolution *sol, double x, struct SbFieldValue *out);

/**
 * Energy-norm distance to a reference solution of degree `q_ref` on
 * `n_ref` Bakhvalov-S cells.
 *
 * # Safety
 * Handles must be live, `out` valid.
 */
enum SbStatus sb_energy_error(const struct SbProblem *problem,
                              const struct SbSolution *sol,
                              uintptr_t q_ref,
                              uintptr_t n_ref,
                              double *out);

/**
 * # Safety
 * `s` must come from `sb_solve` and not be used afterwards; null is ignored.
 */
void sb_solution_free(struct SbSolution *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHIFTBEAM_H */
