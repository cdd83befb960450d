#ifndef HEAT_RIGIDITY_H
#define HEAT_RIGIDITY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of the C API.
 */
typedef enum HrStatus {
  HR_STATUS_OK = 0,
  HR_STATUS_NULL_POINTER = 1,
  HR_STATUS_INVALID_PARAMETER = 2,
  HR_STATUS_INVALID_MESH = 3,
  HR_STATUS_SOLVER = 4,
  HR_STATUS_NON_CONVERGENCE = 5,
  /**
   * A numerical check failed (ill-conditioned fit, bad time, sanity).
   */
  HR_STATUS_NUMERICAL = 6,
  HR_STATUS_IO = 7,
  /**
   * The output buffer is shorter than required.
   */
  HR_STATUS_BUFFER_TOO_SMALL = 8,
  HR_STATUS_PANIC = 9,
} HrStatus;

/**
 * Axisymmetric eigenbasis of a spherical cap or band.
 */
typedef struct HrBand HrBand;

/**
 * Lowest Dirichlet eigenpairs of an assembled system.
 */
typedef struct HrBasis HrBasis;

/**
 * Triangulated planar domain.
 */
typedef struct HrMesh HrMesh;

/**
 * Stiffness, mass and boundary-mass matrices of a mesh.
 */
typedef struct HrSystem HrSystem;

/**
 * Boundary flux of the heat flow at one time.
 */
typedef struct HrFluxSummary {
  double t;
  double mean;
  /**
   * `‖q − q̄‖_B / ‖q‖_B`.
   */
  double deviation;
  double total;
  double balance_error;
  size_t modes_used;
  /**
   * Nonzero when the tolerance could not be met with the available modes.
   */
  int32_t limited;
} HrFluxSummary;

/**
 * Torsion function and its boundary flux.
 */
typedef struct HrSerrinSummary {
  /**
   * Relative mass-norm gap between the direct and spectral torsion.
   */
  double discrepancy;
  double mean;
  double deviation;
} HrSerrinSummary;

/**
 * Fluxes through the boundary circles of a cap or band.
 */
typedef struct HrBandFlux {
  double q1;
  /**
   * Zero for a cap.
   */
  double q2;
  int32_t has_q2;
} HrBandFlux;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hr_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next API call on the same thread.
 */
const char *hr_last_error(void);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HrStatus hr_mesh_disk(double radius, double h, struct HrMesh **out);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HrStatus hr_mesh_ellipse(double a, double b, double h, struct HrMesh **out);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HrStatus hr_mesh_annulus(double inner, double outer, double h, struct HrMesh **out);

/**
 * Radial perturbation `r = 1 + eps·cos(mθ)` of the unit disk.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HrStatus hr_mesh_radial(double eps, uint32_t m, double h, struct HrMesh **out);

/**
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HrStatus hr_mesh_square(double side, double h, struct HrMesh **out);

/**
 * Simple polygon from `count` interleaved `x, y` pairs.
 *
 * # Safety
 * `xy` must point to `2 * count` readable doubles and `out` must be valid
 * for a pointer write.
 */
enum HrStatus hr_mesh_polygon(const double *xy, size_t count, double h, struct HrMesh **out);

/**
 * Uniform red refinement; the input mesh is left untouched.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for a pointer write.
 */
enum HrStatus hr_mesh_refine(const struct HrMesh *mesh, struct HrMesh **out);

/**
 * Number of vertices, or 0 for a null handle.
 *
 * # Safety
 * `mesh` must be NULL or a live handle.
 */
size_t hr_mesh_num_vertices(const struct HrMesh *mesh);

/**
 * # Safety
 * `mesh` must be NULL or a live handle.
 */
size_t hr_mesh_num_triangles(const struct HrMesh *mesh);

/**
 * Copies interleaved vertex coordinates into `out` (`2 * num_vertices`).
 *
 * # Safety
 * `mesh` must be a live handle and `out` writable for `len` doubles.
 */
enum HrStatus hr_mesh_vertices(const struct HrMesh *mesh, double *out, size_t len);

/**
 * # Safety
 * `mesh` must be NULL or a handle not yet freed.
 */
void hr_mesh_free(struct HrMesh *mesh);

/**
 * Assembles the finite element matrices. The system keeps its own copy of
 * the mesh, so the mesh handle may be freed afterwards.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for a pointer write.
 */
enum HrStatus hr_system_assemble(const struct HrMesh *mesh, struct HrSystem **out);

/**
 * Domain area `1ᵀM1`, or NaN for a null handle.
 *
 * # Safety
 * `sys` must be NULL or a live handle.
 */
double hr_system_area(const struct HrSystem *sys);

/**
 * Number of boundary vertices, the length of flux profiles.
 *
 * # Safety
 * `sys` must be NULL or a live handle.
 */
size_t hr_system_num_boundary(const struct HrSystem *sys);

/**
 * # Safety
 * `sys` must be NULL or a handle not yet freed.
 */
void hr_system_free(struct HrSystem *sys);

/**
 * Lowest `count` Dirichlet eigenpairs.
 *
 * # Safety
 * `sys` must be a live handle and `out` valid for a pointer write.
 */
enum HrStatus hr_basis_compute(const struct HrSystem *sys, size_t count, struct HrBasis **out);

/**
 * # Safety
 * `basis` must be NULL or a live handle.
 */
size_t hr_basis_len(const struct HrBasis *basis);

/**
 * Copies the eigenvalues in nondecreasing order.
 *
 * # Safety
 * `basis` must be a live handle and `out` writable for `len` doubles.
 */
enum HrStatus hr_basis_eigenvalues(const struct HrBasis *basis, double *out, size_t len);

/**
 * Copies the coefficients `αₖ = ∫φₖ`.
 *
 * # Safety
 * `basis` must be a live handle and `out` writable for `len` doubles.
 */
enum HrStatus hr_basis_alphas(const struct HrBasis *basis, double *out, size_t len);

/**
 * # Safety
 * `basis` must be NULL or a handle not yet freed.
 */
void hr_basis_free(struct HrBasis *basis);

/**
 * Boundary flux of the heat flow with unit initial data at time `t`,
 * truncated to tolerance `tol`. When `q` is not NULL the flux density
 * per boundary vertex is copied into it (`hr_system_num_boundary` values).
 *
 * # Safety
 * `sys` and `basis` must be live handles built from the same mesh,
 * `summary` valid for a write, and `q` NULL or writable for `len` doubles.
 */
enum HrStatus hr_flux(const struct HrSystem *sys,
                      const struct HrBasis *basis,
                      double t,
                      double tol,
                      struct HrFluxSummary *summary,
                      double *q,
                      size_t len);

/**
 * Torsion function from `modes` eigenpairs (0 means all) and the flux
 * constancy of its direct solution.
 *
 * # Safety
 * `sys` and `basis` must be live handles built from the same mesh and
 * `summary` valid for a write.
 */
enum HrStatus hr_serrin(const struct HrSystem *sys,
                        const struct HrBasis *basis,
                        size_t modes,
                        struct HrSerrinSummary *summary);

/**
 * Band `theta1 < θ < theta2` (colatitudes) on `n_points` grid points.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HrStatus hr_band_new(double theta1,
                          double theta2,
                          size_t n_points,
                          size_t count,
                          struct HrBand **out);

/**
 * Polar cap `θ < theta0`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HrStatus hr_band_cap(double theta0, size_t n_points, size_t count, struct HrBand **out);

/**
 * # Safety
 * `band` must be a live handle and `out` writable for `len` doubles.
 */
enum HrStatus hr_band_eigenvalues(const struct HrBand *band, double *out, size_t len);

/**
 * # Safety
 * `band` must be a live handle and `out` valid for a write.
 */
enum HrStatus hr_band_flux(const struct HrBand *band, double t, struct HrBandFlux *out);

/**
 * # Safety
 * `band` must be NULL or a handle not yet freed.
 */
void hr_band_free(struct HrBand *band);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEAT_RIGIDITY_H */
