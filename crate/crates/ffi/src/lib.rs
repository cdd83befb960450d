//! C ABI for the heat-rigidity library.
//!
//! Meshes, assembled systems and eigenbases cross the boundary as opaque
//! handles created by the constructor functions and released with
//! the matching `hr_*_free`. Every fallible call returns an [`HrStatus`];
//! on failure `hr_last_error()` describes what went wrong on the calling
//! thread. Panics are caught and reported as `HR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use heat_rigidity::geometry::{make_domain, refine, DomainSpec, Mesh};
use heat_rigidity::heatflow::{boundary_flux, heat_solution};
use heat_rigidity::rigidity::{serrin_check, torsion};
use heat_rigidity::spectral::{eigenbasis, EigenBasis};
use heat_rigidity::sphereband::{band_eigenbasis, band_flux, BandEigenBasis, BandSpec};
use heat_rigidity::{assemble, Error, SystemMatrices};

/// Result codes of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidMesh = 3,
    Solver = 4,
    NonConvergence = 5,
    /// A numerical check failed (ill-conditioned fit, bad time, sanity).
    Numerical = 6,
    Io = 7,
    /// The output buffer is shorter than required.
    BufferTooSmall = 8,
    Panic = 9,
}

impl From<&Error> for HrStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::Parse { .. } | Error::InvalidTime(_) => HrStatus::InvalidParameter,
            Error::InvalidMesh(_) | Error::DegenerateTriangle { .. } => HrStatus::InvalidMesh,
            Error::Solver(_) => HrStatus::Solver,
            Error::EigenNonConvergence { .. } => HrStatus::NonConvergence,
            Error::Io(_) => HrStatus::Io,
            _ => HrStatus::Numerical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, translating errors and panics into a status code.
fn guard<F>(f: F) -> HrStatus
where
    F: FnOnce() -> Result<(), (HrStatus, String)>,
{
    clear_error();
    // Handles are not touched again after a panic inside a call.
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HrStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HrStatus::Panic
        }
    }
}

fn lib(e: Error) -> (HrStatus, String) {
    (HrStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (HrStatus, String) {
    (HrStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (HrStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (HrStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (HrStatus, String)> {
    if len < src.len() {
        return Err((HrStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", src.len())));
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Triangulated planar domain.
pub struct HrMesh(Mesh);

/// Stiffness, mass and boundary-mass matrices of a mesh.
pub struct HrSystem(SystemMatrices);

/// Lowest Dirichlet eigenpairs of an assembled system.
pub struct HrBasis(EigenBasis);

/// Axisymmetric eigenbasis of a spherical cap or band.
pub struct HrBand(BandEigenBasis);

/// Boundary flux of the heat flow at one time.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HrFluxSummary {
    pub t: f64,
    pub mean: f64,
    /// `‖q − q̄‖_B / ‖q‖_B`.
    pub deviation: f64,
    pub total: f64,
    pub balance_error: f64,
    pub modes_used: usize,
    /// Nonzero when the tolerance could not be met with the available modes.
    pub limited: i32,
}

/// Torsion function and its boundary flux.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HrSerrinSummary {
    /// Relative mass-norm gap between the direct and spectral torsion.
    pub discrepancy: f64,
    pub mean: f64,
    pub deviation: f64,
}

/// Fluxes through the boundary circles of a cap or band.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HrBandFlux {
    pub q1: f64,
    /// Zero for a cap.
    pub q2: f64,
    pub has_q2: i32,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hr_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn hr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn mesh_from(spec: DomainSpec, out: *mut *mut HrMesh) -> HrStatus {
    guard(move || {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = make_domain(&spec).map_err(lib)?;
        unsafe { out.write(Box::into_raw(Box::new(HrMesh(mesh)))) };
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_disk(radius: f64, h: f64, out: *mut *mut HrMesh) -> HrStatus {
    mesh_from(DomainSpec::disk(radius, h), out)
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_ellipse(a: f64, b: f64, h: f64, out: *mut *mut HrMesh) -> HrStatus {
    mesh_from(DomainSpec::ellipse(a, b, h), out)
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_annulus(inner: f64, outer: f64, h: f64, out: *mut *mut HrMesh) -> HrStatus {
    mesh_from(DomainSpec::annulus(inner, outer, h), out)
}

/// Radial perturbation `r = 1 + eps·cos(mθ)` of the unit disk.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_radial(eps: f64, m: u32, h: f64, out: *mut *mut HrMesh) -> HrStatus {
    mesh_from(DomainSpec::radial(eps, m, h), out)
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_square(side: f64, h: f64, out: *mut *mut HrMesh) -> HrStatus {
    mesh_from(DomainSpec::square(side, h), out)
}

/// Simple polygon from `count` interleaved `x, y` pairs.
///
/// # Safety
/// `xy` must point to `2 * count` readable doubles and `out` must be valid
/// for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_polygon(xy: *const f64, count: usize, h: f64, out: *mut *mut HrMesh) -> HrStatus {
    if xy.is_null() {
        return guard(|| Err(null("xy")));
    }
    let flat = std::slice::from_raw_parts(xy, 2 * count);
    let vertices = flat.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
    mesh_from(DomainSpec::polygon(vertices, h), out)
}

/// Uniform red refinement; the input mesh is left untouched.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_refine(mesh: *const HrMesh, out: *mut *mut HrMesh) -> HrStatus {
    guard(|| {
        let m = deref(mesh, "mesh")?;
        let fine = refine(&m.0).map_err(lib)?;
        write_out(out, Box::into_raw(Box::new(HrMesh(fine))), "out")
    })
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_num_vertices(mesh: *const HrMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.vertices.len())
}

/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_num_triangles(mesh: *const HrMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.triangles.len())
}

/// Copies interleaved vertex coordinates into `out` (`2 * num_vertices`).
///
/// # Safety
/// `mesh` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_vertices(mesh: *const HrMesh, out: *mut f64, len: usize) -> HrStatus {
    guard(|| {
        let m = deref(mesh, "mesh")?;
        let flat: Vec<f64> = m.0.vertices.iter().flat_map(|p| *p).collect();
        copy_out(&flat, out, len)
    })
}

/// # Safety
/// `mesh` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hr_mesh_free(mesh: *mut HrMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Assembles the finite element matrices. The system keeps its own copy of
/// the mesh, so the mesh handle may be freed afterwards.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_system_assemble(mesh: *const HrMesh, out: *mut *mut HrSystem) -> HrStatus {
    guard(|| {
        let m = deref(mesh, "mesh")?;
        let sys = assemble(&m.0).map_err(lib)?;
        write_out(out, Box::into_raw(Box::new(HrSystem(sys))), "out")
    })
}

/// Domain area `1ᵀM1`, or NaN for a null handle.
///
/// # Safety
/// `sys` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_system_area(sys: *const HrSystem) -> f64 {
    sys.as_ref().map_or(f64::NAN, |s| s.0.area)
}

/// Number of boundary vertices, the length of flux profiles.
///
/// # Safety
/// `sys` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_system_num_boundary(sys: *const HrSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.dofs.num_boundary())
}

/// # Safety
/// `sys` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hr_system_free(sys: *mut HrSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Lowest `count` Dirichlet eigenpairs.
///
/// # Safety
/// `sys` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_basis_compute(sys: *const HrSystem, count: usize, out: *mut *mut HrBasis) -> HrStatus {
    guard(|| {
        let s = deref(sys, "sys")?;
        let basis = eigenbasis(&s.0, count).map_err(lib)?;
        write_out(out, Box::into_raw(Box::new(HrBasis(basis))), "out")
    })
}

/// # Safety
/// `basis` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hr_basis_len(basis: *const HrBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.0.len())
}

/// Copies the eigenvalues in nondecreasing order.
///
/// # Safety
/// `basis` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hr_basis_eigenvalues(basis: *const HrBasis, out: *mut f64, len: usize) -> HrStatus {
    guard(|| copy_out(&deref(basis, "basis")?.0.lambdas, out, len))
}

/// Copies the coefficients `αₖ = ∫φₖ`.
///
/// # Safety
/// `basis` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hr_basis_alphas(basis: *const HrBasis, out: *mut f64, len: usize) -> HrStatus {
    guard(|| copy_out(&deref(basis, "basis")?.0.alphas, out, len))
}

/// # Safety
/// `basis` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hr_basis_free(basis: *mut HrBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Boundary flux of the heat flow with unit initial data at time `t`,
/// truncated to tolerance `tol`. When `q` is not NULL the flux density
/// per boundary vertex is copied into it (`hr_system_num_boundary` values).
///
/// # Safety
/// `sys` and `basis` must be live handles built from the same mesh,
/// `summary` valid for a write, and `q` NULL or writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hr_flux(
    sys: *const HrSystem,
    basis: *const HrBasis,
    t: f64,
    tol: f64,
    summary: *mut HrFluxSummary,
    q: *mut f64,
    len: usize,
) -> HrStatus {
    guard(|| {
        let (s, b) = (deref(sys, "sys")?, deref(basis, "basis")?);
        if b.0.interior_dim != s.0.dofs.num_interior() {
            return Err((HrStatus::InvalidParameter, "basis does not belong to this system".into()));
        }
        let state = heat_solution(&b.0, t, tol).map_err(lib)?;
        let profile = boundary_flux(&s.0, &state).map_err(lib)?;
        if !q.is_null() {
            copy_out(&profile.q, q, len)?;
        }
        let value = HrFluxSummary {
            t,
            mean: profile.mean,
            deviation: profile.deviation,
            total: profile.total,
            balance_error: profile.balance_error(),
            modes_used: state.k_used,
            limited: state.truncation.limited as i32,
        };
        write_out(summary, value, "summary")
    })
}

/// Torsion function from `modes` eigenpairs (0 means all) and the flux
/// constancy of its direct solution.
///
/// # Safety
/// `sys` and `basis` must be live handles built from the same mesh and
/// `summary` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hr_serrin(
    sys: *const HrSystem,
    basis: *const HrBasis,
    modes: usize,
    summary: *mut HrSerrinSummary,
) -> HrStatus {
    guard(|| {
        let (s, b) = (deref(sys, "sys")?, deref(basis, "basis")?);
        if b.0.interior_dim != s.0.dofs.num_interior() {
            return Err((HrStatus::InvalidParameter, "basis does not belong to this system".into()));
        }
        let k = if modes == 0 { b.0.len() } else { modes };
        let pair = torsion(&s.0, &b.0, k).map_err(lib)?;
        let profile = serrin_check(&s.0, &pair).map_err(lib)?;
        let value = HrSerrinSummary { discrepancy: pair.discrepancy, mean: profile.mean, deviation: profile.deviation };
        write_out(summary, value, "summary")
    })
}

fn band_from(spec: BandSpec, count: usize, out: *mut *mut HrBand) -> HrStatus {
    guard(move || {
        if out.is_null() {
            return Err(null("out"));
        }
        let basis = band_eigenbasis(&spec, count).map_err(lib)?;
        unsafe { out.write(Box::into_raw(Box::new(HrBand(basis)))) };
        Ok(())
    })
}

/// Band `theta1 < θ < theta2` (colatitudes) on `n_points` grid points.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_band_new(
    theta1: f64,
    theta2: f64,
    n_points: usize,
    count: usize,
    out: *mut *mut HrBand,
) -> HrStatus {
    band_from(BandSpec::band(theta1, theta2, n_points), count, out)
}

/// Polar cap `θ < theta0`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hr_band_cap(theta0: f64, n_points: usize, count: usize, out: *mut *mut HrBand) -> HrStatus {
    band_from(BandSpec::cap(theta0, n_points), count, out)
}

/// # Safety
/// `band` must be a live handle and `out` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hr_band_eigenvalues(band: *const HrBand, out: *mut f64, len: usize) -> HrStatus {
    guard(|| copy_out(&deref(band, "band")?.0.lambdas, out, len))
}

/// # Safety
/// `band` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn hr_band_flux(band: *const HrBand, t: f64, out: *mut HrBandFlux) -> HrStatus {
    guard(|| {
        let b = deref(band, "band")?;
        let (q1, q2) = band_flux(&b.0, t).map_err(lib)?;
        let value = HrBandFlux { q1, q2: q2.unwrap_or(0.0), has_q2: q2.is_some() as i32 };
        write_out(out, value, "out")
    })
}

/// # Safety
/// `band` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hr_band_free(band: *mut HrBand) {
    if !band.is_null() {
        drop(Box::from_raw(band));
    }
}
