use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fem::{loop_mass, SystemMatrices};
use crate::heatflow::{boundary_flux, heat_solution, Verdict};
use crate::linalg::SpdSolver;
use crate::sparse::CsrMatrix;
use crate::spectral::EigenBasis;

/// Relative variation `‖f − f̄‖ / ‖f‖` in the interface mass norm.
fn relative_variation(mass: &CsrMatrix, f: &[f64]) -> (f64, f64) {
    let ones = vec![1.0; f.len()];
    let mean = mass.bilinear(&ones, f) / mass.sum();
    let dev: Vec<f64> = f.iter().map(|v| v - mean).collect();
    let ff = mass.bilinear(f, f);
    let rel = if ff > 0.0 { (mass.bilinear(&dev, &dev).max(0.0) / ff).sqrt() } else { 0.0 };
    (mean, rel)
}

fn point_in_loop(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]) {
            inside = !inside;
        }
    }
    inside
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub tau: f64,
    pub mean: f64,
    pub variation: f64,
    pub limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceFluxEntry {
    pub t: f64,
    pub mean: f64,
    /// `‖q − q̄‖_Γ / (√|Γ| · max(rms_Γ q, rms_∂Ω ∂_ν u))`.
    pub deviation: f64,
    /// `‖q − q̄‖_Γ / ‖q‖_Γ`, ill-conditioned where the interface flux nearly
    /// vanishes.
    pub relative_deviation: f64,
    /// Root-mean-square flux density on the domain boundary.
    pub boundary_rms: f64,
    pub limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteriorReport {
    pub interface_index: usize,
    pub traces: Vec<TraceEntry>,
    pub fluxes: Vec<InterfaceFluxEntry>,
    pub max_trace_variation: f64,
    pub max_flux_deviation: f64,
    /// Whether the interface encloses a region free of domain boundary,
    /// i.e. bounds a subdomain compactly contained in the domain.
    pub bounds_subdomain: bool,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Trace constancy of `u(τₙ)` and flux constancy of `∂_ν u(tₙ)` on an
/// interface loop of the mesh, the flux taken from the enclosed side.
pub fn interior_surface_check(
    sys: &SystemMatrices,
    basis: &EigenBasis,
    interface_index: usize,
    times: &[f64],
    taus: &[f64],
    tol: f64,
    threshold: f64,
) -> Result<InteriorReport> {
    let mesh = &sys.mesh;
    let gamma = mesh
        .interfaces
        .get(interface_index)
        .ok_or_else(|| invalid(format!("mesh has no interface {interface_index}")))?;
    if times.is_empty() || taus.is_empty() {
        return Err(invalid("interior check needs nonempty times and taus"));
    }
    if gamma.iter().any(|&v| !mesh.interior_mask[v]) {
        return Err(invalid("interface touches the domain boundary"));
    }
    let poly: Vec<[f64; 2]> = gamma.iter().map(|&v| mesh.vertices[v]).collect();
    let bounds_subdomain = !mesh.boundary_vertices().iter().any(|&v| point_in_loop(&poly, mesh.vertices[v]));

    let inside: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&t| {
            let [a, b, c] = mesh.triangles[t].map(|i| mesh.vertices[i]);
            point_in_loop(&poly, [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0])
        })
        .collect();
    let (k_omega, m_omega) = sys.region_matrices(&inside);
    let mass_gamma = loop_mass(mesh, gamma);
    let solver = SpdSolver::new(&mass_gamma)?;
    let gamma_length = mass_gamma.sum();

    let traces: Vec<TraceEntry> = taus
        .par_iter()
        .map(|&tau| {
            let s = heat_solution(basis, tau, tol)?;
            let f: Vec<f64> = gamma.iter().map(|&v| s.u[v]).collect();
            let (mean, variation) = relative_variation(&mass_gamma, &f);
            Ok(TraceEntry { tau, mean, variation, limited: s.truncation.limited })
        })
        .collect::<Result<_>>()?;

    let fluxes: Vec<InterfaceFluxEntry> = times
        .par_iter()
        .map(|&t| {
            let s = heat_solution(basis, t, tol)?;
            let g: Vec<f64> = gamma
                .iter()
                .map(|&v| {
                    let k: f64 = k_omega.row(v).map(|(j, a)| a * s.u[j]).sum();
                    let m: f64 = m_omega.row(v).map(|(j, a)| a * s.du_dt[j]).sum();
                    k + m
                })
                .collect();
            let q = solver.solve(&g)?;
            let (mean, relative_deviation) = relative_variation(&mass_gamma, &q);
            let qq = mass_gamma.bilinear(&q, &q).max(0.0);
            let spread = relative_deviation * qq.sqrt();
            let outer = boundary_flux(sys, &s)?;
            let b = sys.boundary_mass_boundary();
            let boundary_rms = (b.bilinear(&outer.q, &outer.q).max(0.0) / sys.boundary_length).sqrt();
            let own_rms = (qq / gamma_length).sqrt();
            let scale = gamma_length.sqrt() * own_rms.max(boundary_rms);
            let deviation = if scale > 0.0 { spread / scale } else { 0.0 };
            Ok(InterfaceFluxEntry { t, mean, deviation, relative_deviation, boundary_rms, limited: s.truncation.limited })
        })
        .collect::<Result<_>>()?;

    let max_trace_variation = traces.iter().map(|e| e.variation).fold(0.0, f64::max);
    let max_flux_deviation = fluxes.iter().map(|e| e.deviation).fold(0.0, f64::max);
    let limited = traces.iter().any(|e| e.limited) || fluxes.iter().any(|e| e.limited);
    let verdict = if limited {
        Verdict::Inconclusive
    } else if max_trace_variation <= threshold && max_flux_deviation <= threshold {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(InteriorReport {
        interface_index,
        traces,
        fluxes,
        max_trace_variation,
        max_flux_deviation,
        bounds_subdomain,
        threshold,
        verdict,
    })
}
