use crate::error::{invalid, Result};
use crate::fem::{solve_dirichlet_poisson, SystemMatrices};
use crate::heatflow::{consistent_flux, FluxProfile};
use crate::spectral::EigenBasis;

/// Torsion function computed directly and from the spectral series.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionPair {
    /// Solution of `−ΔΦ = 1`, `Φ = 0` on the boundary.
    pub direct: Vec<f64>,
    /// `Σ_{k≤K} λₖ⁻¹ αₖ φₖ`.
    pub spectral: Vec<f64>,
    pub k: usize,
    /// `‖direct − spectral‖_M / ‖direct‖_M`.
    pub discrepancy: f64,
}

pub fn torsion(sys: &SystemMatrices, basis: &EigenBasis, k: usize) -> Result<TorsionPair> {
    if k == 0 || k > basis.len() {
        return Err(invalid(format!("mode count must lie in 1..={}, got {k}", basis.len())));
    }
    let n = sys.dofs.num_vertices();
    let direct = solve_dirichlet_poisson(sys, &vec![1.0; n])?;
    let coeffs: Vec<f64> = (0..k).map(|i| basis.alphas[i] / basis.lambdas[i]).collect();
    let spectral = basis.combine(&coeffs);
    let diff: Vec<f64> = direct.iter().zip(&spectral).map(|(a, b)| a - b).collect();
    let discrepancy = (sys.mass.bilinear(&diff, &diff) / sys.mass.bilinear(&direct, &direct)).sqrt();
    let nonpositive = sys.dofs.interior.iter().filter(|&&v| direct[v] <= 0.0 || spectral[v] <= 0.0).count();
    if nonpositive > 0 {
        log::warn!("torsion is not strictly positive at {nonpositive} interior vertices");
    }
    Ok(TorsionPair { direct, spectral, k, discrepancy })
}

/// Flux profile of the direct torsion function (`ΔΦ = −1`).
pub fn serrin_check(sys: &SystemMatrices, pair: &TorsionPair) -> Result<FluxProfile> {
    let lap = vec![-1.0; sys.dofs.num_vertices()];
    consistent_flux(sys, &pair.direct, &lap, f64::INFINITY)
}
