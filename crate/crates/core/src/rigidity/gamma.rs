use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::fem::{discrete_harmonic_extension, SystemMatrices};
use crate::heatflow::{conormal_pairing_with_extension, eigenspace_flux, heat_solution};
use crate::spectral::EigenBasis;

/// Name of the generator behind the random test functions.
pub const RNG_NAME: &str = "ChaCha8";

/// Highest angular frequency in a random test function.
pub const TEST_MODES: usize = 6;

/// `count` random trigonometric polynomials in the polar angle of the
/// boundary vertices, each shifted to zero boundary average.
pub fn zero_average_test_functions(sys: &SystemMatrices, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = sys.boundary_mass_boundary();
    let ones = vec![1.0; sys.dofs.num_boundary()];
    (0..count)
        .map(|_| {
            let coeffs: Vec<(f64, f64)> =
                (1..=TEST_MODES).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let mut psi = sys.boundary_field(|p| {
                let th = p[1].atan2(p[0]);
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, (a, c))| {
                        let (s, co) = ((m + 1) as f64 * th).sin_cos();
                        a * co + c * s
                    })
                    .sum()
            });
            let mean = b.bilinear(&ones, &psi) / sys.boundary_length;
            psi.iter_mut().for_each(|v| *v -= mean);
            psi
        })
        .collect()
}

fn b_norm(sys: &SystemMatrices, f: &[f64]) -> f64 {
    sys.boundary_mass_boundary().bilinear(f, f).max(0.0).sqrt()
}

/// `γₖ = ⟨∂_νΦₖ, ψ⟩` for one cluster over a set of test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEntry {
    pub group_index: usize,
    pub lambda: f64,
    pub null: bool,
    pub gammas: Vec<f64>,
    /// `|γₖ| / (max(‖qₖ‖_B, ‖q₁‖_B) ‖ψ‖_B)`, bounded by the flux deviation.
    pub normalized: Vec<f64>,
}

impl GammaEntry {
    pub fn max_normalized(&self) -> f64 {
        self.normalized.iter().copied().fold(0.0, f64::max)
    }
}

/// Pairings of the first `groups` eigenspace projections with every `ψ`.
pub fn mode_gammas(sys: &SystemMatrices, basis: &EigenBasis, groups: usize, psis: &[Vec<f64>]) -> Result<Vec<GammaEntry>> {
    if groups == 0 || groups > basis.groups.len() {
        return Err(invalid(format!("group count must lie in 1..={}", basis.groups.len())));
    }
    let exts: Vec<Vec<f64>> = psis.iter().map(|p| discrete_harmonic_extension(sys, p)).collect::<Result<_>>()?;
    let reference = b_norm(sys, &eigenspace_flux(sys, basis, 0)?.profile.q);
    (0..groups)
        .map(|g| {
            let flux = eigenspace_flux(sys, basis, g)?;
            let p = basis.projection(g)?;
            let lap: Vec<f64> = p.phi.iter().map(|v| -p.lambda * v).collect();
            let scale = b_norm(sys, &flux.profile.q).max(reference);
            let mut gammas = Vec::with_capacity(psis.len());
            let mut normalized = Vec::with_capacity(psis.len());
            for (psi, ext) in psis.iter().zip(&exts) {
                let gamma = conormal_pairing_with_extension(sys, &p.phi, &lap, ext)?;
                normalized.push(gamma.abs() / (scale * b_norm(sys, psi)));
                gammas.push(gamma);
            }
            Ok(GammaEntry { group_index: g, lambda: p.lambda, null: flux.null, gammas, normalized })
        })
        .collect()
}

/// `max_ψ |⟨∂_ν u(t), ψ⟩| / (‖q(t)‖_B ‖ψ‖_B)` over the test functions.
pub fn heat_pairings(sys: &SystemMatrices, basis: &EigenBasis, t: f64, tol: f64, psis: &[Vec<f64>]) -> Result<f64> {
    let s = heat_solution(basis, t, tol)?;
    let q = crate::heatflow::boundary_flux(sys, &s)?.q;
    let scale = b_norm(sys, &q);
    let mut worst = 0.0f64;
    for psi in psis {
        let ext = discrete_harmonic_extension(sys, psi)?;
        let v = conormal_pairing_with_extension(sys, &s.u, &s.du_dt, &ext)?;
        worst = worst.max(v.abs() / (scale * b_norm(sys, psi)));
    }
    Ok(worst)
}
