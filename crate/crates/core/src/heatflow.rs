//! Spectral heat solution with unit initial data and its boundary flux,
//! recovered as a consistent residual functional.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fem::{discrete_harmonic_extension, SystemMatrices};
use crate::sparse::dot;
use crate::spectral::{EigenBasis, Truncation};

/// Smallest time accepted for spectral evaluation.
pub const MIN_TIME: f64 = 1e-4;

/// Default truncation tolerance of the heat series (max-norm).
pub const DEFAULT_TOL: f64 = 1e-10;

/// Heat solution `u(t)` and `∂ₜu(t) = Δu(t)` as nodal fields.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatState {
    pub t: f64,
    pub u: Vec<f64>,
    pub du_dt: Vec<f64>,
    /// Number of modes summed.
    pub k_used: usize,
    pub truncation: Truncation,
}

/// Recovered flux density `∂_ν u` on the boundary (loop order).
#[derive(Debug, Clone, PartialEq)]
pub struct FluxProfile {
    pub t: f64,
    pub q: Vec<f64>,
    /// `1ᵀBq / 1ᵀB1`.
    pub mean: f64,
    /// `‖q − q̄‖_B / ‖q‖_B` (zero when `q` vanishes).
    pub deviation: f64,
    /// `1ᵀBq`.
    pub total: f64,
    /// `1ᵀM·laplacian`, which `total` reproduces by Green's identity.
    pub interior_total: f64,
}

impl FluxProfile {
    /// `|1ᵀBq − 1ᵀMΔu| / |1ᵀMΔu|`.
    pub fn balance_error(&self) -> f64 {
        (self.total - self.interior_total).abs() / self.interior_total.abs().max(f64::MIN_POSITIVE)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= MIN_TIME {
        Ok(())
    } else {
        Err(Error::InvalidTime(t))
    }
}

fn state_from_k(basis: &EigenBasis, t: f64, truncation: Truncation) -> HeatState {
    let k = truncation.k;
    let c: Vec<f64> = (0..k).map(|i| basis.alphas[i] * (-basis.lambdas[i] * t).exp()).collect();
    let d: Vec<f64> = (0..k).map(|i| -basis.lambdas[i] * c[i]).collect();
    let u = basis.combine(&c);
    let du_dt = basis.combine(&d);
    let umax = u.iter().copied().fold(f64::MIN, f64::max);
    let umin = u.iter().copied().fold(f64::MAX, f64::min);
    if umin < -1e-2 || umax > 1.0 + 1e-2 {
        log::warn!("heat solution at t = {t} leaves [0, 1] beyond slack: range [{umin}, {umax}]");
    }
    HeatState { t, u, du_dt, k_used: k, truncation }
}

/// `u(t) = Σ αₖ e^{−λₖt} φₖ`, truncated where the tail bound meets `tol`.
pub fn heat_solution(basis: &EigenBasis, t: f64, tol: f64) -> Result<HeatState> {
    check_time(t)?;
    let truncation = basis.truncation_index(t, tol)?;
    if truncation.limited {
        log::warn!(
            "truncation at t = {t} limited by the {} available modes (tail bound {:e} > {tol:e})",
            basis.len(),
            truncation.tail_bound
        );
    }
    Ok(state_from_k(basis, t, truncation))
}

/// Heat solution with a fixed number of modes.
pub fn heat_solution_fixed(basis: &EigenBasis, t: f64, k: usize) -> Result<HeatState> {
    check_time(t)?;
    if k == 0 || k > basis.len() {
        return Err(invalid(format!("mode count must lie in 1..={}, got {k}", basis.len())));
    }
    let truncation = Truncation { k, tail_bound: f64::NAN, limited: false };
    Ok(state_from_k(basis, t, truncation))
}

/// Coefficients `φₖᵀM·field` of a nodal field in the basis.
pub fn expand(sys: &SystemMatrices, basis: &EigenBasis, field: &[f64]) -> Vec<f64> {
    let mf = sys.mass.mul_vec(field);
    basis.modes.iter().map(|phi| dot(phi, &mf)).collect()
}

/// Evolves `field` by the truncated heat semigroup for time `t`.
pub fn propagate(sys: &SystemMatrices, basis: &EigenBasis, field: &[f64], t: f64) -> Vec<f64> {
    let c: Vec<f64> = expand(sys, basis, field)
        .into_iter()
        .zip(&basis.lambdas)
        .map(|(c, l)| c * (-l * t).exp())
        .collect();
    basis.combine(&c)
}

fn check_trace(sys: &SystemMatrices, field: &[f64]) -> Result<()> {
    let n = sys.dofs.num_vertices();
    if field.len() != n {
        return Err(invalid(format!("field has length {}, expected {n}", field.len())));
    }
    let scale = field.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let trace = sys.dofs.boundary.iter().map(|&v| field[v].abs()).fold(0.0, f64::max);
    if trace > 1e-12 * scale {
        return Err(Error::NonzeroTrace(trace));
    }
    Ok(())
}

/// `⟨∂_ν field, ψ⟩ = extᵀ(M·laplacian + K·field)` for a given nodal
/// extension `ext` of the boundary data.
pub fn conormal_pairing_with_extension(sys: &SystemMatrices, field: &[f64], laplacian: &[f64], ext: &[f64]) -> Result<f64> {
    check_trace(sys, field)?;
    let n = sys.dofs.num_vertices();
    if laplacian.len() != n || ext.len() != n {
        return Err(invalid("laplacian and extension must be full nodal fields"));
    }
    Ok(dot(ext, &sys.mass.mul_vec(laplacian)) + dot(ext, &sys.stiffness.mul_vec(field)))
}

/// `⟨∂_ν field, ψ⟩` with the discrete harmonic extension of `ψ` (loop order).
pub fn conormal_pairing(sys: &SystemMatrices, field: &[f64], laplacian: &[f64], psi: &[f64]) -> Result<f64> {
    let ext = discrete_harmonic_extension(sys, psi)?;
    conormal_pairing_with_extension(sys, field, laplacian, &ext)
}

/// Flux density from the boundary residual rows of `K·field + M·laplacian`.
pub fn consistent_flux(sys: &SystemMatrices, field: &[f64], laplacian: &[f64], t: f64) -> Result<FluxProfile> {
    check_trace(sys, field)?;
    if laplacian.len() != sys.dofs.num_vertices() {
        return Err(invalid("laplacian must be a full nodal field"));
    }
    let g = sys.boundary_residual(field, laplacian);
    let q = sys.boundary_solver()?.solve(&g)?;
    let b = sys.boundary_mass_boundary();
    let ones = vec![1.0; q.len()];
    let total = b.bilinear(&ones, &q);
    let mean = total / sys.boundary_length;
    let dev: Vec<f64> = q.iter().map(|v| v - mean).collect();
    let qq = b.bilinear(&q, &q);
    let deviation = if qq > 0.0 { (b.bilinear(&dev, &dev).max(0.0) / qq).sqrt() } else { 0.0 };
    let interior_total: f64 = sys.mass.row_sums().iter().zip(laplacian).map(|(a, b)| a * b).sum();
    Ok(FluxProfile { t, q, mean, deviation, total, interior_total })
}

/// Flux profile of a heat state.
pub fn boundary_flux(sys: &SystemMatrices, state: &HeatState) -> Result<FluxProfile> {
    consistent_flux(sys, &state.u, &state.du_dt, state.t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Some evaluation was truncation-limited.
    Inconclusive,
}

impl Verdict {
    /// Process exit status: 0, 1 or 2.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// Combines two verdicts: any inconclusive part wins, then any failure.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            (Fail, _) | (_, Fail) => Fail,
            _ => Pass,
        }
    }
}

/// Whether a time sequence accumulates at zero or stays spread out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeClustering {
    /// The smallest time is at most a hundredth of the largest.
    NearZero,
    Spread,
}

impl TimeClustering {
    pub fn of(times: &[f64]) -> Self {
        let lo = times.iter().copied().fold(f64::MAX, f64::min);
        let hi = times.iter().copied().fold(f64::MIN, f64::max);
        if lo <= 1e-2 * hi {
            TimeClustering::NearZero
        } else {
            TimeClustering::Spread
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeEntry {
    pub profile: FluxProfile,
    pub k_used: usize,
    pub limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverdeterminationReport {
    pub entries: Vec<TimeEntry>,
    pub max_deviation: f64,
    pub threshold: f64,
    pub clustering: TimeClustering,
    /// Whether `|bₙ|` strictly decreases along increasing times.
    pub means_decreasing: bool,
    pub verdict: Verdict,
}

/// Flux profiles at every time and a verdict against `threshold`.
pub fn check_discrete_overdetermination(
    sys: &SystemMatrices,
    basis: &EigenBasis,
    times: &[f64],
    tol: f64,
    threshold: f64,
) -> Result<OverdeterminationReport> {
    if times.is_empty() {
        return Err(invalid("time list is empty"));
    }
    if !(threshold >= 0.0) {
        return Err(invalid("threshold must be nonnegative"));
    }
    let entries: Vec<TimeEntry> = times
        .par_iter()
        .map(|&t| {
            let state = heat_solution(basis, t, tol)?;
            let profile = boundary_flux(sys, &state)?;
            Ok(TimeEntry { profile, k_used: state.k_used, limited: state.truncation.limited })
        })
        .collect::<Result<_>>()?;
    let max_deviation = entries.iter().map(|e| e.profile.deviation).fold(0.0, f64::max);
    let mut order: Vec<&TimeEntry> = entries.iter().collect();
    order.sort_by(|a, b| a.profile.t.total_cmp(&b.profile.t));
    let means_decreasing = order.windows(2).all(|w| w[1].profile.mean.abs() < w[0].profile.mean.abs());
    let verdict = if entries.iter().any(|e| e.limited) {
        Verdict::Inconclusive
    } else if max_deviation <= threshold {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(OverdeterminationReport {
        entries,
        max_deviation,
        threshold,
        clustering: TimeClustering::of(times),
        means_decreasing,
        verdict,
    })
}

/// Flux of the eigenspace projection `Φₖ` of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenspaceFlux {
    pub group_index: usize,
    pub lambda: f64,
    /// `Σ αⱼ²` over the cluster.
    pub mass: f64,
    /// Set when the projection carries less than `1e-6` of mass.
    pub null: bool,
    pub profile: FluxProfile,
}

/// Mass below which an eigenspace projection counts as null.
pub const NULL_MASS: f64 = 1e-6;

pub fn eigenspace_flux(sys: &SystemMatrices, basis: &EigenBasis, group_index: usize) -> Result<EigenspaceFlux> {
    let p = basis.projection(group_index)?;
    let lap: Vec<f64> = p.phi.iter().map(|v| -p.lambda * v).collect();
    let profile = consistent_flux(sys, &p.phi, &lap, f64::NAN)?;
    Ok(EigenspaceFlux { group_index, lambda: p.lambda, mass: p.mass, null: p.mass < NULL_MASS, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, solve_dirichlet_poisson};
    use crate::geometry::{make_domain, DomainSpec};
    use crate::spectral::eigenbasis;
    use std::f64::consts::PI;

    fn disk(h: f64, count: usize) -> (SystemMatrices, EigenBasis) {
        let sys = assemble(&make_domain(&DomainSpec::disk(1.0, h)).unwrap()).unwrap();
        let b = eigenbasis(&sys, count).unwrap();
        (sys, b)
    }

    #[test]
    fn rejects_small_times() {
        let (_, b) = disk(0.2, 5);
        assert!(matches!(heat_solution(&b, 0.0, 1e-8), Err(Error::InvalidTime(_))));
        assert!(heat_solution(&b, 5e-5, 1e-8).is_err());
    }

    #[test]
    fn long_time_decay_and_monotone_content() {
        let (sys, b) = disk(0.1, 30);
        let late = heat_solution(&b, 50.0, 1e-12).unwrap();
        assert!(sys.mass.bilinear(&late.u, &late.u).sqrt() <= 1e-10);
        let ones = vec![1.0; sys.dofs.num_vertices()];
        let c1 = sys.mass.bilinear(&ones, &heat_solution(&b, 0.1, 1e-6).unwrap().u);
        let c2 = sys.mass.bilinear(&ones, &heat_solution(&b, 0.2, 1e-6).unwrap().u);
        assert!(0.0 < c2 && c2 < c1 && c1 < PI);
    }

    #[test]
    fn torsion_pairings() {
        let (sys, b) = disk(0.05, 4);
        let n = sys.dofs.num_vertices();
        let phi = solve_dirichlet_poisson(&sys, &vec![1.0; n]).unwrap();
        let minus_one = vec![-1.0; n];
        let ones = vec![1.0; sys.dofs.num_boundary()];
        let total = conormal_pairing(&sys, &phi, &minus_one, &ones).unwrap();
        assert!((total + sys.area).abs() < 1e-10);
        let psi = sys.boundary_field(|p| p[0] * p[0] - p[1] * p[1]);
        assert!(conormal_pairing(&sys, &phi, &minus_one, &psi).unwrap().abs() <= 1e-3);
        let lap1: Vec<f64> = b.modes[0].iter().map(|v| -b.lambdas[0] * v).collect();
        let p1 = conormal_pairing(&sys, &b.modes[0], &lap1, &ones).unwrap();
        assert!((p1 + b.lambdas[0] * b.alphas[0]).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonzero_trace() {
        let (sys, _) = disk(0.2, 3);
        let n = sys.dofs.num_vertices();
        let ones = vec![1.0; n];
        assert!(matches!(consistent_flux(&sys, &ones, &ones, 1.0), Err(Error::NonzeroTrace(_))));
    }

    #[test]
    fn single_time_report() {
        let (sys, b) = disk(0.1, 20);
        let r = check_discrete_overdetermination(&sys, &b, &[0.5], 1e-8, 0.02).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(check_discrete_overdetermination(&sys, &b, &[], 1e-8, 0.02).is_err());
    }
}
