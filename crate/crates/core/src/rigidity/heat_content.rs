use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fem::{harmonic_residual, SystemMatrices};
use crate::geometry::boundary_curvature;
use crate::heatflow::heat_solution;
use crate::linalg::dense_symmetric_eigen;
use crate::spectral::EigenBasis;

/// Largest accepted harmonicity residual of the weight `ψ`.
pub const HARMONIC_TOL: f64 = 1e-8;

/// Largest condition number of the scaled Vandermonde matrix.
pub const MAX_CONDITION: f64 = 1e6;

/// One evaluation `f(t) = ∫ u(t²) ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatContentSample {
    pub t: f64,
    pub value: f64,
    pub k_used: usize,
    pub limited: bool,
    /// Rounding bound `√N ε |ψ|ᵀM|u|` on the value.
    pub roundoff: f64,
}

/// Geometric predictions for the three leading coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatContentTargets {
    /// `∫_Ω ψ`.
    pub c0: f64,
    /// `−(2/√π) ∫_∂Ω ψ`.
    pub c1: f64,
    /// `½ ∫_∂Ω H ψ`.
    pub c2: f64,
}

impl HeatContentTargets {
    /// Integrals through `M` and `B`; `H` is the discrete boundary curvature.
    pub fn compute(sys: &SystemMatrices, psi: &[f64]) -> Result<Self> {
        let mesh = &sys.mesh;
        let mut kappa = Vec::with_capacity(sys.dofs.num_boundary());
        for l in 0..mesh.boundary_loops.len() {
            kappa.extend(boundary_curvature(mesh, l)?.curvature);
        }
        let psi_b = sys.dofs.gather_boundary(psi);
        let b = sys.boundary_mass_boundary();
        let ones = vec![1.0; psi_b.len()];
        let mass_ones = sys.mass.row_sums();
        Ok(Self {
            c0: mass_ones.iter().zip(psi).map(|(a, b)| a * b).sum(),
            c1: -2.0 / PI.sqrt() * b.bilinear(&ones, &psi_b),
            c2: 0.5 * b.bilinear(&kappa, &psi_b),
        })
    }
}

/// Least-squares fit `f(t) ≈ c0 + c1 t + c2 t²`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatContentFit {
    pub samples: Vec<(f64, f64)>,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Root-mean-square fit residual.
    pub residual: f64,
    /// Condition number of the scaled Vandermonde matrix.
    pub condition: f64,
    /// Standard error of each coefficient implied by the residual.
    pub standard_errors: [f64; 3],
    /// Growth from a unit perturbation of every sample to each coefficient.
    pub amplification: [f64; 3],
}

impl HeatContentFit {
    pub fn coefficients(&self) -> [f64; 3] {
        [self.c0, self.c1, self.c2]
    }

    /// `(cᵢ − targetᵢ) / |targetᵢ|` per coefficient.
    pub fn relative_errors(&self, targets: &HeatContentTargets) -> [f64; 3] {
        let t = [targets.c0, targets.c1, targets.c2];
        let c = self.coefficients();
        [0, 1, 2].map(|i| (c[i] - t[i]) / t[i].abs())
    }
}

/// `ψᵀM u(t²)` for a discrete-harmonic weight.
pub fn heat_content(sys: &SystemMatrices, basis: &EigenBasis, psi: &[f64], t: f64) -> Result<HeatContentSample> {
    if psi.len() != sys.dofs.num_vertices() {
        return Err(invalid("weight must be a full nodal field"));
    }
    let res = harmonic_residual(sys, psi);
    if res > HARMONIC_TOL {
        return Err(Error::NotHarmonic(res));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidTime(t));
    }
    let state = heat_solution(basis, t * t, 1e-10 * sys.area)?;
    let value = sys.mass.bilinear(psi, &state.u);
    let abs_psi: Vec<f64> = psi.iter().map(|v| v.abs()).collect();
    let abs_u: Vec<f64> = state.u.iter().map(|v| v.abs()).collect();
    let roundoff = (psi.len() as f64).sqrt() * f64::EPSILON * sys.mass.bilinear(&abs_psi, &abs_u);
    Ok(HeatContentSample { t, value, k_used: state.k_used, limited: state.truncation.limited, roundoff })
}

/// Fits a quadratic in `t` to at least six strictly increasing samples.
pub fn fit_short_time(samples: &[(f64, f64)]) -> Result<HeatContentFit> {
    if samples.len() < 6 {
        return Err(invalid(format!("need at least 6 samples, got {}", samples.len())));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) || samples[0].0 <= 0.0 {
        return Err(invalid("sample times must be positive and strictly increasing"));
    }
    let scale = samples.last().unwrap().0;
    let rows: Vec<[f64; 3]> = samples.iter().map(|&(t, _)| [1.0, t / scale, (t / scale).powi(2)]).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();

    let mut gram = faer::Mat::<f64>::zeros(3, 3);
    for r in &rows {
        for i in 0..3 {
            for j in 0..3 {
                gram[(i, j)] += r[i] * r[j];
            }
        }
    }
    let (ev, _) = dense_symmetric_eigen(gram.as_ref())?;
    let condition = (ev[2] / ev[0].max(f64::MIN_POSITIVE)).sqrt();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned(format!(
            "Vandermonde condition number {condition:.3e} over [{}, {scale}]; widen the window",
            samples[0].0
        )));
    }

    // Householder-free least squares: modified Gram–Schmidt on three columns.
    let m = rows.len();
    let mut q = vec![vec![0.0; m]; 3];
    let mut r = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut v: Vec<f64> = rows.iter().map(|row| row[j]).collect();
        for i in 0..j {
            r[i][j] = q[i].iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vk, qk) in v.iter_mut().zip(&q[i]) {
                *vk -= r[i][j] * qk;
            }
        }
        r[j][j] = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        q[j] = v.iter().map(|x| x / r[j][j]).collect();
    }
    let qty: Vec<f64> = (0..3).map(|i| q[i].iter().zip(&y).map(|(a, b)| a * b).sum()).collect();
    let mut c = [0.0; 3];
    for i in (0..3).rev() {
        c[i] = (qty[i] - (i + 1..3).map(|j| r[i][j] * c[j]).sum::<f64>()) / r[i][i];
    }
    let residual = (rows
        .iter()
        .zip(&y)
        .map(|(row, yi)| (row[0] * c[0] + row[1] * c[1] + row[2] * c[2] - yi).powi(2))
        .sum::<f64>()
        / m as f64)
        .sqrt();
    // diag((RᵀR)⁻¹) = row norms² of R⁻¹.
    let mut rinv = [[0.0; 3]; 3];
    for j in 0..3 {
        rinv[j][j] = 1.0 / r[j][j];
        for i in (0..j).rev() {
            rinv[i][j] = -(i + 1..=j).map(|l| r[i][l] * rinv[l][j]).sum::<f64>() / r[i][i];
        }
    }
    let sigma = residual * (m as f64 / (m - 3) as f64).sqrt();
    let amplification = [0, 1, 2].map(|i| rinv[i].iter().map(|x| x * x).sum::<f64>().sqrt() / scale.powi(i as i32));
    let standard_errors = amplification.map(|a| sigma * a);
    Ok(HeatContentFit {
        samples: samples.to_vec(),
        c0: c[0],
        c1: c[1] / scale,
        c2: c[2] / (scale * scale),
        residual,
        condition,
        standard_errors,
        amplification,
    })
}

/// Sampling window in the square-root time variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for Window {
    fn default() -> Self {
        Self { t_min: 0.02, t_max: 0.2, samples: 12 }
    }
}

impl Window {
    /// Geometrically spaced sample times.
    pub fn times(&self) -> Vec<f64> {
        let n = self.samples;
        let ratio = (self.t_max / self.t_min).powf(1.0 / (n - 1) as f64);
        (0..n).map(|i| if i + 1 == n { self.t_max } else { self.t_min * ratio.powi(i as i32) }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatContentReport {
    pub fit: HeatContentFit,
    pub targets: HeatContentTargets,
    pub relative_errors: [f64; 3],
    /// Window actually used (after widening).
    pub window: Window,
    /// Set when `t_min` had to be raised to meet the truncation tolerance.
    pub widened: bool,
    /// Some sample was still truncation-limited.
    pub limited: bool,
    pub max_k_used: usize,
    /// Per-coefficient noise: the amplification times the larger of the
    /// residual scale and the sample rounding bound.
    pub noise: [f64; 3],
    /// Corner domains lie outside the smooth-boundary expansion.
    pub outside_theory: bool,
}

/// Samples `f` over the window, raising `t_min` while the series cannot
/// be truncated within tolerance, and fits the quadratic.
pub fn heat_content_experiment(
    sys: &SystemMatrices,
    basis: &EigenBasis,
    psi: &[f64],
    window: Window,
) -> Result<HeatContentReport> {
    if !(window.t_min > 0.0 && window.t_max > window.t_min) || window.samples < 6 {
        return Err(invalid("window needs 0 < t_min < t_max and at least 6 samples"));
    }
    let mut w = window;
    let mut widened = false;
    let samples = loop {
        let s: Vec<HeatContentSample> =
            w.times().iter().map(|&t| heat_content(sys, basis, psi, t)).collect::<Result<_>>()?;
        if !s.iter().any(|x| x.limited) || w.t_min * 1.25 >= 0.5 * w.t_max {
            break s;
        }
        w.t_min *= 1.25;
        widened = true;
    };
    if widened {
        log::warn!("heat-content window widened to t_min = {}", w.t_min);
    }
    let fit = fit_short_time(&samples.iter().map(|s| (s.t, s.value)).collect::<Vec<_>>())?;
    let targets = HeatContentTargets::compute(sys, psi)?;
    let m = samples.len() as f64;
    let sigma = fit.residual * (m / (m - 3.0)).sqrt();
    let floor = samples.iter().map(|s| s.roundoff).fold(sigma, f64::max);
    let noise = fit.amplification.map(|a| a * floor);
    let outside_theory = sys.mesh.spec.as_ref().is_some_and(|s| !s.is_smooth());
    Ok(HeatContentReport {
        relative_errors: fit.relative_errors(&targets),
        fit,
        targets,
        window: w,
        widened,
        limited: samples.iter().any(|s| s.limited),
        max_k_used: samples.iter().map(|s| s.k_used).max().unwrap_or(0),
        noise,
        outside_theory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_is_recovered() {
        let s: Vec<(f64, f64)> = (0..8).map(|i| 0.02 + 0.02 * i as f64).map(|t| (t, 3.0 - 2.0 * t + 0.5 * t * t)).collect();
        let f = fit_short_time(&s).unwrap();
        assert!((f.c0 - 3.0).abs() < 1e-12 && (f.c1 + 2.0).abs() < 1e-10 && (f.c2 - 0.5).abs() < 1e-8);
        assert!(f.residual < 1e-13);
    }

    #[test]
    fn standard_errors_match_normal_equations() {
        let s: Vec<(f64, f64)> = (0..9).map(|i| 0.1 + 0.1 * i as f64).map(|t| (t, t + if (t * 10.0).round() as i32 % 2 == 0 { 1e-3 } else { -1e-3 })).collect();
        let f = fit_short_time(&s).unwrap();
        // Inverse of the unscaled normal matrix, by Cramer's rule.
        let p: Vec<f64> = (0..5).map(|k| s.iter().map(|x| x.0.powi(k)).sum()).collect();
        let g = [[p[0], p[1], p[2]], [p[1], p[2], p[3]], [p[2], p[3], p[4]]];
        let det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
            + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
        let inv_diag = [
            (g[1][1] * g[2][2] - g[1][2] * g[2][1]) / det,
            (g[0][0] * g[2][2] - g[0][2] * g[2][0]) / det,
            (g[0][0] * g[1][1] - g[0][1] * g[1][0]) / det,
        ];
        let sigma = f.residual * (9.0f64 / 6.0).sqrt();
        for i in 0..3 {
            let want = sigma * inv_diag[i].sqrt();
            assert!((f.standard_errors[i] - want).abs() <= 1e-8 * want, "{i} {} {want}", f.standard_errors[i]);
        }
    }

    #[test]
    fn narrow_window_is_ill_conditioned() {
        let s: Vec<(f64, f64)> = (0..8).map(|i| 0.1 + 1e-7 * i as f64).map(|t| (t, t)).collect();
        assert!(matches!(fit_short_time(&s), Err(Error::IllConditioned(_))));
        assert!(fit_short_time(&s[..5]).is_err());
    }

    #[test]
    fn window_times_are_geometric() {
        let t = Window::default().times();
        assert_eq!(t.len(), 12);
        assert!((t[0] - 0.02).abs() < 1e-15 && t[11] == 0.2);
        assert!(((t[1] / t[0]) - (t[6] / t[5])).abs() < 1e-12);
    }
}
