//! Axisymmetric Dirichlet heat flow on caps and bands of the unit sphere.
//!
//! With `u = u(θ, t)` the Laplace–Beltrami operator reduces to
//! `(sin θ)⁻¹ (sin θ u')'`; the weak form carries the weight `sin θ`, which
//! also supplies the natural condition at the pole of a cap. The problem is
//! discretized with weighted P1 elements on a uniform colatitude grid.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::heatflow::Verdict;

const GAUSS_X: [f64; 5] = [-0.906179845938664, -0.5384693101056831, 0.0, 0.5384693101056831, 0.906179845938664];
const GAUSS_W: [f64; 5] = [0.23692688505618908, 0.47862867049936647, 0.5688888888888889, 0.47862867049936647, 0.23692688505618908];

/// Region on the unit sphere described in colatitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandShape {
    /// `θ₁ < θ < θ₂`.
    Band { theta1: f64, theta2: f64 },
    /// `0 ≤ θ < θ₀`.
    Cap { theta0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub shape: BandShape,
    /// Number of grid nodes.
    pub n_points: usize,
}

impl BandSpec {
    pub fn band(theta1: f64, theta2: f64, n_points: usize) -> Self {
        Self { shape: BandShape::Band { theta1, theta2 }, n_points }
    }

    pub fn cap(theta0: f64, n_points: usize) -> Self {
        Self { shape: BandShape::Cap { theta0 }, n_points }
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |t: f64| t.is_finite() && t > 0.0 && t < std::f64::consts::PI;
        match self.shape {
            BandShape::Band { theta1, theta2 } => {
                if !(inside(theta1) && inside(theta2) && theta1 < theta2) {
                    return Err(invalid(format!("band needs 0 < θ₁ < θ₂ < π, got ({theta1}, {theta2})")));
                }
            }
            BandShape::Cap { theta0 } => {
                if !inside(theta0) {
                    return Err(invalid(format!("cap needs 0 < θ₀ < π, got {theta0}")));
                }
            }
        }
        if self.n_points < 100 {
            return Err(invalid(format!("band grid needs at least 100 points, got {}", self.n_points)));
        }
        Ok(())
    }

    /// Colatitude interval of the region.
    pub fn interval(&self) -> (f64, f64) {
        match self.shape {
            BandShape::Band { theta1, theta2 } => (theta1, theta2),
            BandShape::Cap { theta0 } => (0.0, theta0),
        }
    }

    pub fn is_cap(&self) -> bool {
        matches!(self.shape, BandShape::Cap { .. })
    }

    /// Band symmetric about the equator.
    pub fn symmetric(&self) -> bool {
        match self.shape {
            BandShape::Band { theta1, theta2 } => (theta1 + theta2 - std::f64::consts::PI).abs() <= 1e-12,
            BandShape::Cap { .. } => false,
        }
    }

    /// `∫ sin θ dθ` over the interval (area divided by 2π).
    pub fn weight_integral(&self) -> f64 {
        let (a, b) = self.interval();
        a.cos() - b.cos()
    }

    /// Same region on a different grid.
    pub fn with_points(&self, n_points: usize) -> Self {
        Self { n_points, ..*self }
    }
}

/// Tridiagonal weighted stiffness and mass on the full grid.
#[derive(Debug, Clone)]
struct Tridiag {
    kd: Vec<f64>,
    ke: Vec<f64>,
    md: Vec<f64>,
    me: Vec<f64>,
}

fn assemble_1d(theta: &[f64]) -> Tridiag {
    let n = theta.len();
    let mut t = Tridiag { kd: vec![0.0; n], ke: vec![0.0; n - 1], md: vec![0.0; n], me: vec![0.0; n - 1] };
    for i in 0..n - 1 {
        let (p, q) = (theta[i], theta[i + 1]);
        let h = q - p;
        let w = 2.0 * (0.5 * (p + q)).sin() * (0.5 * h).sin();
        t.kd[i] += w / (h * h);
        t.kd[i + 1] += w / (h * h);
        t.ke[i] -= w / (h * h);
        let (mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0);
        for (x, wg) in GAUSS_X.iter().zip(GAUSS_W) {
            let s = 0.5 * (1.0 + x);
            let th = p + s * h;
            let f = th.sin() * 0.5 * h * wg;
            m00 += f * (1.0 - s) * (1.0 - s);
            m01 += f * (1.0 - s) * s;
            m11 += f * s * s;
        }
        t.md[i] += m00;
        t.md[i + 1] += m11;
        t.me[i] += m01;
    }
    t
}

/// Axisymmetric eigenpairs of a cap or band.
#[derive(Debug, Clone)]
pub struct BandEigenBasis {
    pub spec: BandSpec,
    /// Grid colatitudes.
    pub theta: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Modes on the full grid (zero at Dirichlet ends), orthonormal in the
    /// weighted mass.
    pub modes: Vec<Vec<f64>>,
    /// `∫ φₖ sin θ dθ`.
    pub alphas: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Grid indices of the unknowns.
    free: Vec<usize>,
    mats: Tridiag,
}

/// Number of eigenvalues of the pencil below `sigma` (Sylvester inertia).
fn sturm_count(kd: &[f64], ke: &[f64], md: &[f64], me: &[f64], sigma: f64) -> usize {
    let mut count = 0;
    let mut p = 0.0;
    for i in 0..kd.len() {
        let d = kd[i] - sigma * md[i];
        p = if i == 0 {
            d
        } else {
            let e = ke[i - 1] - sigma * me[i - 1];
            d - e * e / p
        };
        if p == 0.0 {
            p = -f64::EPSILON * (kd[i].abs() + sigma.abs() * md[i]);
        }
        if p < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solves the tridiagonal system `(a, b, a)` with right-hand side `r`.
fn thomas(diag: &[f64], off: &[f64], r: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut piv = if diag[0].abs() < tiny { tiny } else { diag[0] };
    c[0] = if n > 1 { off[0] / piv } else { 0.0 };
    d[0] = r[0] / piv;
    for i in 1..n {
        piv = diag[i] - off[i - 1] * c[i - 1];
        if piv.abs() < tiny {
            piv = tiny;
        }
        c[i] = if i + 1 < n { off[i] / piv } else { 0.0 };
        d[i] = (r[i] - off[i - 1] * d[i - 1]) / piv;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn tri_mul(diag: &[f64], off: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut v = diag[i] * x[i];
            if i > 0 {
                v += off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += off[i] * x[i + 1];
            }
            v
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The lowest `count` axisymmetric Dirichlet eigenpairs.
pub fn band_eigenbasis(spec: &BandSpec, count: usize) -> Result<BandEigenBasis> {
    spec.validate()?;
    let (a, b) = spec.interval();
    let n = spec.n_points;
    let theta: Vec<f64> = (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect();
    let mats = assemble_1d(&theta);
    let free: Vec<usize> = if spec.is_cap() { (0..n - 1).collect() } else { (1..n - 1).collect() };
    let nf = free.len();
    if count == 0 || count > nf {
        return Err(invalid(format!("mode count must lie in 1..={nf}, got {count}")));
    }
    let (f0, f1) = (free[0], free[nf - 1]);
    let kd = mats.kd[f0..=f1].to_vec();
    let ke = mats.ke[f0..f1].to_vec();
    let md = mats.md[f0..=f1].to_vec();
    let me = mats.me[f0..f1].to_vec();

    let mut hi = 1.0;
    while sturm_count(&kd, &ke, &md, &me, hi) < count {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::EigenNonConvergence { worst_residual: f64::INFINITY, count });
        }
    }

    let mut lambdas = Vec::with_capacity(count);
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    let mut alphas = Vec::with_capacity(count);
    for k in 0..count {
        // Bisection on the number of eigenvalues below the midpoint.
        let (mut lo, mut up) = (0.0, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if sturm_count(&kd, &ke, &md, &me, mid) > k {
                up = mid;
            } else {
                lo = mid;
            }
            if up - lo <= 4.0 * f64::EPSILON * up {
                break;
            }
        }
        let lambda = 0.5 * (lo + up);
        let shifted: Vec<f64> = kd.iter().zip(&md).map(|(k, m)| k - lambda * m).collect();
        let shifted_e: Vec<f64> = ke.iter().zip(&me).map(|(k, m)| k - lambda * m).collect();
        let mut x: Vec<f64> = (0..nf).map(|i| 1.0 + 0.1 * ((i * (k + 3)) as f64).sin()).collect();
        for _ in 0..4 {
            let rhs = tri_mul(&md, &me, &x);
            x = thomas(&shifted, &shifted_e, &rhs);
            for prev in &modes {
                let p: Vec<f64> = free.iter().map(|&g| prev[g]).collect();
                let c = dot(&p, &tri_mul(&md, &me, &x));
                x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi -= c * pi);
            }
            let s = dot(&x, &tri_mul(&md, &me, &x)).sqrt();
            x.iter_mut().for_each(|v| *v /= s);
        }
        let mx = tri_mul(&md, &me, &x);
        let kx = tri_mul(&kd, &ke, &x);
        let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
        let mut alpha: f64 = mx.iter().sum();
        let res = norm(&r) / (lambda * norm(&mx));
        let flip = if alpha.abs() > 1e-12 { alpha < 0.0 } else { x.iter().fold(0.0f64, |a, &v| if v.abs() > a.abs() { v } else { a }) < 0.0 };
        if flip {
            x.iter_mut().for_each(|v| *v = -*v);
            alpha = -alpha;
        }
        let mut full = vec![0.0; n];
        for (&g, v) in free.iter().zip(&x) {
            full[g] = *v;
        }
        lambdas.push(lambda);
        residuals.push(res);
        alphas.push(alpha);
        modes.push(full);
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(Error::EigenNonConvergence { worst_residual: worst, count });
    }
    Ok(BandEigenBasis { spec: *spec, theta, lambdas, modes, alphas, residuals, free, mats })
}

impl BandEigenBasis {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Weighted mass inner product of two grid functions.
    pub fn mass_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dot(a, &tri_mul(&self.mats.md, &self.mats.me, b))
    }

    /// `(u(t), ∂ₜu(t))` on the grid.
    pub fn heat(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.theta.len();
        let mut u = vec![0.0; n];
        let mut du = vec![0.0; n];
        for k in 0..self.len() {
            let c = self.alphas[k] * (-self.lambdas[k] * t).exp();
            for i in 0..n {
                u[i] += c * self.modes[k][i];
                du[i] -= self.lambdas[k] * c * self.modes[k][i];
            }
        }
        (u, du)
    }

    /// Number of unknowns of the discrete problem.
    pub fn dim(&self) -> usize {
        self.free.len()
    }
}

/// Outward flux densities at the boundary circles of a band at time `t`;
/// `q2` is `None` for a cap.
pub fn band_flux(basis: &BandEigenBasis, t: f64) -> Result<(f64, Option<f64>)> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidTime(t));
    }
    let (u, du) = basis.heat(t);
    let k = tri_mul(&basis.mats.kd, &basis.mats.ke, &u);
    let m = tri_mul(&basis.mats.md, &basis.mats.me, &du);
    let n = u.len();
    let theta = &basis.theta;
    let q_end = (k[n - 1] + m[n - 1]) / theta[n - 1].sin();
    if basis.spec.is_cap() {
        Ok((q_end, None))
    } else {
        let q_start = (k[0] + m[0]) / theta[0].sin();
        Ok((q_start, Some(q_end)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowEntry {
    pub t: f64,
    pub q1: f64,
    pub q2: Option<f64>,
    /// `F = q1 − q2` (zero for caps).
    pub f: f64,
    /// Grid-calibrated noise level for `|F|`.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantFlowReport {
    pub entries: Vec<FlowEntry>,
    pub verdict: Verdict,
}

/// Modes kept in the flows of [`constant_flow_report`].
pub const FLOW_MODES: usize = 60;

/// `F_ψ(t)` for the zero-average function `1/|C₁|` on the first circle and
/// `−1/|C₂|` on the second, which reduces to `q1 − q2`. The noise at each
/// time is `1e-6·max(|q1|, |q2|)` plus the change of `F` from the grid with
/// half as many points.
pub fn constant_flow_report(spec: &BandSpec, times: &[f64]) -> Result<ConstantFlowReport> {
    if times.is_empty() {
        return Err(invalid("time list is empty"));
    }
    let fine = band_eigenbasis(spec, FLOW_MODES.min(spec.n_points - 2))?;
    let coarse_spec = spec.with_points((spec.n_points / 2).max(100));
    let coarse = band_eigenbasis(&coarse_spec, FLOW_MODES.min(coarse_spec.n_points - 2))?;
    let entries: Vec<FlowEntry> = times
        .par_iter()
        .map(|&t| {
            let (q1, q2) = band_flux(&fine, t)?;
            let (c1, c2) = band_flux(&coarse, t)?;
            let f = q2.map_or(0.0, |q2| q1 - q2);
            let fc = c2.map_or(0.0, |c2| c1 - c2);
            let scale = q1.abs().max(q2.map_or(0.0, f64::abs));
            Ok(FlowEntry { t, q1, q2, f, noise: 1e-6 * scale + (f - fc).abs() })
        })
        .collect::<Result<_>>()?;
    let verdict = if entries.iter().all(|e| e.f.abs() <= e.noise) { Verdict::Pass } else { Verdict::Fail };
    Ok(ConstantFlowReport { entries, verdict })
}
