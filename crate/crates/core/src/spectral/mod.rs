//! Dirichlet eigenbasis of the restricted pencil `(K_int, M_int)`, the
//! expansion coefficients of the constant function and truncation control.

mod lanczos;

use std::io::Write;
use std::ops::Range;
use std::sync::Arc;

use faer::Mat;

use crate::error::{invalid, Error, Result};
use crate::fem::SystemMatrices;
use crate::geometry::Mesh;
use crate::linalg::dense_generalized_eigen;
use crate::sparse::{dot, norm2};

/// Relative gap below which neighbouring eigenvalues share a cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Largest interior dimension solved densely regardless of `count`.
pub const DENSE_LIMIT: usize = 1500;

/// Largest interior dimension for which the dense path is a fallback.
pub const DENSE_FALLBACK_LIMIT: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Dense for small problems or large requested fractions, Lanczos otherwise.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOptions {
    pub method: EigenMethod,
    /// Constant `C` of the lower bound `λₖ ≥ C·k`; defaults to `2π/|Ω|`.
    pub li_yau_constant: Option<f64>,
    pub cluster_tol: f64,
    /// Seed for the Lanczos start block.
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { method: EigenMethod::Auto, li_yau_constant: None, cluster_tol: CLUSTER_TOL, seed: 0x5eed }
    }
}

/// The lowest Dirichlet eigenpairs of a mesh.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    /// Nondecreasing eigenvalues.
    pub lambdas: Vec<f64>,
    /// M-orthonormal modes as full nodal fields (zero on the boundary).
    pub modes: Vec<Vec<f64>>,
    /// `αₖ = 1ᵀMφₖ`, sign-normalized to be nonnegative.
    pub alphas: Vec<f64>,
    /// Index ranges of eigenvalue clusters.
    pub groups: Vec<Range<usize>>,
    /// Nodal max-norm of every mode.
    pub sup_norms: Vec<f64>,
    /// Relative residual `‖Kφ − λMφ‖ / (λ‖Mφ‖)` per mode.
    pub residuals: Vec<f64>,
    pub mesh: Arc<Mesh>,
    /// `1ᵀM1`.
    pub area: f64,
    pub li_yau_constant: f64,
    /// Number of interior unknowns; the basis is complete when it has this
    /// many modes.
    pub interior_dim: usize,
    pub method: EigenMethod,
}

/// Projection of the constant function onto one eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenspaceProjection {
    pub group_index: usize,
    /// Mean eigenvalue of the cluster.
    pub lambda: f64,
    /// `Φₖ = Σ αⱼ φⱼ` over the cluster.
    pub phi: Vec<f64>,
    /// `Σ αⱼ²`, the squared M-norm of `Φₖ`.
    pub mass: f64,
}

/// Outcome of a truncation query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Number of leading modes to keep.
    pub k: usize,
    /// Bound on the neglected part of the series in the max-norm.
    pub tail_bound: f64,
    /// Set when the tolerance could not be met with the available modes.
    pub limited: bool,
}

/// The lowest `count` eigenpairs with default options.
pub fn eigenbasis(sys: &SystemMatrices, count: usize) -> Result<EigenBasis> {
    eigenbasis_with(sys, count, &SpectralOptions::default())
}

fn use_dense(method: EigenMethod, n: usize, count: usize) -> bool {
    match method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => n <= DENSE_LIMIT || (3 * count >= n && n <= DENSE_FALLBACK_LIMIT),
    }
}

fn dense_pairs(sys: &SystemMatrices, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = sys.stiffness_interior();
    let m = sys.mass_interior();
    let n = k.nrows();
    let mut kd = Mat::<f64>::zeros(n, n);
    let mut md = Mat::<f64>::zeros(n, n);
    for (i, j, v) in k.triplets() {
        kd[(i, j)] = v;
    }
    for (i, j, v) in m.triplets() {
        md[(i, j)] = v;
    }
    let (vals, vecs) = dense_generalized_eigen(kd.as_ref(), md.as_ref())?;
    let vectors = (0..count).map(|c| (0..n).map(|i| vecs[(i, c)]).collect()).collect();
    Ok((vals[..count].to_vec(), vectors))
}

/// The lowest `count` eigenpairs of `K_int φ = λ M_int φ`.
pub fn eigenbasis_with(sys: &SystemMatrices, count: usize, opts: &SpectralOptions) -> Result<EigenBasis> {
    let n = sys.dofs.num_interior();
    if count == 0 || count > n {
        return Err(invalid(format!("mode count must lie in 1..={n}, got {count}")));
    }
    if !(opts.cluster_tol >= 0.0) {
        return Err(invalid("cluster tolerance must be nonnegative"));
    }
    let k = sys.stiffness_interior();
    let m = sys.mass_interior();
    let mut method = if use_dense(opts.method, n, count) { EigenMethod::Dense } else { EigenMethod::Lanczos };
    let (lambdas, vectors) = if method == EigenMethod::Dense {
        dense_pairs(sys, count)?
    } else {
        match lanczos::lowest_pairs(k, m, sys.interior_solver()?, count, opts.seed, 1e-10, 1e-8) {
            Ok(r) => {
                log::debug!("Lanczos worst Ritz residual {:e}", r.residuals.iter().copied().fold(0.0, f64::max));
                (r.values, r.vectors)
            }
            Err(e) if n <= DENSE_FALLBACK_LIMIT => {
                log::warn!("Lanczos failed ({e}); falling back to the dense solver");
                method = EigenMethod::Dense;
                dense_pairs(sys, count)?
            }
            Err(e) => return Err(e),
        }
    };

    let area = sys.area;
    let ones_m = sys.dofs.gather_interior(&sys.mass.row_sums());
    let mut modes = Vec::with_capacity(count);
    let mut alphas = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    let mut sup_norms = Vec::with_capacity(count);
    let alpha_floor = 1e-10 * area.sqrt();
    for (lambda, mut x) in lambdas.iter().copied().zip(vectors) {
        let mut alpha = dot(&ones_m, &x);
        let flip = if alpha.abs() > alpha_floor {
            alpha < 0.0
        } else {
            let big = x.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            big < 0.0
        };
        if flip {
            x.iter_mut().for_each(|v| *v = -*v);
            alpha = -alpha;
        }
        let kx = k.mul_vec(&x);
        let mx = m.mul_vec(&x);
        let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lambda * b).collect();
        residuals.push(norm2(&r) / (lambda.abs() * norm2(&mx)));
        sup_norms.push(x.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        alphas.push(alpha);
        modes.push(sys.dofs.scatter_interior(&x));
    }

    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(Error::EigenNonConvergence { worst_residual: worst, count });
    }
    if lambdas.iter().any(|&l| l <= 0.0) || lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Sanity("eigenvalues must be positive and nondecreasing".into()));
    }
    let c = opts.li_yau_constant.unwrap_or(2.0 * std::f64::consts::PI / area);
    if let Some(k) = lambdas.iter().enumerate().position(|(i, &l)| l < c * (i + 1) as f64 * (1.0 - 1e-12)) {
        return Err(Error::Sanity(format!(
            "lower bound λ_k >= C·k violated at k = {} (λ = {}, C = {c})",
            k + 1,
            lambdas[k]
        )));
    }
    let groups = cluster(&lambdas, opts.cluster_tol);
    let basis = EigenBasis {
        lambdas,
        modes,
        alphas,
        groups,
        sup_norms,
        residuals,
        mesh: sys.mesh.clone(),
        area,
        li_yau_constant: c,
        interior_dim: n,
        method,
    };
    coefficients(&basis)?;
    Ok(basis)
}

/// Clusters of consecutive eigenvalues with relative gap at most `tol`.
pub fn cluster(lambdas: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=lambdas.len() {
        if i == lambdas.len() || lambdas[i] - lambdas[i - 1] > tol * lambdas[i].abs() {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

/// The coefficients `αₖ`, after checking Bessel's inequality `Σαₖ² ≤ |Ω|`.
pub fn coefficients(basis: &EigenBasis) -> Result<Vec<f64>> {
    let total: f64 = basis.alphas.iter().map(|a| a * a).sum();
    if total > basis.area * (1.0 + 1e-10) {
        return Err(Error::Sanity(format!("Bessel inequality violated: Σα² = {total} > area {}", basis.area)));
    }
    Ok(basis.alphas.clone())
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `true` when every interior eigenpair is present.
    pub fn is_complete(&self) -> bool {
        self.len() == self.interior_dim
    }

    /// Group sizes in order.
    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    /// Index of the group containing mode `k` (zero-based).
    pub fn group_of(&self, k: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&k))
    }

    /// `Σ_{k<K} cₖ φₖ` as a nodal field.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.num_vertices()];
        for (c, phi) in coeffs.iter().zip(&self.modes) {
            if *c != 0.0 {
                for (o, p) in out.iter_mut().zip(phi) {
                    *o += c * p;
                }
            }
        }
        out
    }

    pub fn projection(&self, group_index: usize) -> Result<EigenspaceProjection> {
        let g = self
            .groups
            .get(group_index)
            .ok_or_else(|| invalid(format!("group {group_index} does not exist ({} groups)", self.groups.len())))?
            .clone();
        let mut coeffs = vec![0.0; g.end];
        coeffs[g.clone()].copy_from_slice(&self.alphas[g.clone()]);
        let lambda = self.lambdas[g.clone()].iter().sum::<f64>() / g.len() as f64;
        let mass = self.alphas[g.clone()].iter().map(|a| a * a).sum();
        Ok(EigenspaceProjection { group_index, lambda, phi: self.combine(&coeffs), mass })
    }

    /// `Σ_{j≥k} sup_{λ≥μⱼ} √(eλ/4π) e^{−λt}` with `μⱼ = max(C·j, λ_count)`,
    /// times `√|Ω|`: a bound for modes beyond the computed ones.
    pub fn beyond_count_bound(&self, t: f64) -> f64 {
        if self.is_complete() {
            return 0.0;
        }
        let c = self.li_yau_constant;
        let last = *self.lambdas.last().unwrap();
        let peak = 0.5 / t;
        let g = |lambda: f64| (std::f64::consts::E * lambda / (4.0 * std::f64::consts::PI)).sqrt() * (-lambda * t).exp();
        let mut sum = 0.0;
        let mut j = self.len() + 1;
        loop {
            let mu = (c * j as f64).max(last);
            let term = if mu >= peak { g(mu) } else { g(peak) };
            sum += term;
            if mu > peak && term <= 1e-18 * sum {
                break;
            }
            if j > 100_000_000 {
                return f64::INFINITY;
            }
            j += 1;
        }
        self.area.sqrt() * sum
    }

    /// Smallest `K` for which the max-norm tail of `Σ αₖ e^{−λₖt} φₖ`
    /// beyond `K` is bounded by `tol`.
    pub fn truncation_index(&self, t: f64, tol: f64) -> Result<Truncation> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidTime(t));
        }
        if !(tol > 0.0) {
            return Err(invalid(format!("truncation tolerance must be positive, got {tol}")));
        }
        let beyond = self.beyond_count_bound(t);
        let terms: Vec<f64> = (0..self.len())
            .map(|k| self.alphas[k].abs() * (-self.lambdas[k] * t).exp() * self.sup_norms[k])
            .collect();
        // tails[k] = Σ_{j≥k} terms[j]
        let mut tails = vec![0.0; self.len() + 1];
        for k in (0..self.len()).rev() {
            tails[k] = tails[k + 1] + terms[k];
        }
        for k in 1..=self.len() {
            let bound = tails[k] + beyond;
            if bound <= tol {
                return Ok(Truncation { k, tail_bound: bound, limited: false });
            }
        }
        Ok(Truncation { k: self.len(), tail_bound: beyond, limited: true })
    }

    /// M-norm error of the `K`-term reconstruction of the constant function.
    pub fn reconstruction_error(&self, k: usize, mass: &crate::sparse::CsrMatrix) -> f64 {
        let coeffs = &self.alphas[..k.min(self.len())];
        let approx = self.combine(coeffs);
        let diff: Vec<f64> = approx.iter().map(|a| 1.0 - a).collect();
        mass.bilinear(&diff, &diff).max(0.0).sqrt()
    }

    /// Writes `k lambda alpha` followed by the nodal values of every mode.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for k in 0..self.len() {
            writeln!(out, "{} {:.16e} {:.16e}", k + 1, self.lambdas[k], self.alphas[k])?;
            let line: Vec<String> = self.modes[k].iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Free-function form of [`EigenBasis::truncation_index`].
pub fn truncation_index(basis: &EigenBasis, t: f64, tol: f64) -> Result<Truncation> {
    basis.truncation_index(t, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::geometry::{make_domain, DomainSpec};

    #[test]
    fn clustering() {
        let g = cluster(&[1.0, 2.0, 2.0 + 1e-9, 3.0, 3.1], 1e-6);
        assert_eq!(g, vec![0..1, 1..3, 3..4, 4..5]);
    }

    #[test]
    fn dense_and_lanczos_agree() {
        let sys = assemble(&make_domain(&DomainSpec::disk(1.0, 0.08)).unwrap()).unwrap();
        let d = eigenbasis_with(&sys, 12, &SpectralOptions { method: EigenMethod::Dense, ..Default::default() }).unwrap();
        let l = eigenbasis_with(&sys, 12, &SpectralOptions { method: EigenMethod::Lanczos, ..Default::default() }).unwrap();
        for (a, b) in d.lambdas.iter().zip(&l.lambdas) {
            assert!((a - b).abs() / a < 1e-10, "{a} vs {b}");
        }
        for (a, b) in d.alphas.iter().zip(&l.alphas) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert_eq!(d.group_sizes(), l.group_sizes());
    }

    #[test]
    fn disk_first_radial_mode() {
        let sys = assemble(&make_domain(&DomainSpec::disk(1.0, 0.05)).unwrap()).unwrap();
        let b = eigenbasis(&sys, 10).unwrap();
        // α₁²/π = 4/j₀₁²
        let j01 = 2.404825557695773;
        assert!((b.alphas[0].powi(2) / std::f64::consts::PI - 4.0 / (j01 * j01)).abs() < 2e-3);
        assert_eq!(&b.group_sizes()[..3], &[1, 2, 2]);
        assert!(b.alphas[1].abs() <= 1e-6 * std::f64::consts::PI.sqrt());
    }

    #[test]
    fn truncation_behaviour() {
        let sys = assemble(&make_domain(&DomainSpec::disk(1.0, 0.1)).unwrap()).unwrap();
        let b = eigenbasis(&sys, 20).unwrap();
        assert_eq!(b.truncation_index(1.0, f64::INFINITY).unwrap().k, 1);
        let a = b.truncation_index(1.0, 1e-8).unwrap();
        assert!(a.k <= 6 && !a.limited);
        assert!(b.truncation_index(0.0, 1e-8).is_err());
        assert!(b.truncation_index(1e-3, 1e-12).unwrap().limited);
    }

    #[test]
    fn rejects_bad_count() {
        let sys = assemble(&make_domain(&DomainSpec::disk(1.0, 0.2)).unwrap()).unwrap();
        assert!(eigenbasis(&sys, 0).is_err());
        assert!(eigenbasis(&sys, sys.dofs.num_interior() + 1).is_err());
    }
}
