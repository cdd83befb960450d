//! Linear solvers behind the finite element and spectral layers.
//!
//! Symmetric positive definite systems up to [`DIRECT_LIMIT`] unknowns are
//! factorized once with a sparse Cholesky (fill-reducing ordering included);
//! larger systems fall back to Jacobi-preconditioned conjugate gradients.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::{Mat, MatRef, Par, Side};

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

/// Largest system solved by direct factorization.
pub const DIRECT_LIMIT: usize = 200_000;

const CG_TOL: f64 = 1e-13;

enum Backend {
    Direct(Llt<usize, f64>),
    Iterative { matrix: CsrMatrix, inv_diag: Vec<f64> },
}

/// Reusable solver for one symmetric positive definite matrix.
pub struct SpdSolver {
    n: usize,
    backend: Backend,
}

impl std::fmt::Debug for SpdSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.backend {
            Backend::Direct(_) => "direct",
            Backend::Iterative { .. } => "cg",
        };
        f.debug_struct("SpdSolver").field("n", &self.n).field("backend", &kind).finish()
    }
}

impl SpdSolver {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        Self::with_limit(matrix, DIRECT_LIMIT)
    }

    pub(crate) fn with_limit(matrix: &CsrMatrix, direct_limit: usize) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 {
            return Err(Error::Solver("empty system".into()));
        }
        let backend = if n <= direct_limit {
            let llt = matrix
                .to_faer()?
                .sp_cholesky(Side::Lower)
                .map_err(|e| Error::Solver(format!("sparse Cholesky failed: {e:?}")))?;
            Backend::Direct(llt)
        } else {
            let diag = matrix.diagonal();
            if diag.iter().any(|&d| d <= 0.0) {
                return Err(Error::Solver("non-positive diagonal entry".into()));
            }
            Backend::Iterative { matrix: matrix.clone(), inv_diag: diag.iter().map(|d| 1.0 / d).collect() }
        };
        Ok(Self { n, backend })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.n);
        match &self.backend {
            Backend::Direct(llt) => {
                let mut b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
                llt.solve_in_place(b.as_mut());
                Ok((0..self.n).map(|i| b[(i, 0)]).collect())
            }
            Backend::Iterative { matrix, inv_diag } => pcg(matrix, inv_diag, rhs),
        }
    }

    /// Solves for every column of `rhs` in place.
    pub fn solve_block(&self, rhs: &mut Mat<f64>) -> Result<()> {
        assert_eq!(rhs.nrows(), self.n);
        match &self.backend {
            Backend::Direct(llt) => {
                llt.solve_in_place(rhs.as_mut());
                Ok(())
            }
            Backend::Iterative { matrix, inv_diag } => {
                for j in 0..rhs.ncols() {
                    let col: Vec<f64> = (0..self.n).map(|i| rhs[(i, j)]).collect();
                    let x = pcg(matrix, inv_diag, &col)?;
                    for (i, v) in x.into_iter().enumerate() {
                        rhs[(i, j)] = v;
                    }
                }
                Ok(())
            }
        }
    }
}

fn pcg(a: &CsrMatrix, inv_diag: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..(10 * n).max(1000) {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Solver("conjugate gradients broke down (pᵀAp <= 0)".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= CG_TOL * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver("conjugate gradients did not converge".into()))
}

/// Dense solution of `K x = λ M x` for symmetric `K` and SPD `M`.
///
/// Returns eigenvalues ascending and M-orthonormal eigenvectors as columns.
pub(crate) fn dense_generalized_eigen(k: MatRef<'_, f64>, m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = k.nrows();
    // Symmetric Jacobi scaling keeps the Cholesky factor well conditioned on
    // graded meshes, where mass entries span orders of magnitude.
    let d: Vec<f64> = (0..n).map(|i| 1.0 / m[(i, i)].sqrt()).collect();
    let k = Mat::<f64>::from_fn(n, n, |i, j| d[i] * k[(i, j)] * d[j]);
    let m = Mat::<f64>::from_fn(n, n, |i, j| d[i] * m[(i, j)] * d[j]);
    let llt = m.llt(Side::Lower).map_err(|e| Error::Solver(format!("mass matrix not SPD: {e:?}")))?;
    let l = llt.L();
    // C = L⁻¹ K L⁻ᵀ, using the symmetry of K for the second solve.
    let mut x = k.to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let eig = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("dense eigensolver failed: {e:?}")))?;
    let values: Vec<f64> = (0..n).map(|i| eig.S()[i]).collect();
    let mut vectors = eig.U().to_owned();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(l.transpose(), vectors.as_mut(), Par::Seq);
    for i in 0..n {
        for j in 0..n {
            vectors[(i, j)] *= d[i];
        }
    }
    Ok((values, vectors))
}

/// Dense symmetric eigendecomposition (ascending).
pub(crate) fn dense_symmetric_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let eig = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("dense eigensolver failed: {e:?}")))?;
    Ok(((0..n).map(|i| eig.S()[i]).collect(), eig.U().to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn direct_and_cg_agree() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x1 = SpdSolver::new(&a).unwrap().solve(&b).unwrap();
        let x2 = SpdSolver::with_limit(&a, 10).unwrap().solve(&b).unwrap();
        let err: f64 = x1.iter().zip(&x2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
        let r = a.mul_vec(&x1);
        assert!(r.iter().zip(&b).all(|(r, b)| (r - b).abs() < 1e-10));
    }

    #[test]
    fn dense_generalized_matches_1d_dirichlet_spectrum() {
        // K = tridiag(-1,2,-1), M = I: eigenvalues 2 - 2cos(kπ/(n+1)).
        let n = 12;
        let k = Mat::<f64>::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let m = Mat::<f64>::identity(n, n);
        let (vals, _) = dense_generalized_eigen(k.as_ref(), m.as_ref()).unwrap();
        for (idx, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((idx + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12);
        }
    }
}
