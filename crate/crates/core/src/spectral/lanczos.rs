//! Shift-invert block Lanczos for the lowest pairs of `K x = λ M x`.
//!
//! The Krylov space of `K⁻¹M` is built block by block with full
//! M-reorthogonalization, and Ritz pairs are extracted from the projected
//! stiffness `VᵀKV` (so `VᵀMV = I` makes the small problem standard).

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dense_symmetric_eigen, SpdSolver};
use crate::sparse::{dot, norm2, CsrMatrix};

pub(crate) const BLOCK: usize = 4;

pub(crate) struct LanczosResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

/// Krylov basis `V` with `MV` and `KV`, stored column-major.
struct Basis<'a> {
    k: &'a CsrMatrix,
    m: &'a CsrMatrix,
    n: usize,
    v: Vec<f64>,
    mv: Vec<f64>,
    kv: Vec<f64>,
    /// `VᵀKV`, grown as columns are appended.
    t: Vec<Vec<f64>>,
}

impl<'a> Basis<'a> {
    fn new(k: &'a CsrMatrix, m: &'a CsrMatrix, capacity: usize) -> Self {
        let n = k.nrows();
        let store = || Vec::with_capacity(n * capacity);
        Basis { k, m, n, v: store(), mv: store(), kv: store(), t: Vec::new() }
    }

    fn len(&self) -> usize {
        self.v.len() / self.n
    }

    fn view<'s>(&self, data: &'s [f64]) -> MatRef<'s, f64> {
        MatRef::from_column_major_slice(data, self.n, data.len() / self.n)
    }

    fn col<'s>(&self, data: &'s [f64], i: usize) -> &'s [f64] {
        &data[i * self.n..(i + 1) * self.n]
    }

    /// One classical Gram–Schmidt pass of the columns of `w` against the
    /// basis in the M inner product.
    fn project(&self, w: &mut Mat<f64>) {
        if self.len() == 0 {
            return;
        }
        let c = self.view(&self.mv).transpose() * w.as_ref();
        matmul(w.as_mut(), Accum::Add, self.view(&self.v), c.as_ref(), -1.0, Par::Seq);
    }

    /// M-orthonormalizes a block against the basis (two passes) and appends
    /// the columns that have not collapsed.
    fn push_block(&mut self, ws: Vec<Vec<f64>>) {
        let n = self.n;
        let start: Vec<f64> = ws.iter().map(|w| dot(w, &self.m.mul_vec(w)).sqrt()).collect();
        let mut w = Mat::<f64>::from_fn(n, ws.len(), |i, j| ws[j][i]);
        self.project(&mut w);
        self.project(&mut w);
        let old = self.len();
        for (j, s0) in start.into_iter().enumerate() {
            if s0 == 0.0 {
                continue;
            }
            let mut x: Vec<f64> = w.col(j).iter().copied().collect();
            // Against the columns already taken from this block.
            for _ in 0..2 {
                for i in old..self.len() {
                    let c = dot(self.col(&self.mv, i), &x);
                    for (a, b) in x.iter_mut().zip(self.col(&self.v, i)) {
                        *a -= c * b;
                    }
                }
            }
            let mx = self.m.mul_vec(&x);
            let nrm = dot(&x, &mx).sqrt();
            if nrm <= 1e-10 * s0 {
                continue;
            }
            let inv = 1.0 / nrm;
            x.iter_mut().for_each(|a| *a *= inv);
            self.mv.extend(mx.into_iter().map(|a| a * inv));
            self.kv.extend(self.k.mul_vec(&x));
            self.v.extend(x);
        }
        let dim = self.len();
        if dim == old {
            return;
        }
        let fresh = MatRef::from_column_major_slice(&self.kv[old * n..], n, dim - old);
        let rows = fresh.transpose() * self.view(&self.v);
        for r in 0..dim - old {
            self.t.push((0..=old + r).map(|c| rows[(r, c)]).collect());
        }
    }
}

fn relative_residual(kx: &[f64], mx: &[f64], lambda: f64) -> f64 {
    let r: Vec<f64> = kx.iter().zip(mx).map(|(a, b)| a - lambda * b).collect();
    norm2(&r) / (lambda.abs() * norm2(mx)).max(f64::MIN_POSITIVE)
}

/// Lowest `count` eigenpairs. `target` is the relative residual at which
/// the iteration stops; pairs are accepted up to `accept`.
pub(crate) fn lowest_pairs(
    k: &CsrMatrix,
    m: &CsrMatrix,
    solver: &SpdSolver,
    count: usize,
    seed: u64,
    target: f64,
    accept: f64,
) -> Result<LanczosResult> {
    let n = k.nrows();
    let max_dim = n.min((3 * count + 60).max(count + 4 * BLOCK));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis = Basis::new(k, m, max_dim);
    let mut random_block = |b: usize| -> Vec<Vec<f64>> {
        (0..b).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect()
    };

    let mut block = random_block(BLOCK);
    let mut worst = f64::INFINITY;
    let mut last_check = 0;
    loop {
        let before = basis.len();
        block.truncate(max_dim - before);
        basis.push_block(std::mem::take(&mut block));
        // Replace collapsed directions with random ones to keep the block full.
        let mut attempts = 0;
        while basis.len() - before < BLOCK && basis.len() < max_dim && attempts < 4 * BLOCK {
            basis.push_block(random_block(1));
            attempts += 1;
        }
        let fresh = before..basis.len();

        let dim = basis.len();
        let first = (count + count / 2 + BLOCK).min(max_dim);
        let step = (2 * BLOCK).max(dim / 8);
        if dim >= first && (last_check == 0 || dim - last_check >= step || dim >= max_dim) {
            last_check = dim;
            let (values, vectors, residuals) = ritz(&basis, count);
            worst = residuals.iter().cloned().fold(0.0, f64::max);
            if worst <= target || (dim >= max_dim && worst <= accept) {
                return Ok(LanczosResult { values, vectors, residuals });
            }
        }
        if dim >= max_dim || fresh.is_empty() {
            return Err(Error::EigenNonConvergence { worst_residual: worst, count });
        }

        let mut rhs = basis.view(&basis.mv[fresh.start * n..fresh.end * n]).to_owned();
        solver.solve_block(&mut rhs)?;
        block = (0..fresh.len()).map(|j| rhs.col(j).iter().copied().collect()).collect();
    }
}

fn ritz(basis: &Basis<'_>, count: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let dim = basis.len();
    let t = Mat::<f64>::from_fn(dim, dim, |i, j| if j <= i { basis.t[i][j] } else { basis.t[j][i] });
    let (vals, y) = dense_symmetric_eigen(t.as_ref()).expect("small symmetric eigenproblem");
    let y = y.subcols(0, count);
    let x = basis.view(&basis.v) * y;
    let kx = basis.view(&basis.kv) * y;
    let mx = basis.view(&basis.mv) * y;
    let col = |m: &Mat<f64>, c: usize| m.col(c).iter().copied().collect::<Vec<f64>>();
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for c in 0..count {
        residuals.push(relative_residual(&col(&kx, c), &col(&mx, c), vals[c]));
        values.push(vals[c]);
        vectors.push(col(&x, c));
    }
    (values, vectors, residuals)
}
