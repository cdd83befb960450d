//! Piecewise-linear finite element matrices and Dirichlet solves.
//!
//! All element integrals are closed-form. Dirichlet conditions are imposed by
//! restriction to the interior degrees of freedom.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::Mesh;
use crate::linalg::SpdSolver;
use crate::sparse::{norm2, CsrMatrix};

/// Split of the mesh vertices into interior and boundary unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    /// Interior vertex indices in increasing order.
    pub interior: Vec<usize>,
    /// Boundary vertex indices in loop order.
    pub boundary: Vec<usize>,
    slot: Vec<usize>,
}

impl DofMap {
    fn new(mesh: &Mesh) -> Self {
        let interior: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| mesh.interior_mask[v]).collect();
        let boundary = mesh.boundary_vertices();
        let mut slot = vec![usize::MAX; mesh.num_vertices()];
        for (i, &v) in interior.iter().enumerate() {
            slot[v] = i;
        }
        for (i, &v) in boundary.iter().enumerate() {
            slot[v] = i;
        }
        Self { interior, boundary, slot }
    }

    pub fn num_vertices(&self) -> usize {
        self.slot.len()
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary.len()
    }

    /// Position of vertex `v` within its own list (interior or boundary).
    pub fn slot(&self, v: usize) -> usize {
        self.slot[v]
    }

    pub fn gather_interior(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&v| full[v]).collect()
    }

    pub fn gather_boundary(&self, full: &[f64]) -> Vec<f64> {
        self.boundary.iter().map(|&v| full[v]).collect()
    }

    /// Full nodal field with the given interior values and zero boundary.
    pub fn scatter_interior(&self, values: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_vertices()];
        for (&v, &x) in self.interior.iter().zip(values) {
            full[v] = x;
        }
        full
    }
}

/// Assembled stiffness, mass and boundary-mass matrices of a mesh.
#[derive(Debug)]
pub struct SystemMatrices {
    pub mesh: Arc<Mesh>,
    /// `∫ ∇φᵢ·∇φⱼ`.
    pub stiffness: CsrMatrix,
    /// `∫ φᵢ φⱼ`.
    pub mass: CsrMatrix,
    /// `∫_∂Ω φᵢ φⱼ ds`, nonzero only between boundary vertices.
    pub boundary_mass: CsrMatrix,
    pub dofs: DofMap,
    /// `1ᵀM1`.
    pub area: f64,
    /// `1ᵀB1`.
    pub boundary_length: f64,
    k_ii: CsrMatrix,
    k_ib: CsrMatrix,
    m_ii: CsrMatrix,
    b_bb: CsrMatrix,
    k_solver: OnceLock<SpdSolver>,
    b_solver: OnceLock<SpdSolver>,
}

fn element(mesh: &Mesh, t: usize) -> ([usize; 3], [[f64; 3]; 3], f64) {
    let idx = mesh.triangles[t];
    let p = idx.map(|i| mesh.vertices[i]);
    let area = mesh.signed_area(t);
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    (idx, k, area)
}

/// Element stiffness and mass matrices of one triangle.
pub fn element_matrices(p: [[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let mesh = Mesh::from_parts(p.to_vec(), vec![[0, 1, 2]]).expect("positively oriented triangle");
    let (_, k, area) = element(&mesh, 0);
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    (k, m)
}

fn stiffness_and_mass(mesh: &Mesh, triangles: &[usize]) -> (CsrMatrix, CsrMatrix) {
    let n = mesh.num_vertices();
    let (kt, mt): (Vec<_>, Vec<_>) = triangles
        .par_iter()
        .map(|&t| {
            let (idx, k, area) = element(mesh, t);
            let mut kt = Vec::with_capacity(9);
            let mut mt = Vec::with_capacity(9);
            for i in 0..3 {
                for j in 0..3 {
                    kt.push((idx[i], idx[j], k[i][j]));
                    mt.push((idx[i], idx[j], if i == j { area / 6.0 } else { area / 12.0 }));
                }
            }
            (kt, mt)
        })
        .unzip();
    let kt: Vec<_> = kt.into_iter().flatten().collect();
    let mt: Vec<_> = mt.into_iter().flatten().collect();
    (CsrMatrix::from_triplets(n, n, &kt), CsrMatrix::from_triplets(n, n, &mt))
}

/// One-dimensional P1 mass matrix of a closed vertex chain, indexed by
/// position in the chain.
pub fn loop_mass(mesh: &Mesh, chain: &[usize]) -> CsrMatrix {
    let n = chain.len();
    let mut trip = Vec::with_capacity(4 * n);
    for i in 0..n {
        let j = (i + 1) % n;
        let (a, b) = (mesh.vertices[chain[i]], mesh.vertices[chain[j]]);
        let len = (a[0] - b[0]).hypot(a[1] - b[1]);
        trip.extend([(i, i, len / 3.0), (j, j, len / 3.0), (i, j, len / 6.0), (j, i, len / 6.0)]);
    }
    CsrMatrix::from_triplets(n, n, &trip)
}

/// Assembles `K`, `M` and `B` for a valid mesh.
pub fn assemble(mesh: &Mesh) -> Result<SystemMatrices> {
    mesh.validate()?;
    let nt = mesh.num_triangles();
    let mean = mesh.area() / nt as f64;
    for t in 0..nt {
        let a = mesh.signed_area(t);
        if a < 1e-14 * mean {
            return Err(Error::DegenerateTriangle { index: t, area: a, mean });
        }
    }
    let dofs = DofMap::new(mesh);
    if dofs.num_interior() == 0 {
        return Err(Error::InvalidMesh("mesh has no interior vertices".into()));
    }
    let all: Vec<usize> = (0..nt).collect();
    let (stiffness, mass) = stiffness_and_mass(mesh, &all);

    let n = mesh.num_vertices();
    let mut bt = Vec::new();
    for lp in &mesh.boundary_loops {
        let local = loop_mass(mesh, lp);
        bt.extend(local.triplets().map(|(i, j, v)| (lp[i], lp[j], v)));
    }
    let boundary_mass = CsrMatrix::from_triplets(n, n, &bt);

    let k_ii = stiffness.submatrix(&dofs.interior, &dofs.interior);
    let k_ib = stiffness.submatrix(&dofs.interior, &dofs.boundary);
    let m_ii = mass.submatrix(&dofs.interior, &dofs.interior);
    let b_bb = boundary_mass.submatrix(&dofs.boundary, &dofs.boundary);
    let area = mass.sum();
    let boundary_length = boundary_mass.sum();
    Ok(SystemMatrices {
        mesh: Arc::new(mesh.clone()),
        stiffness,
        mass,
        boundary_mass,
        dofs,
        area,
        boundary_length,
        k_ii,
        k_ib,
        m_ii,
        b_bb,
        k_solver: OnceLock::new(),
        b_solver: OnceLock::new(),
    })
}

fn cached<'a>(cell: &'a OnceLock<SpdSolver>, matrix: &CsrMatrix) -> Result<&'a SpdSolver> {
    if let Some(s) = cell.get() {
        return Ok(s);
    }
    let solver = SpdSolver::new(matrix)?;
    Ok(cell.get_or_init(|| solver))
}

impl SystemMatrices {
    /// Stiffness restricted to interior rows and columns.
    pub fn stiffness_interior(&self) -> &CsrMatrix {
        &self.k_ii
    }

    /// Mass restricted to interior rows and columns.
    pub fn mass_interior(&self) -> &CsrMatrix {
        &self.m_ii
    }

    /// Boundary mass restricted to boundary rows and columns (loop order).
    pub fn boundary_mass_boundary(&self) -> &CsrMatrix {
        &self.b_bb
    }

    pub(crate) fn interior_solver(&self) -> Result<&SpdSolver> {
        cached(&self.k_solver, &self.k_ii)
    }

    pub(crate) fn boundary_solver(&self) -> Result<&SpdSolver> {
        cached(&self.b_solver, &self.b_bb)
    }

    /// Evaluates `f` at every boundary vertex, in loop order.
    pub fn boundary_field(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.dofs.boundary.iter().map(|&v| f(self.mesh.vertices[v])).collect()
    }

    /// Evaluates `f` at every vertex.
    pub fn nodal_field(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.mesh.vertices.iter().map(|&p| f(p)).collect()
    }

    /// Boundary rows of `K·field + M·laplacian`: the consistent residual
    /// functional tested against each boundary hat function.
    pub fn boundary_residual(&self, field: &[f64], laplacian: &[f64]) -> Vec<f64> {
        self.dofs
            .boundary
            .iter()
            .map(|&v| {
                let k: f64 = self.stiffness.row(v).map(|(j, a)| a * field[j]).sum();
                let m: f64 = self.mass.row(v).map(|(j, a)| a * laplacian[j]).sum();
                k + m
            })
            .collect()
    }

    /// Writes `K`, `M` and `B` in coordinate text format.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (name, m) in [("K", &self.stiffness), ("M", &self.mass), ("B", &self.boundary_mass)] {
            writeln!(out, "# {name}")?;
            m.write_coo(&mut out)?;
        }
        Ok(())
    }

    /// Stiffness and mass assembled over a subset of triangles (full size).
    pub fn region_matrices(&self, triangles: &[usize]) -> (CsrMatrix, CsrMatrix) {
        stiffness_and_mass(&self.mesh, triangles)
    }
}

fn check_len(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(invalid(format!("{name} has length {}, expected {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(format!("{name} contains non-finite values")));
    }
    Ok(())
}

/// Solves `-Δv = f`, `v = 0` on the boundary: `K_int v_int = (M f)_int`.
pub fn solve_dirichlet_poisson(sys: &SystemMatrices, f: &[f64]) -> Result<Vec<f64>> {
    check_len("source", f, sys.dofs.num_vertices())?;
    let mf = sys.mass.mul_vec(f);
    let rhs = sys.dofs.gather_interior(&mf);
    let x = sys.interior_solver()?.solve(&rhs)?;
    let scale = norm2(&rhs);
    if scale > 0.0 {
        let r: Vec<f64> = sys.k_ii.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let rel = norm2(&r) / scale;
        if rel > 1e-10 {
            return Err(Error::Solver(format!("Dirichlet solve residual {rel:e} exceeds 1e-10")));
        }
    }
    Ok(sys.dofs.scatter_interior(&x))
}

/// Discrete harmonic extension of boundary data given in loop order.
pub fn discrete_harmonic_extension(sys: &SystemMatrices, psi: &[f64]) -> Result<Vec<f64>> {
    check_len("boundary data", psi, sys.dofs.num_boundary())?;
    let rhs: Vec<f64> = sys.k_ib.mul_vec(psi).into_iter().map(|x| -x).collect();
    let x = if norm2(&rhs) == 0.0 { vec![0.0; rhs.len()] } else { sys.interior_solver()?.solve(&rhs)? };
    let mut full = sys.dofs.scatter_interior(&x);
    for (&v, &p) in sys.dofs.boundary.iter().zip(psi) {
        full[v] = p;
    }
    let (lo, hi) = psi.iter().fold((f64::MAX, f64::MIN), |(a, b), &p| (a.min(p), b.max(p)));
    let slack = 1e-10 * (hi - lo).abs().max(hi.abs()).max(1.0);
    let (xmin, xmax) = x.iter().fold((f64::MAX, f64::MIN), |(a, b), &p| (a.min(p), b.max(p)));
    if xmin < lo - slack || xmax > hi + slack {
        log::warn!("discrete maximum principle violated: extension range [{xmin}, {xmax}] exceeds data range [{lo}, {hi}]");
    }
    Ok(full)
}

/// Relative residual `‖(Kψ)_int‖ / (‖K_int,bnd‖·‖ψ‖)` of discrete harmonicity.
pub fn harmonic_residual(sys: &SystemMatrices, psi: &[f64]) -> f64 {
    let kpsi = sys.stiffness.mul_vec(psi);
    let r = norm2(&sys.dofs.gather_interior(&kpsi));
    let scale = sys.stiffness.norm_inf() * norm2(psi);
    if scale == 0.0 {
        0.0
    } else {
        r / scale
    }
}
