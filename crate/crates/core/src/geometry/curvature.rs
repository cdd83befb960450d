use super::{dist, Mesh};
use crate::error::{invalid, Result};

/// Discrete curvature along one boundary loop.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    /// Vertex indices in loop order.
    pub vertices: Vec<usize>,
    /// Signed curvature; positive where the boundary bends toward the domain
    /// (the unit circle bounding the unit disk gives +1).
    pub curvature: Vec<f64>,
    /// Signed turning angle at each vertex.
    pub turning: Vec<f64>,
    /// Half the sum of the two adjacent edge lengths.
    pub dual_length: Vec<f64>,
    /// Loop positions whose neighbours are collinear.
    pub degenerate: Vec<usize>,
}

impl CurvatureProfile {
    pub fn total_turning(&self) -> f64 {
        self.turning.iter().sum()
    }

    /// `∫ κ ds` with the dual-length quadrature.
    pub fn integral(&self) -> f64 {
        self.curvature.iter().zip(&self.dual_length).map(|(k, l)| k * l).sum()
    }

    /// Arclength-weighted mean and standard deviation.
    pub fn mean_and_std(&self) -> (f64, f64) {
        let total: f64 = self.dual_length.iter().sum();
        let mean = self.integral() / total;
        let var = self.curvature.iter().zip(&self.dual_length).map(|(k, l)| l * (k - mean).powi(2)).sum::<f64>() / total;
        (mean, var.sqrt())
    }
}

/// Turning angle divided by dual arclength at every vertex of a loop.
pub fn boundary_curvature(mesh: &Mesh, loop_index: usize) -> Result<CurvatureProfile> {
    let lp = mesh
        .boundary_loops
        .get(loop_index)
        .ok_or_else(|| invalid(format!("boundary loop {loop_index} does not exist")))?;
    let n = lp.len();
    if n < 4 {
        return Err(invalid(format!("boundary loop {loop_index} has {n} < 4 vertices")));
    }
    let mut profile = CurvatureProfile {
        vertices: lp.clone(),
        curvature: Vec::with_capacity(n),
        turning: Vec::with_capacity(n),
        dual_length: Vec::with_capacity(n),
        degenerate: Vec::new(),
    };
    for i in 0..n {
        let p = mesh.vertices[lp[(i + n - 1) % n]];
        let c = mesh.vertices[lp[i]];
        let q = mesh.vertices[lp[(i + 1) % n]];
        let (u, v) = ([c[0] - p[0], c[1] - p[1]], [q[0] - c[0], q[1] - c[1]]);
        let cross = u[0] * v[1] - u[1] * v[0];
        let dotp = u[0] * v[0] + u[1] * v[1];
        let turn = cross.atan2(dotp);
        let dual = 0.5 * (dist(p, c) + dist(c, q));
        let scale = u[0].hypot(u[1]) * v[0].hypot(v[1]);
        if cross.abs() <= 1e-14 * scale {
            profile.degenerate.push(i);
            profile.curvature.push(0.0);
        } else {
            profile.curvature.push(turn / dual);
        }
        profile.turning.push(turn);
        profile.dual_length.push(dual);
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_domain, DomainSpec};
    use std::f64::consts::PI;

    #[test]
    fn unit_disk_curvature_is_one() {
        let m = make_domain(&DomainSpec::disk(1.0, 0.05)).unwrap();
        let c = boundary_curvature(&m, 0).unwrap();
        assert!(c.curvature.iter().all(|k| (k - 1.0).abs() <= 0.02));
        assert!((c.total_turning() - 2.0 * PI).abs() < 1e-6);
        assert!(c.degenerate.is_empty());
    }

    #[test]
    fn radius_two_gives_one_half() {
        let m = make_domain(&DomainSpec::disk(2.0, 0.05)).unwrap();
        let c = boundary_curvature(&m, 0).unwrap();
        assert!(c.curvature.iter().all(|k| (k - 0.5).abs() <= 0.01));
    }

    #[test]
    fn ellipse_major_axis_endpoints() {
        // κ = a/b² at (±a, 0).
        let m = make_domain(&DomainSpec::ellipse(2.0, 1.0, 0.05)).unwrap();
        let c = boundary_curvature(&m, 0).unwrap();
        for (pos, &v) in c.vertices.iter().enumerate() {
            let p = m.vertices[v];
            if (p[0].abs() - 2.0).abs() < 1e-12 && p[1].abs() < 1e-12 {
                assert!((c.curvature[pos] - 2.0).abs() / 2.0 <= 0.02, "{}", c.curvature[pos]);
            }
        }
    }

    #[test]
    fn annulus_hole_turns_negative() {
        let m = make_domain(&DomainSpec::annulus(0.5, 1.0, 0.1)).unwrap();
        let outer = boundary_curvature(&m, 0).unwrap();
        let hole = boundary_curvature(&m, 1).unwrap();
        assert!((outer.total_turning() - 2.0 * PI).abs() < 1e-6);
        assert!((hole.total_turning() + 2.0 * PI).abs() < 1e-6);
        assert!(hole.curvature.iter().all(|&k| k < 0.0));
    }

    #[test]
    fn square_edges_are_flagged_collinear() {
        let m = make_domain(&DomainSpec::square(1.0, 0.25)).unwrap();
        let c = boundary_curvature(&m, 0).unwrap();
        assert_eq!(c.degenerate.len(), c.vertices.len() - 4);
    }
}
