//! Planar domains, their triangulations and boundary geometry.
//!
//! Smooth families (disk, ellipse, annulus, radial perturbation of the disk)
//! are meshed with structured rings whose vertices sit exactly on the
//! analytic curves; polygons go through a constrained Delaunay triangulation.
//! Every ring carries a multiple of [`RING_SYMMETRY`] vertices and one vertex
//! at angle zero, so disk meshes are invariant under the dihedral group of
//! that order.

mod curvature;
mod mesh;
mod polygon;
mod rings;

use std::f64::consts::PI;

pub use curvature::{boundary_curvature, CurvatureProfile};
pub use mesh::{read_mesh, write_mesh, Mesh};

use crate::error::{invalid, Result};

/// Rotational symmetry order of the structured ring meshes.
///
/// Seven keeps every angular pair with |m| <= 6 exactly degenerate on the
/// disk, which is what the eigenvalue clustering tests rely on.
pub const RING_SYMMETRY: usize = 7;

/// Shape family of a planar domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Disk of the given radius centered at the origin.
    Disk { radius: f64 },
    /// Ellipse `x²/a² + y²/b² < 1`.
    Ellipse { a: f64, b: f64 },
    /// Annulus `inner < |x| < outer`.
    Annulus { inner: f64, outer: f64 },
    /// Star-shaped domain `|x| < 1 + eps·cos(m θ)`.
    Radial { eps: f64, m: u32 },
    /// Simple polygon; orientation is normalized to counterclockwise.
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Declarative description of a planar domain plus the nominal edge length.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub family: Family,
    pub target_h: f64,
}

impl DomainSpec {
    pub fn new(family: Family, target_h: f64) -> Self {
        Self { family, target_h }
    }

    pub fn disk(radius: f64, target_h: f64) -> Self {
        Self::new(Family::Disk { radius }, target_h)
    }

    pub fn ellipse(a: f64, b: f64, target_h: f64) -> Self {
        Self::new(Family::Ellipse { a, b }, target_h)
    }

    pub fn annulus(inner: f64, outer: f64, target_h: f64) -> Self {
        Self::new(Family::Annulus { inner, outer }, target_h)
    }

    pub fn radial(eps: f64, m: u32, target_h: f64) -> Self {
        Self::new(Family::Radial { eps, m }, target_h)
    }

    pub fn polygon(vertices: Vec<[f64; 2]>, target_h: f64) -> Self {
        Self::new(Family::Polygon { vertices }, target_h)
    }

    /// Axis-aligned square `[0, side]²`.
    pub fn square(side: f64, target_h: f64) -> Self {
        Self::polygon(vec![[0.0, 0.0], [side, 0.0], [side, side], [0.0, side]], target_h)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be finite and positive, got {v}")))
            }
        };
        pos("target_h", self.target_h)?;
        match &self.family {
            Family::Disk { radius } => pos("radius", *radius),
            Family::Ellipse { a, b } => {
                pos("a", *a)?;
                pos("b", *b)
            }
            Family::Annulus { inner, outer } => {
                pos("inner radius", *inner)?;
                pos("outer radius", *outer)?;
                if inner >= outer {
                    return Err(invalid(format!("annulus needs inner < outer, got {inner} >= {outer}")));
                }
                Ok(())
            }
            Family::Radial { eps, m } => {
                if !eps.is_finite() || eps.abs() >= 1.0 {
                    return Err(invalid(format!("radial family needs |eps| < 1, got {eps}")));
                }
                if *m == 0 {
                    return Err(invalid("radial family needs m >= 1"));
                }
                Ok(())
            }
            Family::Polygon { vertices } => polygon::validate(vertices),
        }
    }

    /// Exact area of the continuum domain.
    pub fn area(&self) -> f64 {
        match &self.family {
            Family::Disk { radius } => PI * radius * radius,
            Family::Ellipse { a, b } => PI * a * b,
            Family::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
            Family::Radial { eps, .. } => PI * (1.0 + 0.5 * eps * eps),
            Family::Polygon { vertices } => polygon::signed_area(vertices).abs(),
        }
    }

    /// Total length of the continuum boundary (numerical quadrature for the
    /// ellipse and radial families).
    pub fn perimeter(&self) -> f64 {
        match &self.family {
            Family::Disk { radius } => 2.0 * PI * radius,
            Family::Annulus { inner, outer } => 2.0 * PI * (inner + outer),
            Family::Ellipse { a, b } => Curve::Ellipse { a: *a, b: *b }.length(),
            Family::Radial { eps, m } => Curve::Radial { eps: *eps, m: *m }.length(),
            Family::Polygon { vertices } => {
                (0..vertices.len()).map(|i| dist(vertices[i], vertices[(i + 1) % vertices.len()])).sum()
            }
        }
    }

    /// `true` for the families with a smooth (C∞) boundary.
    pub fn is_smooth(&self) -> bool {
        !matches!(self.family, Family::Polygon { .. })
    }
}

/// Geometric grading of ring spacing towards the outer boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryGrading {
    /// Width of the outermost layer of elements.
    pub first_width: f64,
    /// Growth factor of successive layers moving inward (> 1).
    pub ratio: f64,
}

/// Optional meshing features beyond the plain domain.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeshOptions {
    /// Insert the circle of this radius (centered at the origin) as a chain
    /// of mesh edges.
    pub interface_radius: Option<f64>,
    pub grading: Option<BoundaryGrading>,
}

/// Analytic curve carrying a boundary or interface loop, parametrized by an
/// angle in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Curve {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Radial { eps: f64, m: u32 },
    /// Straight edges: midpoints need no projection.
    Segments,
}

impl Curve {
    pub(crate) fn point(&self, theta: f64) -> [f64; 2] {
        let (s, c) = theta.sin_cos();
        match *self {
            Curve::Circle { radius } => [radius * c, radius * s],
            Curve::Ellipse { a, b } => [a * c, b * s],
            Curve::Radial { eps, m } => {
                let r = 1.0 + eps * (m as f64 * theta).cos();
                [r * c, r * s]
            }
            Curve::Segments => unreachable!("segment loops have no parametrization"),
        }
    }

    pub(crate) fn tangent(&self, theta: f64) -> [f64; 2] {
        let (s, c) = theta.sin_cos();
        match *self {
            Curve::Circle { radius } => [-radius * s, radius * c],
            Curve::Ellipse { a, b } => [-a * s, b * c],
            Curve::Radial { eps, m } => {
                let mf = m as f64;
                let r = 1.0 + eps * (mf * theta).cos();
                let dr = -eps * mf * (mf * theta).sin();
                [dr * c - r * s, dr * s + r * c]
            }
            Curve::Segments => unreachable!("segment loops have no parametrization"),
        }
    }

    /// Unit normal pointing to the right of the direction of increasing angle.
    pub(crate) fn right_normal(&self, theta: f64) -> [f64; 2] {
        let t = self.tangent(theta);
        let n = (t[0] * t[0] + t[1] * t[1]).sqrt();
        [t[1] / n, -t[0] / n]
    }

    pub(crate) fn length(&self) -> f64 {
        // Periodic trapezoid rule: spectrally accurate for smooth closed curves.
        let n = 4096;
        (0..n)
            .map(|i| {
                let t = self.tangent(2.0 * PI * i as f64 / n as f64);
                (t[0] * t[0] + t[1] * t[1]).sqrt()
            })
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64
    }
}

/// A loop together with the curve it lives on and per-vertex parameters.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LoopGeometry {
    pub curve: Curve,
    /// Curve parameter of every loop vertex (unused for `Segments`).
    pub params: Vec<f64>,
    /// +1 when the outward normal is the curve's right normal, -1 otherwise.
    pub normal_sign: f64,
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Meshes the domain with default options.
pub fn make_domain(spec: &DomainSpec) -> Result<Mesh> {
    make_domain_with(spec, &MeshOptions::default())
}

/// Meshes the domain, optionally inserting an interface circle and grading
/// the rings toward the outer boundary.
pub fn make_domain_with(spec: &DomainSpec, options: &MeshOptions) -> Result<Mesh> {
    spec.validate()?;
    if let Some(g) = options.grading {
        if !(g.first_width > 0.0 && g.first_width < spec.target_h && g.ratio > 1.0) {
            return Err(invalid("grading needs 0 < first_width < target_h and ratio > 1"));
        }
    }
    let mesh = match &spec.family {
        Family::Polygon { vertices } => {
            if options.interface_radius.is_some() || options.grading.is_some() {
                return Err(invalid("polygon meshes support neither interfaces nor grading"));
            }
            polygon::mesh_polygon(vertices, spec.target_h)?
        }
        Family::Annulus { inner, outer } => rings::annulus(*inner, *outer, spec.target_h, options)?,
        Family::Disk { radius } => rings::star(Curve::Circle { radius: *radius }, spec.target_h, options)?,
        Family::Ellipse { a, b } => rings::star(Curve::Ellipse { a: *a, b: *b }, spec.target_h, options)?,
        Family::Radial { eps, m } => rings::star(Curve::Radial { eps: *eps, m: *m }, spec.target_h, options)?,
    };
    Ok(mesh.with_spec(spec.clone()))
}

/// Uniform refinement: every triangle is split into four, new boundary and
/// interface vertices are projected onto their analytic curves.
pub fn refine(mesh: &Mesh) -> Result<Mesh> {
    mesh.validate()?;
    Ok(mesh.refined())
}
