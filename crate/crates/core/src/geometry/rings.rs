//! Structured ring meshes for star-shaped families and annuli.

use std::f64::consts::PI;

use super::{Curve, LoopGeometry, Mesh, MeshOptions, RING_SYMMETRY};
use crate::error::{invalid, Result};

/// Largest allowed edge relative to the nominal `h`.
const MAX_EDGE_FACTOR: f64 = 1.5;

struct Ring {
    start: usize,
    count: usize,
}

impl Ring {
    fn index(&self, i: usize) -> usize {
        self.start + i % self.count
    }

    fn indices(&self) -> Vec<usize> {
        (self.start..self.start + self.count).collect()
    }

    fn angles(&self) -> Vec<f64> {
        (0..self.count).map(|i| angle(i, self.count)).collect()
    }
}

fn angle(i: usize, count: usize) -> f64 {
    2.0 * PI * i as f64 / count as f64
}

#[derive(Default)]
struct Builder {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

impl Builder {
    fn ring(&mut self, count: usize, point: impl Fn(f64) -> [f64; 2]) -> Ring {
        let start = self.vertices.len();
        self.vertices.extend((0..count).map(|i| point(angle(i, count))));
        Ring { start, count }
    }

    fn fan(&mut self, center: usize, ring: &Ring) {
        for i in 0..ring.count {
            self.triangles.push([center, ring.index(i), ring.index(i + 1)]);
        }
    }

    /// Triangulates the band between two rings by sweeping both in angle.
    fn stitch(&mut self, inner: &Ring, outer: &Ring) {
        let (na, nb) = (inner.count, outer.count);
        let (mut i, mut j) = (0, 0);
        while i < na || j < nb {
            // Compare (i+1)/na against (j+1)/nb exactly; ties advance the outer ring.
            let advance_inner = j == nb || (i < na && (i + 1) * nb < (j + 1) * na);
            if advance_inner {
                self.triangles.push([inner.index(i), outer.index(j), inner.index(i + 1)]);
                i += 1;
            } else {
                self.triangles.push([inner.index(i), outer.index(j), outer.index(j + 1)]);
                j += 1;
            }
        }
    }
}

fn polyline_length(point: &dyn Fn(f64) -> [f64; 2]) -> f64 {
    let n = 720;
    (0..n)
        .map(|i| {
            let (a, b) = (point(angle(i, n)), point(angle(i + 1, n)));
            (a[0] - b[0]).hypot(a[1] - b[1])
        })
        .sum()
}

fn ring_count(length: f64, h: f64) -> usize {
    let g = RING_SYMMETRY;
    g * ((length / (g as f64 * h)).round() as usize).max(1)
}

/// Levels `0 < l_1 < ... < l_n = 1` for a radial coordinate of physical
/// extent `extent`, uniform with step about `h` and optionally graded into
/// geometric layers at the top end.
fn levels(extent: f64, h: f64, grading: Option<super::BoundaryGrading>) -> Vec<f64> {
    let mut top = Vec::new();
    let mut covered = 0.0;
    if let Some(g) = grading {
        let mut w = g.first_width;
        while w < h && covered + w < 0.5 * extent {
            covered += w;
            top.push(1.0 - covered / extent);
            w *= g.ratio;
        }
    }
    let rest = 1.0 - covered / extent;
    let n = ((rest * extent) / h).ceil().max(1.0) as usize;
    let mut out: Vec<f64> = (1..n).map(|j| rest * j as f64 / n as f64).collect();
    if grading.is_some() && !top.is_empty() {
        out.push(rest);
        top.pop();
        out.extend(top.into_iter().rev());
        out.push(1.0);
    } else {
        out.push(1.0);
    }
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    out
}

fn max_radius(curve: Curve) -> f64 {
    match curve {
        Curve::Circle { radius } => radius,
        Curve::Ellipse { a, b } => a.max(b),
        Curve::Radial { eps, .. } => 1.0 + eps.abs(),
        Curve::Segments => unreachable!(),
    }
}

fn min_radius(curve: Curve) -> f64 {
    match curve {
        Curve::Circle { radius } => radius,
        Curve::Ellipse { a, b } => a.min(b),
        Curve::Radial { eps, .. } => 1.0 - eps.abs(),
        Curve::Segments => unreachable!(),
    }
}

/// Star-shaped domain around the origin bounded by `curve`.
pub(super) fn star(curve: Curve, h: f64, options: &MeshOptions) -> Result<Mesh> {
    let rmax = max_radius(curve);
    if let Some(rho) = options.interface_radius {
        if !(rho > 0.0 && rho < min_radius(curve)) {
            return Err(invalid(format!("interface circle of radius {rho} is not strictly inside the domain")));
        }
    }
    if h >= rmax {
        return Err(invalid(format!("target_h = {h} is not smaller than the domain size {rmax}")));
    }
    let mut h_eff = h;
    for _ in 0..12 {
        let mesh = star_once(curve, h_eff, options);
        if mesh.max_edge() <= MAX_EDGE_FACTOR * h {
            let mut mesh = mesh;
            mesh.h = h;
            return Ok(mesh);
        }
        h_eff *= 0.9;
    }
    Err(invalid(format!("could not meet the edge-length bound for h = {h}")))
}

fn star_once(curve: Curve, h: f64, options: &MeshOptions) -> Mesh {
    let rmax = max_radius(curve);
    // Each ring is a closed curve θ ↦ point(level, θ).
    let mut rings_spec: Vec<Box<dyn Fn(f64) -> [f64; 2]>> = Vec::new();
    let mut interface_ring = None;
    match options.interface_radius {
        None => {
            for s in levels(rmax, h, options.grading) {
                rings_spec.push(Box::new(move |th| {
                    let p = curve.point(th);
                    [s * p[0], s * p[1]]
                }));
            }
        }
        Some(rho) => {
            let inner = Curve::Circle { radius: rho };
            for s in levels(rho, h, None) {
                rings_spec.push(Box::new(move |th| {
                    let p = inner.point(th);
                    [s * p[0], s * p[1]]
                }));
            }
            interface_ring = Some(rings_spec.len() - 1);
            for w in levels(rmax - rho, h, options.grading) {
                rings_spec.push(Box::new(move |th| {
                    let (p, q) = (inner.point(th), curve.point(th));
                    [(1.0 - w) * p[0] + w * q[0], (1.0 - w) * p[1] + w * q[1]]
                }));
            }
        }
    }

    let mut b = Builder::default();
    b.vertices.push([0.0, 0.0]);
    let mut prev_count = 0;
    let mut rings = Vec::with_capacity(rings_spec.len());
    for point in &rings_spec {
        let count = ring_count(polyline_length(point.as_ref()), h).max(prev_count);
        prev_count = count;
        rings.push(b.ring(count, point.as_ref()));
    }
    // The outermost ring must land on the curve bit-for-bit.
    let last = rings.last().unwrap();
    for i in 0..last.count {
        b.vertices[last.start + i] = curve.point(angle(i, last.count));
    }
    if let (Some(k), Some(rho)) = (interface_ring, options.interface_radius) {
        let r = &rings[k];
        let c = Curve::Circle { radius: rho };
        for i in 0..r.count {
            b.vertices[r.start + i] = c.point(angle(i, r.count));
        }
    }
    b.fan(0, &rings[0]);
    for w in rings.windows(2) {
        b.stitch(&w[0], &w[1]);
    }

    let outer = rings.last().unwrap();
    let loops = vec![outer.indices()];
    let geometry = vec![LoopGeometry { curve, params: outer.angles(), normal_sign: 1.0 }];
    let (interfaces, interface_geometry) = match (interface_ring, options.interface_radius) {
        (Some(k), Some(rho)) => (
            vec![rings[k].indices()],
            vec![LoopGeometry { curve: Curve::Circle { radius: rho }, params: rings[k].angles(), normal_sign: 1.0 }],
        ),
        _ => (Vec::new(), Vec::new()),
    };
    Mesh::assemble_parts(b.vertices, b.triangles, loops, geometry, interfaces, interface_geometry, h)
}

/// Annulus `inner < r < outer`, optionally with an interface circle.
pub(super) fn annulus(inner: f64, outer: f64, h: f64, options: &MeshOptions) -> Result<Mesh> {
    if let Some(rho) = options.interface_radius {
        if !(rho > inner && rho < outer) {
            return Err(invalid(format!("interface radius {rho} must lie strictly between {inner} and {outer}")));
        }
    }
    if h >= outer - inner {
        return Err(invalid(format!("target_h = {h} is not smaller than the annulus width {}", outer - inner)));
    }
    let mut h_eff = h;
    for _ in 0..12 {
        let mesh = annulus_once(inner, outer, h_eff, options);
        if mesh.max_edge() <= MAX_EDGE_FACTOR * h {
            let mut mesh = mesh;
            mesh.h = h;
            return Ok(mesh);
        }
        h_eff *= 0.9;
    }
    Err(invalid(format!("could not meet the edge-length bound for h = {h}")))
}

fn annulus_once(inner: f64, outer: f64, h: f64, options: &MeshOptions) -> Mesh {
    let mut radii = vec![inner];
    let mut interface_ring = None;
    let push_segment = |from: f64, to: f64, grading, radii: &mut Vec<f64>| {
        for l in levels(to - from, h, grading) {
            radii.push(from + l * (to - from));
        }
    };
    match options.interface_radius {
        None => push_segment(inner, outer, options.grading, &mut radii),
        Some(rho) => {
            push_segment(inner, rho, None, &mut radii);
            interface_ring = Some(radii.len() - 1);
            push_segment(rho, outer, options.grading, &mut radii);
        }
    }
    *radii.last_mut().unwrap() = outer;
    if let (Some(k), Some(rho)) = (interface_ring, options.interface_radius) {
        radii[k] = rho;
    }

    let mut b = Builder::default();
    let mut prev = 0;
    let rings: Vec<Ring> = radii
        .iter()
        .map(|&r| {
            let c = Curve::Circle { radius: r };
            let count = ring_count(2.0 * PI * r, h).max(prev).max(RING_SYMMETRY);
            prev = count;
            b.ring(count, |th| c.point(th))
        })
        .collect();
    for w in rings.windows(2) {
        b.stitch(&w[0], &w[1]);
    }

    let first = &rings[0];
    let last = rings.last().unwrap();
    // Hole loop runs clockwise so that the domain stays on its left.
    let hole: Vec<usize> = std::iter::once(first.start).chain((1..first.count).rev().map(|i| first.start + i)).collect();
    let hole_params: Vec<f64> = std::iter::once(0.0).chain((1..first.count).rev().map(|i| angle(i, first.count))).collect();
    let loops = vec![last.indices(), hole];
    let geometry = vec![
        LoopGeometry { curve: Curve::Circle { radius: outer }, params: last.angles(), normal_sign: 1.0 },
        LoopGeometry { curve: Curve::Circle { radius: inner }, params: hole_params, normal_sign: -1.0 },
    ];
    let (interfaces, interface_geometry) = match (interface_ring, options.interface_radius) {
        (Some(k), Some(rho)) => (
            vec![rings[k].indices()],
            vec![LoopGeometry { curve: Curve::Circle { radius: rho }, params: rings[k].angles(), normal_sign: 1.0 }],
        ),
        _ => (Vec::new(), Vec::new()),
    };
    Mesh::assemble_parts(b.vertices, b.triangles, loops, geometry, interfaces, interface_geometry, h)
}
