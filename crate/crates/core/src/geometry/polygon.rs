//! Constrained Delaunay meshing for simple polygons.

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{dist, Curve, LoopGeometry, Mesh};
use crate::error::{invalid, Error, Result};

pub(super) fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>()
}

fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let (d1, d2) = (orient(q1, q2, p1), orient(q1, q2, p2));
    let (d3, d4) = (orient(p1, p2, q1), orient(p1, p2, q2));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

pub(super) fn validate(v: &[[f64; 2]]) -> Result<()> {
    if v.len() < 3 {
        return Err(invalid("polygon needs at least 3 vertices"));
    }
    if v.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid("polygon vertices must be finite"));
    }
    if signed_area(v).abs() <= 1e-14 {
        return Err(invalid("polygon has zero area"));
    }
    let n = v.len();
    for i in 0..n {
        if dist(v[i], v[(i + 1) % n]) == 0.0 {
            return Err(invalid(format!("polygon edge {i} has zero length")));
        }
        for j in i + 2..n {
            if (j + 1) % n == i {
                continue;
            }
            if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Err(invalid(format!("polygon edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

fn contains(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Boundary points split every edge into pieces no longer than `h`;
/// interior points come from a triangular lattice kept away from the edges.
pub(super) fn mesh_polygon(input: &[[f64; 2]], h: f64) -> Result<Mesh> {
    let mut poly = input.to_vec();
    if signed_area(&poly) < 0.0 {
        poly.reverse();
    }
    let n = poly.len();

    let mut boundary = Vec::new();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let k = (dist(a, b) / h).ceil().max(1.0) as usize;
        for s in 0..k {
            let t = s as f64 / k as f64;
            boundary.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }

    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in &poly {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let dy = 0.5 * 3f64.sqrt() * h;
    let mut interior = Vec::new();
    let rows = ((hi[1] - lo[1]) / dy).ceil() as usize + 1;
    let cols = ((hi[0] - lo[0]) / h).ceil() as usize + 2;
    for r in 0..rows {
        let y = lo[1] + r as f64 * dy;
        let shift = if r % 2 == 1 { 0.5 * h } else { 0.0 };
        for c in 0..cols {
            let p = [lo[0] + shift + c as f64 * h, y];
            if !contains(&poly, p) {
                continue;
            }
            let d = (0..n).map(|i| segment_distance(p, poly[i], poly[(i + 1) % n])).fold(f64::MAX, f64::min);
            if d >= 0.55 * h {
                interior.push(p);
            }
        }
    }

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let insert = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, p: [f64; 2]| {
        cdt.insert(Point2::new(p[0], p[1])).map_err(|e| Error::InvalidMesh(format!("triangulation failed: {e:?}")))
    };
    let mut handles = Vec::with_capacity(boundary.len());
    for &p in &boundary {
        handles.push(insert(&mut cdt, p)?);
    }
    for &p in &interior {
        insert(&mut cdt, p)?;
    }
    for i in 0..handles.len() {
        cdt.add_constraint(handles[i], handles[(i + 1) % handles.len()]);
    }

    // Split long interior edges until every edge is within bound.
    for _ in 0..20 {
        let long: Vec<[f64; 2]> = cdt
            .undirected_edges()
            .filter_map(|e| {
                let [a, b] = e.positions();
                let mid = [0.5 * (a.x + b.x), 0.5 * (a.y + b.y)];
                (e.length_2() > (1.4 * h) * (1.4 * h) && contains(&poly, mid)).then_some(mid)
            })
            .collect();
        if long.is_empty() {
            break;
        }
        for p in long {
            insert(&mut cdt, p)?;
        }
    }

    let vertices: Vec<[f64; 2]> = cdt.vertices().map(|v| [v.position().x, v.position().y]).collect();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let idx = vs.map(|v| v.fix().index());
        let c = [
            (vertices[idx[0]][0] + vertices[idx[1]][0] + vertices[idx[2]][0]) / 3.0,
            (vertices[idx[0]][1] + vertices[idx[1]][1] + vertices[idx[2]][1]) / 3.0,
        ];
        if !contains(&poly, c) {
            continue;
        }
        let [a, b, cc] = idx.map(|i| vertices[i]);
        let area = (b[0] - a[0]) * (cc[1] - a[1]) - (cc[0] - a[0]) * (b[1] - a[1]);
        triangles.push(if area > 0.0 { idx } else { [idx[0], idx[2], idx[1]] });
    }

    let boundary_loop: Vec<usize> = handles.iter().map(|h| h.index()).collect();
    let geometry = vec![LoopGeometry { curve: Curve::Segments, params: vec![0.0; boundary_loop.len()], normal_sign: 1.0 }];
    let mesh = Mesh::assemble_parts(vertices, triangles, vec![boundary_loop], geometry, Vec::new(), Vec::new(), h);
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_intersecting() {
        let bowtie = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(validate(&bowtie).is_err());
    }

    #[test]
    fn square_mesh_is_valid() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let m = mesh_polygon(&sq, 0.1).unwrap();
        assert!((m.area() - 1.0).abs() < 1e-12);
        assert!(m.max_edge() <= 0.15 + 1e-12);
    }

    #[test]
    fn clockwise_l_shape_is_reoriented() {
        let l = [[0.0, 0.0], [0.0, 2.0], [1.0, 2.0], [1.0, 1.0], [2.0, 1.0], [2.0, 0.0]];
        let m = mesh_polygon(&l, 0.2).unwrap();
        assert!((m.area() - 3.0).abs() < 1e-12);
        assert_eq!(m.boundary_loops.len(), 1);
    }
}
