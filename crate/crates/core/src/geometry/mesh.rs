use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{dist, Curve, DomainSpec, LoopGeometry};
use crate::error::{Error, Result};

/// Conforming triangulation of a planar domain.
///
/// Triangles are positively oriented. Boundary loops are ordered with the
/// domain on the left, so outer loops run counterclockwise and hole loops
/// clockwise. `interfaces` lists closed chains of interior edges (inserted
/// curves such as the boundary of a subdomain).
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_loops: Vec<Vec<usize>>,
    /// Outward unit normal per vertex; zero at interior vertices.
    pub boundary_normal: Vec<[f64; 2]>,
    pub interior_mask: Vec<bool>,
    pub interfaces: Vec<Vec<usize>>,
    /// Nominal edge length the mesh was generated (or refined) for.
    pub h: f64,
    pub spec: Option<DomainSpec>,
    pub(crate) loop_geometry: Vec<LoopGeometry>,
    pub(crate) interface_geometry: Vec<LoopGeometry>,
}

impl Mesh {
    /// Builds a mesh from raw vertices and triangles. Boundary loops are
    /// recovered from edges used by a single triangle; normals come from
    /// the polygonal boundary.
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        let loops = boundary_loops_of(vertices.len(), &triangles)?;
        let geometry = loops
            .iter()
            .map(|l| LoopGeometry { curve: Curve::Segments, params: vec![0.0; l.len()], normal_sign: 1.0 })
            .collect();
        let h = max_edge_of(&vertices, &triangles);
        let mesh = Self::assemble_parts(vertices, triangles, loops, geometry, Vec::new(), Vec::new(), h);
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn assemble_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_loops: Vec<Vec<usize>>,
        loop_geometry: Vec<LoopGeometry>,
        interfaces: Vec<Vec<usize>>,
        interface_geometry: Vec<LoopGeometry>,
        h: f64,
    ) -> Mesh {
        let nv = vertices.len();
        let mut interior_mask = vec![true; nv];
        let mut boundary_normal = vec![[0.0; 2]; nv];
        for (lp, geo) in boundary_loops.iter().zip(&loop_geometry) {
            let normals = loop_normals(&vertices, lp, geo);
            for (&v, n) in lp.iter().zip(normals) {
                interior_mask[v] = false;
                boundary_normal[v] = n;
            }
        }
        Mesh {
            vertices,
            triangles,
            boundary_loops,
            boundary_normal,
            interior_mask,
            interfaces,
            h,
            spec: None,
            loop_geometry,
            interface_geometry,
        }
    }

    pub(crate) fn with_spec(mut self, spec: DomainSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Total length of all boundary loops.
    pub fn boundary_length(&self) -> f64 {
        self.boundary_loops.iter().map(|l| self.loop_length(l)).sum()
    }

    pub(crate) fn loop_length(&self, lp: &[usize]) -> f64 {
        (0..lp.len()).map(|i| dist(self.vertices[lp[i]], self.vertices[lp[(i + 1) % lp.len()]])).sum()
    }

    pub fn max_edge(&self) -> f64 {
        max_edge_of(&self.vertices, &self.triangles)
    }

    /// Indices of boundary vertices in loop order (all loops concatenated).
    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.boundary_loops.iter().flatten().copied().collect()
    }

    /// Largest distance of a boundary or interface vertex from its
    /// analytic curve (zero for straight-edged loops).
    pub fn boundary_projection_error(&self) -> f64 {
        let loops = self.boundary_loops.iter().zip(&self.loop_geometry);
        let ifaces = self.interfaces.iter().zip(&self.interface_geometry);
        loops
            .chain(ifaces)
            .filter(|(_, g)| g.curve != Curve::Segments)
            .flat_map(|(lp, g)| lp.iter().zip(&g.params).map(move |(&v, &p)| dist(self.vertices[v], g.curve.point(p))))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMesh(m));
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return bad("no triangles".into());
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return bad(format!("triangle {t} references a missing vertex"));
            }
            if self.signed_area(t) <= 0.0 {
                return bad(format!("triangle {t} is not positively oriented"));
            }
        }
        let edges = edge_counts(&self.triangles);
        let mut boundary_edges = 0usize;
        for (&(a, b), &c) in &edges {
            match c {
                1 => boundary_edges += 1,
                2 => {}
                _ => return bad(format!("edge ({a}, {b}) shared by {c} triangles")),
            }
        }
        let mut on_loop = vec![false; nv];
        let mut loop_edges = 0usize;
        for lp in &self.boundary_loops {
            if lp.len() < 3 {
                return bad("boundary loop with fewer than 3 vertices".into());
            }
            for i in 0..lp.len() {
                let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                if on_loop[a] {
                    return bad(format!("vertex {a} appears twice on boundary loops"));
                }
                on_loop[a] = true;
                if edges.get(&key(a, b)) != Some(&1) {
                    return bad(format!("loop edge ({a}, {b}) is not a boundary edge"));
                }
                loop_edges += 1;
            }
        }
        if loop_edges != boundary_edges {
            return bad(format!("loops cover {loop_edges} of {boundary_edges} boundary edges"));
        }
        for v in 0..nv {
            if on_loop[v] == self.interior_mask[v] {
                return bad(format!("interior flag of vertex {v} disagrees with the boundary loops"));
            }
        }
        for lp in &self.interfaces {
            for i in 0..lp.len() {
                let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                if edges.get(&key(a, b)) != Some(&2) {
                    return bad(format!("interface edge ({a}, {b}) is not an interior mesh edge"));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn refined(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();

        // Curved loops first so that their midpoints land on the curve.
        let mut new_loop = |lp: &[usize], geo: &LoopGeometry, vertices: &mut Vec<[f64; 2]>| {
            let mut out = Vec::with_capacity(2 * lp.len());
            let mut params = Vec::with_capacity(2 * lp.len());
            for i in 0..lp.len() {
                let j = (i + 1) % lp.len();
                let (a, b) = (lp[i], lp[j]);
                let (p, pos) = match geo.curve {
                    Curve::Segments => {
                        let (va, vb) = (vertices[a], vertices[b]);
                        (0.0, [0.5 * (va[0] + vb[0]), 0.5 * (va[1] + vb[1])])
                    }
                    curve => {
                        let mid = mid_angle(geo.params[i], geo.params[j]);
                        (mid, curve.point(mid))
                    }
                };
                let idx = vertices.len();
                vertices.push(pos);
                midpoint.insert(key(a, b), idx);
                out.extend([a, idx]);
                params.extend([geo.params[i], p]);
            }
            (out, LoopGeometry { curve: geo.curve, params, normal_sign: geo.normal_sign })
        };

        let (boundary_loops, loop_geometry): (Vec<_>, Vec<_>) = self
            .boundary_loops
            .iter()
            .zip(&self.loop_geometry)
            .map(|(lp, g)| new_loop(lp, g, &mut vertices))
            .unzip();
        let (interfaces, interface_geometry): (Vec<_>, Vec<_>) = self
            .interfaces
            .iter()
            .zip(&self.interface_geometry)
            .map(|(lp, g)| new_loop(lp, g, &mut vertices))
            .unzip();

        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| {
            *midpoint.entry(key(a, b)).or_insert_with(|| {
                let (va, vb) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (va[0] + vb[0]), 0.5 * (va[1] + vb[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut mesh = Mesh::assemble_parts(
            vertices,
            triangles,
            boundary_loops,
            loop_geometry,
            interfaces,
            interface_geometry,
            0.5 * self.h,
        );
        mesh.spec = self.spec.clone();
        mesh
    }
}

fn mid_angle(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = (b - a) % two_pi;
    if d > std::f64::consts::PI {
        d -= two_pi;
    } else if d < -std::f64::consts::PI {
        d += two_pi;
    }
    a + 0.5 * d
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn edge_counts(triangles: &[[usize; 3]]) -> HashMap<(usize, usize), usize> {
    let mut edges = HashMap::with_capacity(3 * triangles.len());
    for t in triangles {
        for k in 0..3 {
            *edges.entry(key(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    edges
}

fn max_edge_of(vertices: &[[f64; 2]], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .flat_map(|t| (0..3).map(move |k| dist(vertices[t[k]], vertices[t[(k + 1) % 3]])))
        .fold(0.0, f64::max)
}

fn loop_normals(vertices: &[[f64; 2]], lp: &[usize], geo: &LoopGeometry) -> Vec<[f64; 2]> {
    if geo.curve != Curve::Segments {
        return geo
            .params
            .iter()
            .map(|&p| {
                let n = geo.curve.right_normal(p);
                [geo.normal_sign * n[0], geo.normal_sign * n[1]]
            })
            .collect();
    }
    // Domain lies to the left of each directed edge; average adjacent edge normals.
    let n = lp.len();
    let edge_normal = |i: usize| {
        let (a, b) = (vertices[lp[i]], vertices[lp[(i + 1) % n]]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let l = dx.hypot(dy);
        [dy / l, -dx / l]
    };
    (0..n)
        .map(|i| {
            let (p, q) = (edge_normal((i + n - 1) % n), edge_normal(i));
            let s = [p[0] + q[0], p[1] + q[1]];
            let l = s[0].hypot(s[1]);
            [s[0] / l, s[1] / l]
        })
        .collect()
}

/// Chains single-use edges into loops, oriented with the domain on the left.
fn boundary_loops_of(nv: usize, triangles: &[[usize; 3]]) -> Result<Vec<Vec<usize>>> {
    let counts = edge_counts(triangles);
    let mut next = vec![usize::MAX; nv];
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if counts[&key(a, b)] == 1 {
                if next[a] != usize::MAX {
                    return Err(Error::InvalidMesh(format!("boundary is not a set of simple loops at vertex {a}")));
                }
                next[a] = b;
            }
        }
    }
    let mut seen = vec![false; nv];
    let mut loops = Vec::new();
    for start in 0..nv {
        if next[start] == usize::MAX || seen[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            lp.push(v);
            v = next[v];
            if v == usize::MAX {
                return Err(Error::InvalidMesh("open boundary chain".into()));
            }
        }
        loops.push(lp);
    }
    Ok(loops)
}

/// Writes the plain-text mesh format: a header `nv nt nb`, then one
/// `x y interior_flag` line per vertex, one `i j k` line per triangle and
/// one line per boundary loop (`len v0 v1 ...`). Reals use 17 significant
/// digits.
pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {} {}", mesh.vertices.len(), mesh.triangles.len(), mesh.boundary_loops.len())?;
    for (v, interior) in mesh.vertices.iter().zip(&mesh.interior_mask) {
        writeln!(out, "{:.16e} {:.16e} {}", v[0], v[1], u8::from(*interior))?;
    }
    for t in &mesh.triangles {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    for lp in &mesh.boundary_loops {
        write!(out, "{}", lp.len())?;
        for v in lp {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the format produced by [`write_mesh`]. Curve information is not
/// stored, so the result refines with straight boundary edges.
pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = input.lines().enumerate();
    let mut next_line = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse { line: 0, message: format!("unexpected end of file, expected {what}") }),
        }
    };
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let (ln, header) = next_line("header")?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse().map_err(|e| parse_err(ln, format!("{e}"))))
        .collect::<Result<_>>()?;
    let [nv, nt, nb] = head[..] else {
        return Err(parse_err(ln, "header must be `nv nt nb`".into()));
    };
    let mut vertices = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next_line("vertex")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(ln, "vertex line must be `x y interior_flag`".into()));
        }
        let x: f64 = f[0].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
        let y: f64 = f[1].parse().map_err(|e| parse_err(ln, format!("{e}")))?;
        vertices.push([x, y]);
        flags.push(f[2] == "1");
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next_line("triangle")?;
        let idx: Vec<usize> =
            l.split_whitespace().map(|s| s.parse().map_err(|e| parse_err(ln, format!("{e}")))).collect::<Result<_>>()?;
        let [i, j, k] = idx[..] else {
            return Err(parse_err(ln, "triangle line must be `i j k`".into()));
        };
        triangles.push([i, j, k]);
    }
    let mut loops = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = next_line("boundary loop")?;
        let idx: Vec<usize> =
            l.split_whitespace().map(|s| s.parse().map_err(|e| parse_err(ln, format!("{e}")))).collect::<Result<_>>()?;
        if idx.is_empty() || idx[0] + 1 != idx.len() {
            return Err(parse_err(ln, "loop line must be `len v0 v1 ...`".into()));
        }
        loops.push(idx[1..].to_vec());
    }
    let geometry = loops
        .iter()
        .map(|l| LoopGeometry { curve: Curve::Segments, params: vec![0.0; l.len()], normal_sign: 1.0 })
        .collect();
    let h = max_edge_of(&vertices, &triangles);
    let mesh = Mesh::assemble_parts(vertices, triangles, loops, geometry, Vec::new(), Vec::new(), h);
    if mesh.interior_mask != flags {
        return Err(Error::InvalidMesh("interior flags disagree with boundary loops".into()));
    }
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Mesh {
        Mesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn from_parts_finds_ccw_loop() {
        let m = two_triangles();
        assert_eq!(m.boundary_loops.len(), 1);
        assert_eq!(m.boundary_loops[0].len(), 4);
        assert!((m.area() - 1.0).abs() < 1e-15);
        assert!((m.boundary_length() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_inverted_triangle() {
        let r = Mesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 2, 1]]);
        assert!(r.is_err());
    }

    #[test]
    fn refinement_quadruples_and_stays_valid() {
        let m = two_triangles().refined();
        m.validate().unwrap();
        assert_eq!(m.num_triangles(), 8);
        assert_eq!(m.boundary_loops[0].len(), 8);
        assert!((m.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mid_angle_wraps() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let m = mid_angle(two_pi - 0.2, 0.0);
        assert!((m - (two_pi - 0.1)).abs() < 1e-14);
        let m = mid_angle(0.2, 0.0);
        assert!((m - 0.1).abs() < 1e-14);
    }

    #[test]
    fn text_format_round_trip() {
        let m = two_triangles().refined();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_loops, m.boundary_loops);
    }
}
