//! Structured triangulations of rectangles and the quadrature rules used for
//! every volume and boundary integral in the crate.
//!
//! Vertices are numbered row-major: vertex `(i, j)` (column `i`, row `j`) has
//! index `j * (nx + 1) + i`. Each cell is split along the diagonal running from
//! its lower-left to its upper-right corner, giving two counter-clockwise
//! triangles. Boundary edges are stored counter-clockwise around the rectangle,
//! so the outward normal of every boundary edge points to its right.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{invalid, Error, Result};

pub type Point = [f64; 2];

/// Which side of the rectangle a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub fn outward_normal(self) -> Point {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub side: Side,
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * ((self.x1 - self.x0) + (self.y1 - self.y0))
    }
}

/// Immutable 2D triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Longest edge length.
    pub h: f64,
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
}

/// Structured triangulation with `2·nx·ny` triangles.
pub fn build_rect_mesh(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
        return Err(invalid("rectangle corners must be finite"));
    }
    if x1 <= x0 || y1 <= y0 {
        return Err(invalid(format!(
            "nonpositive extent: [{x0}, {x1}] x [{y0}, {y1}]"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(invalid("subdivision counts must be positive"));
    }
    let dx = (x1 - x0) / nx as f64;
    let dy = (y1 - y0) / ny as f64;
    let idx = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        // pin the last row/column to the exact corner coordinates
        let y = if j == ny { y1 } else { y0 + j as f64 * dy };
        for i in 0..=nx {
            let x = if i == nx { x1 } else { x0 + i as f64 * dx };
            vertices.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { v: [idx(i, 0), idx(i + 1, 0)], side: Side::Bottom });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { v: [idx(nx, j), idx(nx, j + 1)], side: Side::Right });
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge { v: [idx(i + 1, ny), idx(i, ny)], side: Side::Top });
    }
    for j in (0..ny).rev() {
        boundary_edges.push(BoundaryEdge { v: [idx(0, j + 1), idx(0, j)], side: Side::Left });
    }

    Ok(Mesh {
        vertices,
        triangles,
        boundary_edges,
        h: (dx * dx + dy * dy).sqrt(),
        rect: Rect { x0, y0, x1, y1 },
        nx,
        ny,
    })
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Signed area of triangle `t` (positive for counter-clockwise vertices).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.boundary_edges[e].v;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    /// Maps reference barycentric coordinates `(ξ, η)` of triangle `t` to the plane.
    pub fn map_triangle_point(&self, t: usize, ref_pt: Point) -> Point {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let l0 = 1.0 - ref_pt[0] - ref_pt[1];
        [
            l0 * pa[0] + ref_pt[0] * pb[0] + ref_pt[1] * pc[0],
            l0 * pa[1] + ref_pt[0] * pb[1] + ref_pt[1] * pc[1],
        ]
    }

    pub fn map_edge_point(&self, e: usize, t: f64) -> Point {
        let [a, b] = self.boundary_edges[e].v;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    }

    /// Checks the structural invariants: positive orientation, edge
    /// multiplicities, closed boundary loop and total area.
    pub fn validate(&self) -> Result<()> {
        use std::collections::HashMap;

        let tol_area = 1e-14 * self.h * self.h;
        let mut total = 0.0;
        for t in 0..self.n_triangles() {
            let a = self.signed_area(t);
            if a <= tol_area {
                return Err(Error::Mesh(format!("triangle {t} has nonpositive area {a:e}")));
            }
            total += a;
        }
        let expect = self.rect.area();
        if ((total - expect) / expect).abs() > 1e-12 {
            return Err(Error::Mesh(format!("triangle areas sum to {total}, expected {expect}")));
        }

        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut boundary_keys = std::collections::HashSet::new();
        for e in &self.boundary_edges {
            let key = (e.v[0].min(e.v[1]), e.v[0].max(e.v[1]));
            if count.get(&key) != Some(&1) {
                return Err(Error::Mesh(format!("boundary edge {:?} not owned by exactly one triangle", e.v)));
            }
            boundary_keys.insert(key);
        }
        for (key, c) in &count {
            if !boundary_keys.contains(key) && *c != 2 {
                return Err(Error::Mesh(format!("interior edge {key:?} shared by {c} triangles")));
            }
        }

        for (k, e) in self.boundary_edges.iter().enumerate() {
            let next = &self.boundary_edges[(k + 1) % self.boundary_edges.len()];
            if e.v[1] != next.v[0] {
                return Err(Error::Mesh(format!("boundary loop broken after edge {k}")));
            }
        }
        Ok(())
    }

    /// Writes the `# vertices` / `# triangles` / `# boundary_edges` CSV export.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("# vertices\nid,x,y\n");
        for (i, p) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{}", p[0], p[1]);
        }
        s.push_str("# triangles\nid,v0,v1,v2\n");
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", t[0], t[1], t[2]);
        }
        s.push_str("# boundary_edges\nid,v0,v1\n");
        for (i, e) in self.boundary_edges.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{}", e.v[0], e.v[1]);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Fixed quadrature rule on a reference cell of dimension `D`.
///
/// Triangle rules (`D = 2`) live on the reference triangle with vertices
/// `(0,0), (1,0), (0,1)`; edge rules (`D = 1`) on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub degree: usize,
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
}

pub type TriangleRule = QuadratureRule<2>;
pub type EdgeRule = QuadratureRule<1>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn triangle_quadrature(degree: usize) -> Result<TriangleRule> {
    match degree {
        1 => Ok(QuadratureRule { degree, points: vec![[1.0 / 3.0, 1.0 / 3.0]], weights: vec![0.5] }),
        2 => Ok(QuadratureRule {
            degree,
            points: vec![[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]],
            weights: vec![1.0 / 6.0; 3],
        }),
        4 => {
            // Dunavant 6-point rule
            let a = 0.445_948_490_915_964_9;
            let b = 0.091_576_213_509_770_74;
            let wa = 0.223_381_589_678_011_47 / 2.0;
            let wb = 0.109_951_743_655_321_87 / 2.0;
            Ok(QuadratureRule {
                degree,
                points: vec![
                    [a, a],
                    [1.0 - 2.0 * a, a],
                    [a, 1.0 - 2.0 * a],
                    [b, b],
                    [1.0 - 2.0 * b, b],
                    [b, 1.0 - 2.0 * b],
                ],
                weights: vec![wa, wa, wa, wb, wb, wb],
            })
        }
        _ => Err(invalid(format!("unsupported triangle quadrature degree {degree} (use 1, 2 or 4)"))),
    }
}

pub fn edge_quadrature(degree: usize) -> Result<EdgeRule> {
    match degree {
        1 => Ok(QuadratureRule { degree, points: vec![[0.5]], weights: vec![1.0] }),
        3 => {
            let d = 3f64.sqrt() / 6.0;
            Ok(QuadratureRule { degree, points: vec![[0.5 - d], [0.5 + d]], weights: vec![0.5, 0.5] })
        }
        _ => Err(invalid(format!("unsupported edge quadrature degree {degree} (use 1 or 3)"))),
    }
}

/// Constant gradients of the three P1 shape functions on each triangle.
pub fn elem_gradients(mesh: &Mesh) -> Result<Vec<[Point; 3]>> {
    let tol = 1e-14 * mesh.h * mesh.h;
    mesh.triangles
        .iter()
        .enumerate()
        .map(|(t, &[a, b, c])| {
            let area = mesh.signed_area(t);
            if area < tol {
                return Err(Error::Mesh(format!("degenerate triangle {t} (area {area:e})")));
            }
            let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            let two_a = 2.0 * area;
            Ok([
                [(pb[1] - pc[1]) / two_a, (pc[0] - pb[0]) / two_a],
                [(pc[1] - pa[1]) / two_a, (pa[0] - pc[0]) / two_a],
                [(pa[1] - pb[1]) / two_a, (pb[0] - pa[0]) / two_a],
            ])
        })
        .collect()
}
