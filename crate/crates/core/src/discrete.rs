//! P1 functions on a [`Mesh`] and the cached quadrature layout shared by the
//! modular and energy assemblies.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::fields::FieldExpr;
use crate::geometry::{edge_quadrature, elem_gradients, triangle_quadrature, EdgeRule, Mesh, Point, TriangleRule};

/// Nodal coefficient vector of a continuous piecewise-linear function.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(invalid(format!(
                "{} nodal values for a mesh with {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("nodal value {i} is not finite")));
        }
        Ok(DiscreteFunction { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.n_vertices();
        DiscreteFunction { mesh, values: vec![0.0; n] }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = mesh.vertices.iter().map(|p| f(p[0], p[1])).collect();
        Self::new(mesh, values)
    }

    pub fn from_expr(mesh: Arc<Mesh>, f: &FieldExpr) -> Result<Self> {
        let values = mesh.vertices.iter().map(|p| f.eval(p[0], p[1])).collect::<Result<_>>()?;
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, t: f64) -> Self {
        DiscreteFunction { mesh: self.mesh.clone(), values: self.values.iter().map(|v| t * v).collect() }
    }

    pub fn abs(&self) -> Self {
        DiscreteFunction { mesh: self.mesh.clone(), values: self.values.iter().map(|v| v.abs()).collect() }
    }

    /// `self + t·other`.
    pub fn axpy(&self, t: f64, other: &DiscreteFunction) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + t * b).collect();
        DiscreteFunction { mesh: self.mesh.clone(), values }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Same mesh as `mesh`, compared structurally when the pointers differ.
    pub fn on_mesh(&self, mesh: &Mesh) -> bool {
        std::ptr::eq(self.mesh.as_ref(), mesh) || self.mesh.as_ref() == mesh
    }
}

/// Quadrature points, weights and shape data of a mesh, computed once.
///
/// Volume points are stored triangle-major (`t * n_tri_pts + k`), boundary
/// points edge-major.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub mesh: Arc<Mesh>,
    pub tri_rule: TriangleRule,
    pub edge_rule: EdgeRule,
    pub grads: Vec<[Point; 3]>,
    pub areas: Vec<f64>,
    pub vol_points: Vec<Point>,
    pub vol_weights: Vec<f64>,
    pub edge_points: Vec<Point>,
    pub edge_weights: Vec<f64>,
    pub edge_lengths: Vec<f64>,
}

impl Quadrature {
    pub const DEFAULT_TRIANGLE_DEGREE: usize = 4;
    pub const DEFAULT_EDGE_DEGREE: usize = 3;

    pub fn new(mesh: Arc<Mesh>) -> Result<Self> {
        Self::with_degrees(mesh, Self::DEFAULT_TRIANGLE_DEGREE, Self::DEFAULT_EDGE_DEGREE)
    }

    pub fn with_degrees(mesh: Arc<Mesh>, tri_degree: usize, edge_degree: usize) -> Result<Self> {
        let tri_rule = triangle_quadrature(tri_degree)?;
        let edge_rule = edge_quadrature(edge_degree)?;
        let grads = elem_gradients(&mesh)?;
        let areas: Vec<f64> = (0..mesh.n_triangles()).map(|t| mesh.signed_area(t)).collect();

        let mut vol_points = Vec::with_capacity(mesh.n_triangles() * tri_rule.len());
        let mut vol_weights = Vec::with_capacity(vol_points.capacity());
        for (t, &area) in areas.iter().enumerate() {
            for (p, w) in tri_rule.points.iter().zip(&tri_rule.weights) {
                vol_points.push(mesh.map_triangle_point(t, *p));
                vol_weights.push(2.0 * area * w);
            }
        }

        let n_edges = mesh.boundary_edges.len();
        let edge_lengths: Vec<f64> = (0..n_edges).map(|e| mesh.edge_length(e)).collect();
        let mut edge_points = Vec::with_capacity(n_edges * edge_rule.len());
        let mut edge_weights = Vec::with_capacity(edge_points.capacity());
        for (e, &len) in edge_lengths.iter().enumerate() {
            for (p, w) in edge_rule.points.iter().zip(&edge_rule.weights) {
                edge_points.push(mesh.map_edge_point(e, p[0]));
                edge_weights.push(len * w);
            }
        }

        Ok(Quadrature { mesh, tri_rule, edge_rule, grads, areas, vol_points, vol_weights, edge_points, edge_weights, edge_lengths })
    }

    pub fn n_tri_pts(&self) -> usize {
        self.tri_rule.len()
    }

    pub fn n_edge_pts(&self) -> usize {
        self.edge_rule.len()
    }

    /// Barycentric shape values `(φ0, φ1, φ2)` at volume point `k` of any triangle.
    pub fn tri_shape(&self, k: usize) -> [f64; 3] {
        let p = self.tri_rule.points[k];
        [1.0 - p[0] - p[1], p[0], p[1]]
    }

    pub fn edge_shape(&self, k: usize) -> [f64; 2] {
        let t = self.edge_rule.points[k][0];
        [1.0 - t, t]
    }

    pub fn sample_volume(&self, f: &FieldExpr) -> Result<Vec<f64>> {
        self.vol_points.iter().map(|p| f.eval(p[0], p[1])).collect()
    }

    pub fn sample_boundary(&self, f: &FieldExpr) -> Result<Vec<f64>> {
        self.edge_points.iter().map(|p| f.eval(p[0], p[1])).collect()
    }

    pub fn sample_vertices(&self, f: &FieldExpr) -> Result<Vec<f64>> {
        self.mesh.vertices.iter().map(|p| f.eval(p[0], p[1])).collect()
    }

    /// Values of the P1 interpolant at every volume point.
    pub fn volume_values(&self, u: &[f64]) -> Vec<f64> {
        let nq = self.n_tri_pts();
        let shapes: Vec<[f64; 3]> = (0..nq).map(|k| self.tri_shape(k)).collect();
        let mut out = Vec::with_capacity(self.vol_points.len());
        for tri in &self.mesh.triangles {
            let (a, b, c) = (u[tri[0]], u[tri[1]], u[tri[2]]);
            for s in &shapes {
                out.push(s[0] * a + s[1] * b + s[2] * c);
            }
        }
        out
    }

    pub fn boundary_values(&self, u: &[f64]) -> Vec<f64> {
        let nq = self.n_edge_pts();
        let mut out = Vec::with_capacity(self.edge_points.len());
        for e in &self.mesh.boundary_edges {
            let (a, b) = (u[e.v[0]], u[e.v[1]]);
            for k in 0..nq {
                let s = self.edge_shape(k);
                out.push(s[0] * a + s[1] * b);
            }
        }
        out
    }

    /// Constant gradient of the interpolant on each triangle.
    pub fn element_gradients(&self, u: &[f64]) -> Vec<Point> {
        self.mesh
            .triangles
            .iter()
            .zip(&self.grads)
            .map(|(tri, g)| {
                let mut d = [0.0; 2];
                for k in 0..3 {
                    d[0] += u[tri[k]] * g[k][0];
                    d[1] += u[tri[k]] * g[k][1];
                }
                d
            })
            .collect()
    }

    /// Adds `Σ_k coef[t,k]·φ_i(x_k)` into `out[i]` for every triangle vertex `i`.
    pub fn scatter_volume(&self, coef: &[f64], out: &mut [f64]) {
        let nq = self.n_tri_pts();
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            for k in 0..nq {
                let c = coef[t * nq + k];
                if c == 0.0 {
                    continue;
                }
                let s = self.tri_shape(k);
                for l in 0..3 {
                    out[tri[l]] += c * s[l];
                }
            }
        }
    }

    pub fn scatter_boundary(&self, coef: &[f64], out: &mut [f64]) {
        let nq = self.n_edge_pts();
        for (e, edge) in self.mesh.boundary_edges.iter().enumerate() {
            for k in 0..nq {
                let c = coef[e * nq + k];
                let s = self.edge_shape(k);
                out[edge.v[0]] += c * s[0];
                out[edge.v[1]] += c * s[1];
            }
        }
    }

    /// Adds `flux[t]·∇φ_i` (a per-triangle vector already multiplied by the
    /// integration weight) into `out[i]`.
    pub fn scatter_gradient(&self, flux: &[Point], out: &mut [f64]) {
        for ((tri, g), f) in self.mesh.triangles.iter().zip(&self.grads).zip(flux) {
            for l in 0..3 {
                out[tri[l]] += f[0] * g[l][0] + f[1] * g[l][1];
            }
        }
    }
}
