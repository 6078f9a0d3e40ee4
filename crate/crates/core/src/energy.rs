//! The energy functional
//!
//! ```text
//! J_λ(u) = ∫_Ω a/p |∇u|^p dx + ∫_∂Ω β/p |u|^p dσ − λ ∫_Ω b/q |u|^q dx
//! ```
//!
//! its derivative, Hessian, the Robin modular `I_β` and the β-norm, all on a
//! fixed quadrature. [`Problem`] samples the fields once; the free functions
//! are conveniences that build one on the fly.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::discrete::{DiscreteFunction, Quadrature};
use crate::error::{invalid, Error, Result};
use crate::fields::{validate_on, ProblemSpec, RegimeReport};
use crate::geometry::Mesh;
use crate::linalg::{dot, BandCholesky, BandMatrix};
use crate::modular::{abs_pow, luxemburg_norm, Carrier, CompositeModular, SampledModular};

/// Default gradient regularization when `p⁻ < 2`.
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub grad_term: f64,
    pub boundary_term: f64,
    pub source_term: f64,
    pub lambda: f64,
    #[serde(rename = "J")]
    pub j: f64,
}

impl EnergyBreakdown {
    /// The `L_β` part: gradient plus boundary term.
    pub fn l_beta(&self) -> f64 {
        self.grad_term + self.boundary_term
    }
}

/// Nodal representation of `J′_λ(u)`: `values·v = J′_λ(u)(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub values: Vec<f64>,
    /// Row sums of the `b`-mass plus `β`-boundary-mass matrices.
    pub lumped_mass: Arc<[f64]>,
}

impl GradientVector {
    pub fn pair(&self, v: &[f64]) -> f64 {
        dot(&self.values, v)
    }

    /// `(g·M⁻¹g)^{1/2}`.
    pub fn dual_norm(&self) -> f64 {
        dual_norm(&self.values, &self.lumped_mass)
    }
}

pub(crate) fn dual_norm(g: &[f64], m: &[f64]) -> f64 {
    g.iter().zip(m).map(|(g, m)| g * g / m).sum::<f64>().sqrt()
}

/// A problem instance with its fields sampled at every quadrature point.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub quad: Quadrature,
    pub regime: RegimeReport,
    /// Gradient regularization `ε` in `(|∇u|² + ε²)^{p/2}`.
    pub epsilon: f64,
    a_vol: Vec<f64>,
    p_vol: Vec<f64>,
    b_vol: Vec<f64>,
    q_vol: Vec<f64>,
    beta_edge: Vec<f64>,
    p_edge: Vec<f64>,
    lumped: Arc<[f64]>,
    beta_modular: CompositeModular,
    gradient_modular: SampledModular,
    volume_p_modular: SampledModular,
    source_modular: SampledModular,
    sobolev: OnceLock<BandMatrix>,
    preconditioner: OnceLock<Result<BandCholesky, String>>,
}

impl Problem {
    pub fn new(spec: &ProblemSpec) -> Result<Self> {
        let mesh = Arc::new(spec.domain.build_mesh()?);
        Self::on_mesh(spec, mesh)
    }

    /// Uses `mesh` in place of the one described by `spec.domain`.
    pub fn on_mesh(spec: &ProblemSpec, mesh: Arc<Mesh>) -> Result<Self> {
        let quad = Quadrature::new(mesh)?;
        let regime = validate_on(spec, &quad).map_err(|v| {
            Error::Hypothesis(v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))
        })?;
        let a_vol = quad.sample_volume(&spec.a)?;
        let p_vol = quad.sample_volume(&spec.p)?;
        let b_vol = quad.sample_volume(&spec.b)?;
        let q_vol = quad.sample_volume(&spec.q)?;
        let beta_edge = quad.sample_boundary(&spec.beta)?;
        let p_edge = quad.sample_boundary(&spec.p)?;
        let epsilon = if regime.p_minus < 2.0 { DEFAULT_EPSILON } else { 0.0 };

        let gradient_modular = SampledModular::from_samples(&quad, Carrier::Gradient, p_vol.clone(), &a_vol);
        let boundary_modular = SampledModular::from_samples(&quad, Carrier::Boundary, p_edge.clone(), &beta_edge);
        let beta_modular = CompositeModular::new(vec![gradient_modular.clone(), boundary_modular]);
        let volume_p_modular = SampledModular::from_samples(&quad, Carrier::Volume, p_vol.clone(), &b_vol);
        let source_modular = SampledModular::from_samples(&quad, Carrier::Volume, q_vol.clone(), &b_vol);

        let mut lumped = vec![0.0; quad.mesh.n_vertices()];
        let bw: Vec<f64> = b_vol.iter().zip(&quad.vol_weights).map(|(b, w)| b * w).collect();
        quad.scatter_volume(&bw, &mut lumped);
        let ew: Vec<f64> = beta_edge.iter().zip(&quad.edge_weights).map(|(b, w)| b * w).collect();
        quad.scatter_boundary(&ew, &mut lumped);

        Ok(Problem {
            spec: spec.clone(),
            quad,
            regime,
            epsilon,
            a_vol,
            p_vol,
            b_vol,
            q_vol,
            beta_edge,
            p_edge,
            lumped: lumped.into(),
            beta_modular,
            gradient_modular,
            volume_p_modular,
            source_modular,
            sobolev: OnceLock::new(),
            preconditioner: OnceLock::new(),
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(invalid(format!("regularization ε must be ≥ 0, got {epsilon}")));
        }
        if self.regime.p_minus < 2.0 && epsilon == 0.0 {
            return Err(invalid("p⁻ < 2 requires a positive gradient regularization ε"));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// Same fields with a different `λ`.
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("λ must be positive, got {lambda}")));
        }
        self.spec.lambda = lambda;
        Ok(self)
    }

    pub fn lambda(&self) -> f64 {
        self.spec.lambda
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.quad.mesh
    }

    pub fn n(&self) -> usize {
        self.quad.mesh.n_vertices()
    }

    /// `b` at the volume quadrature points.
    pub fn b_samples(&self) -> &[f64] {
        &self.b_vol
    }

    /// `q` at the volume quadrature points.
    pub fn q_samples(&self) -> &[f64] {
        &self.q_vol
    }

    pub fn lumped_mass(&self) -> &Arc<[f64]> {
        &self.lumped
    }

    pub fn function(&self, values: Vec<f64>) -> Result<DiscreteFunction> {
        DiscreteFunction::new(self.mesh().clone(), values)
    }

    pub(crate) fn check(&self, u: &DiscreteFunction) -> Result<()> {
        if u.on_mesh(self.mesh()) {
            Ok(())
        } else {
            Err(invalid("function lives on a different mesh than the problem"))
        }
    }

    fn grad_density(&self, s: f64, a: f64, p: f64) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        if e2 == 0.0 {
            a / p * if s == 0.0 { 0.0 } else { (0.5 * p * s.ln()).exp() }
        } else {
            a / p * ((0.5 * p * (s + e2).ln()).exp() - (p * self.epsilon.ln()).exp())
        }
    }

    /// `(s + ε²)^{(p−2)/2}`, zero when `s + ε² = 0`.
    fn grad_coefficient(&self, s: f64, p: f64) -> f64 {
        let t = s + self.epsilon * self.epsilon;
        if t == 0.0 {
            0.0
        } else {
            (0.5 * (p - 2.0) * t.ln()).exp()
        }
    }

    pub fn energy(&self, u: &[f64]) -> EnergyBreakdown {
        let nq = self.quad.n_tri_pts();
        let grads = self.quad.element_gradients(u);
        let mut grad_term = 0.0;
        for (t, d) in grads.iter().enumerate() {
            let s = d[0] * d[0] + d[1] * d[1];
            for k in t * nq..(t + 1) * nq {
                grad_term += self.quad.vol_weights[k] * self.grad_density(s, self.a_vol[k], self.p_vol[k]);
            }
        }
        let bv = self.quad.boundary_values(u);
        let boundary_term: f64 = (0..bv.len())
            .map(|k| self.quad.edge_weights[k] * self.beta_edge[k] / self.p_edge[k] * abs_pow(bv[k], self.p_edge[k]))
            .sum();
        let vv = self.quad.volume_values(u);
        let source_term: f64 = (0..vv.len())
            .map(|k| self.quad.vol_weights[k] * self.b_vol[k] / self.q_vol[k] * abs_pow(vv[k], self.q_vol[k]))
            .sum();
        let lambda = self.lambda();
        EnergyBreakdown { grad_term, boundary_term, source_term, lambda, j: grad_term + boundary_term - lambda * source_term }
    }

    pub fn j(&self, u: &[f64]) -> f64 {
        self.energy(u).j
    }

    /// Nodal vector of `⟨L′_β(u), ·⟩`.
    pub fn l_gradient(&self, u: &[f64]) -> Vec<f64> {
        let nq = self.quad.n_tri_pts();
        let mut out = vec![0.0; u.len()];
        let flux: Vec<[f64; 2]> = self
            .quad
            .element_gradients(u)
            .iter()
            .enumerate()
            .map(|(t, d)| {
                let s = d[0] * d[0] + d[1] * d[1];
                let mut c = 0.0;
                for k in t * nq..(t + 1) * nq {
                    c += self.quad.vol_weights[k] * self.a_vol[k] * self.grad_coefficient(s, self.p_vol[k]);
                }
                [c * d[0], c * d[1]]
            })
            .collect();
        self.quad.scatter_gradient(&flux, &mut out);
        let bv = self.quad.boundary_values(u);
        let coef: Vec<f64> = (0..bv.len())
            .map(|k| self.quad.edge_weights[k] * self.beta_edge[k] * abs_pow(bv[k], self.p_edge[k] - 1.0) * bv[k].signum())
            .collect();
        self.quad.scatter_boundary(&coef, &mut out);
        out
    }

    /// Nodal vector of `v ↦ ∫ b|u|^{q−2}uv`.
    pub fn source_gradient(&self, u: &[f64]) -> Vec<f64> {
        let vv = self.quad.volume_values(u);
        let coef: Vec<f64> = (0..vv.len())
            .map(|k| self.quad.vol_weights[k] * self.b_vol[k] * abs_pow(vv[k], self.q_vol[k] - 1.0) * vv[k].signum())
            .collect();
        let mut out = vec![0.0; u.len()];
        self.quad.scatter_volume(&coef, &mut out);
        out
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.l_gradient(u);
        let lambda = self.lambda();
        for (gi, si) in g.iter_mut().zip(self.source_gradient(u)) {
            *gi -= lambda * si;
        }
        g
    }

    pub fn gradient_vector(&self, u: &[f64]) -> GradientVector {
        GradientVector { values: self.gradient(u), lumped_mass: self.lumped.clone() }
    }

    /// Lumped-mass dual norm of `J′_λ(u)`.
    pub fn residual(&self, u: &[f64]) -> f64 {
        self.dual_norm(&self.gradient(u))
    }

    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        dual_norm(g, &self.lumped)
    }

    pub fn i_beta(&self, u: &[f64]) -> f64 {
        self.beta_modular.value(&self.quad, u)
    }

    pub fn beta_norm(&self, u: &[f64]) -> Result<f64> {
        self.beta_modular.norm(&self.quad, u)
    }

    pub fn beta_norm_with_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.beta_modular.norm_with_gradient(&self.quad, u)
    }

    /// `‖u‖_{q(·),b}`.
    pub fn source_norm(&self, u: &[f64]) -> Result<f64> {
        luxemburg_norm(&self.source_modular.closure(&self.quad, u))
    }

    pub fn source_norm_with_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        CompositeModular::new(vec![self.source_modular.clone()]).norm_with_gradient(&self.quad, u)
    }

    /// `‖∇u‖_{p(·),a} + ‖u‖_{p(·),b}`.
    pub fn sobolev_norm_ab(&self, u: &[f64]) -> Result<f64> {
        let g = luxemburg_norm(&self.gradient_modular.closure(&self.quad, u))?;
        let v = luxemburg_norm(&self.volume_p_modular.closure(&self.quad, u))?;
        Ok(g + v)
    }

    /// `p = 2` matrices `(K_a, B_β, M_b)`: `a`-weighted stiffness,
    /// `β`-weighted boundary mass and `b`-weighted mass.
    pub fn linear_matrices(&self) -> (BandMatrix, BandMatrix, BandMatrix) {
        let n = self.n();
        let bw = self.bandwidth();
        let mut k = BandMatrix::zeros(n, bw);
        let mut b = BandMatrix::zeros(n, bw);
        let mut m = BandMatrix::zeros(n, bw);
        let nq = self.quad.n_tri_pts();
        let shapes: Vec<[f64; 3]> = (0..nq).map(|i| self.quad.tri_shape(i)).collect();
        for (t, (tri, g)) in self.quad.mesh.triangles.iter().zip(&self.quad.grads).enumerate() {
            let mut ka = 0.0;
            for q in t * nq..(t + 1) * nq {
                ka += self.quad.vol_weights[q] * self.a_vol[q];
            }
            for i in 0..3 {
                for j in 0..3 {
                    k.add(tri[i], tri[j], ka * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
                    let mut mij = 0.0;
                    for (s, q) in shapes.iter().zip(t * nq..(t + 1) * nq) {
                        mij += self.quad.vol_weights[q] * self.b_vol[q] * s[i] * s[j];
                    }
                    m.add(tri[i], tri[j], mij);
                }
            }
        }
        let ne = self.quad.n_edge_pts();
        for (e, edge) in self.quad.mesh.boundary_edges.iter().enumerate() {
            for k in e * ne..(e + 1) * ne {
                let s = self.quad.edge_shape(k - e * ne);
                let w = self.quad.edge_weights[k] * self.beta_edge[k];
                for i in 0..2 {
                    for j in 0..2 {
                        b.add(edge.v[i], edge.v[j], w * s[i] * s[j]);
                    }
                }
            }
        }
        (k, b, m)
    }

    pub fn bandwidth(&self) -> usize {
        self.quad.mesh.nx + 2
    }

    /// `K_a + B_β + M_b`, the Sobolev inner product used to precondition
    /// descent directions.
    pub fn sobolev_matrix(&self) -> &BandMatrix {
        self.sobolev.get_or_init(|| {
            let (mut k, b, m) = self.linear_matrices();
            k.add_scaled(1.0, &b);
            k.add_scaled(1.0, &m);
            k
        })
    }

    /// Cholesky factor of [`Self::sobolev_matrix`].
    pub fn preconditioner(&self) -> Result<&BandCholesky> {
        self.preconditioner
            .get_or_init(|| self.sobolev_matrix().cholesky().map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Numerical(e.clone()))
    }

    /// Hessian of `J_λ` at `u`. Terms singular at `u = 0` (exponent below 2)
    /// are dropped at the points where they occur.
    pub fn hessian(&self, u: &[f64]) -> BandMatrix {
        let n = self.n();
        let mut h = BandMatrix::zeros(n, self.bandwidth());
        let nq = self.quad.n_tri_pts();
        let e2 = self.epsilon * self.epsilon;
        for (t, (tri, g)) in self.quad.mesh.triangles.iter().zip(&self.quad.grads).enumerate() {
            let mut d = [0.0; 2];
            for k in 0..3 {
                d[0] += u[tri[k]] * g[k][0];
                d[1] += u[tri[k]] * g[k][1];
            }
            let s = d[0] * d[0] + d[1] * d[1];
            let tt = s + e2;
            let mut c = [[0.0; 2]; 2];
            for q in t * nq..(t + 1) * nq {
                let p = self.p_vol[q];
                let w = self.quad.vol_weights[q] * self.a_vol[q];
                let base = if tt == 0.0 {
                    if p == 2.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    (0.5 * (p - 2.0) * tt.ln()).exp()
                };
                let r = if tt == 0.0 { 0.0 } else { (p - 2.0) / tt };
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        c[i][j] += w * base * (delta + r * d[i] * d[j]);
                    }
                }
            }
            for i in 0..3 {
                let ci = [c[0][0] * g[i][0] + c[0][1] * g[i][1], c[1][0] * g[i][0] + c[1][1] * g[i][1]];
                for j in 0..3 {
                    h.add(tri[i], tri[j], ci[0] * g[j][0] + ci[1] * g[j][1]);
                }
            }
        }
        let lambda = self.lambda();
        let vv = self.quad.volume_values(u);
        for (t, tri) in self.quad.mesh.triangles.iter().enumerate() {
            for k in 0..nq {
                let q = t * nq + k;
                let c = -lambda * self.quad.vol_weights[q] * self.b_vol[q] * (self.q_vol[q] - 1.0) * pow_at_zero(vv[q], self.q_vol[q] - 2.0);
                if c == 0.0 {
                    continue;
                }
                let s = self.quad.tri_shape(k);
                for i in 0..3 {
                    for j in 0..3 {
                        h.add(tri[i], tri[j], c * s[i] * s[j]);
                    }
                }
            }
        }
        let bv = self.quad.boundary_values(u);
        let ne = self.quad.n_edge_pts();
        for (e, edge) in self.quad.mesh.boundary_edges.iter().enumerate() {
            for k in 0..ne {
                let q = e * ne + k;
                let c = self.quad.edge_weights[q] * self.beta_edge[q] * (self.p_edge[q] - 1.0) * pow_at_zero(bv[q], self.p_edge[q] - 2.0);
                let s = self.quad.edge_shape(k);
                for i in 0..2 {
                    for j in 0..2 {
                        h.add(edge.v[i], edge.v[j], c * s[i] * s[j]);
                    }
                }
            }
        }
        h
    }
}

/// `|v|^e` with `0^0 = 1` and `0^e = 0` otherwise.
fn pow_at_zero(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        if e == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        abs_pow(v, e)
    }
}

fn problem_for(u: &DiscreteFunction, spec: &ProblemSpec) -> Result<Problem> {
    Problem::on_mesh(spec, u.mesh().clone())
}

pub fn i_beta(u: &DiscreteFunction, spec: &ProblemSpec) -> Result<f64> {
    Ok(problem_for(u, spec)?.i_beta(u.values()))
}

pub fn beta_norm(u: &DiscreteFunction, spec: &ProblemSpec) -> Result<f64> {
    problem_for(u, spec)?.beta_norm(u.values())
}

pub fn sobolev_norm_ab(u: &DiscreteFunction, spec: &ProblemSpec) -> Result<f64> {
    problem_for(u, spec)?.sobolev_norm_ab(u.values())
}

pub fn j_lambda(u: &DiscreteFunction, spec: &ProblemSpec) -> Result<EnergyBreakdown> {
    Ok(problem_for(u, spec)?.energy(u.values()))
}

pub fn j_lambda_grad(u: &DiscreteFunction, spec: &ProblemSpec) -> Result<GradientVector> {
    Ok(problem_for(u, spec)?.gradient_vector(u.values()))
}

pub fn l_beta(u: &DiscreteFunction, spec: &ProblemSpec) -> Result<f64> {
    Ok(problem_for(u, spec)?.energy(u.values()).l_beta())
}

/// `⟨L′_β(u), v⟩`.
pub fn l_beta_pairing(u: &DiscreteFunction, v: &DiscreteFunction, spec: &ProblemSpec) -> Result<f64> {
    let pb = problem_for(u, spec)?;
    pb.check(v)?;
    Ok(dot(&pb.l_gradient(u.values()), v.values()))
}

/// `⟨L′_β(u) − L′_β(v), u − v⟩`.
pub fn monotonicity_gap(u: &DiscreteFunction, v: &DiscreteFunction, spec: &ProblemSpec) -> Result<f64> {
    let pb = problem_for(u, spec)?;
    pb.check(v)?;
    let gu = pb.l_gradient(u.values());
    let gv = pb.l_gradient(v.values());
    Ok(gu.iter().zip(&gv).zip(u.values().iter().zip(v.values())).map(|((a, b), (x, y))| (a - b) * (x - y)).sum())
}

pub fn weak_residual(u: &DiscreteFunction, spec: &ProblemSpec) -> Result<f64> {
    Ok(problem_for(u, spec)?.residual(u.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::DomainSpec;

    fn spec(fields: [&str; 5], lambda: f64, n: usize) -> ProblemSpec {
        ProblemSpec::new(DomainSpec::unit_square(n), fields, lambda).unwrap()
    }

    fn linear(n: usize) -> ProblemSpec {
        spec(["1", "1", "2", "2", "1"], 1.0, n)
    }

    #[test]
    fn i_beta_examples() {
        let s = linear(4);
        let pb = Problem::new(&s).unwrap();
        let one = vec![1.0; pb.n()];
        assert!((pb.i_beta(&one) - 4.0).abs() < 1e-13);
        let x: Vec<f64> = pb.mesh().vertices.iter().map(|p| p[0]).collect();
        assert!((pb.i_beta(&x) - 8.0 / 3.0).abs() < 1e-13);
        let x3: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        assert!((pb.i_beta(&x3) - 9.0 * pb.i_beta(&x)).abs() < 1e-12);
        assert!((pb.beta_norm(&x).unwrap() - (8.0f64 / 3.0).sqrt()).abs() < 1e-11);
        assert!((pb.sobolev_norm_ab(&x).unwrap() - (1.0 + (1.0f64 / 3.0).sqrt())).abs() < 1e-11);
        assert!((pb.sobolev_norm_ab(&one).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn energy_constants() {
        let s = spec(["1", "1", "2", "4", "1"], 1.0, 4);
        let pb = Problem::new(&s).unwrap();
        let e = pb.energy(&vec![1.0; pb.n()]);
        assert!((e.j - 1.75).abs() < 1e-13);
        assert_eq!(pb.energy(&vec![0.0; pb.n()]).j, 0.0);
        assert!((e.l_beta() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn residual_of_zero_vanishes() {
        let s = spec(["1", "1", "2", "4", "1"], 1.0, 4);
        let pb = Problem::new(&s).unwrap();
        assert_eq!(pb.residual(&vec![0.0; pb.n()]), 0.0);
    }

    #[test]
    fn epsilon_defaults() {
        let pb = Problem::new(&spec(["1", "1", "1.5 + x", "3", "1"], 1.0, 4)).unwrap();
        assert_eq!(pb.epsilon, DEFAULT_EPSILON);
        assert!(pb.with_epsilon(0.0).is_err());
        let pb = Problem::new(&linear(4)).unwrap();
        assert_eq!(pb.epsilon, 0.0);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let s = spec(["1 + x", "1", "2.5 + x", "3 + y", "1 + y"], 0.7, 5);
        let pb = Problem::new(&s).unwrap();
        let u: Vec<f64> = pb.mesh().vertices.iter().map(|p| 0.3 + (2.0 * p[0]).sin() * p[1]).collect();
        let v: Vec<f64> = pb.mesh().vertices.iter().map(|p| p[0] - p[1] * p[1]).collect();
        let hv = pb.hessian(&u).mul_vec(&v);
        let h = 1e-6;
        let gp = pb.gradient(&crate::linalg::axpy(&u, h, &v));
        let gm = pb.gradient(&crate::linalg::axpy(&u, -h, &v));
        for i in 0..u.len() {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            assert!((fd - hv[i]).abs() < 1e-6 * (1.0 + hv[i].abs()), "{i}: {fd} vs {}", hv[i]);
        }
    }

    #[test]
    fn preconditioner_is_spd() {
        let pb = Problem::new(&linear(6)).unwrap();
        let c = pb.preconditioner().unwrap();
        let x = c.solve(&vec![1.0; pb.n()]);
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
