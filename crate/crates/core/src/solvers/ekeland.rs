use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discrete::DiscreteFunction;
use crate::energy::Problem;
use crate::error::{invalid, Error, Result};
use crate::fields::{ProblemSpec, Regime};
use crate::linalg::dot;
use crate::modular::abs_pow;

use super::descent::{armijo, energy_objective, DescentOptions, Objective};
use super::embedding::random_function;
use super::newton::newton_polish;
use super::{require_regime, trace_entry, Classification, CriticalPoint, Status, TraceEntry};

/// The threshold `λ*` below which small spheres are an energy barrier in
/// the sublinear regime, and the barrier height `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaStar {
    pub lambda_star: f64,
    pub gamma: f64,
    pub rho: f64,
    pub c2: f64,
}

/// `λ* = ρ^{p⁺−q⁻}/(2p⁺) · q⁻/C₂^{q⁻}` and `γ = ρ^{p⁺}/(2p⁺)`.
///
/// ```
/// let ls = pxrobin::solvers::lambda_star(4.0, 2.0, 0.5, 1.0).unwrap();
/// assert_eq!(ls.lambda_star, 0.0625);
/// assert_eq!(ls.gamma, 0.0078125);
/// ```
pub fn lambda_star(p_plus: f64, q_minus: f64, rho: f64, c2: f64) -> Result<LambdaStar> {
    if !(c2 > 0.0 && c2.is_finite()) {
        return Err(invalid(format!("embedding constant must be positive, got {c2}")));
    }
    // ρ = 1/C₂ is admitted as the limiting case of the open condition
    if !(rho > 0.0 && rho < 1.0 && rho * c2 <= 1.0 + 1e-12) {
        return Err(invalid(format!("ρ = {rho} must lie in (0, 1) with ρ ≤ 1/C₂ = {}", 1.0 / c2)));
    }
    if !(q_minus < p_plus) {
        return Err(invalid(format!("λ* needs q⁻ < p⁺, got q⁻ = {q_minus}, p⁺ = {p_plus}")));
    }
    let lambda_star = rho.powf(p_plus - q_minus) / (2.0 * p_plus) * q_minus / c2.powf(q_minus);
    let gamma = rho.powf(p_plus) / (2.0 * p_plus);
    Ok(LambdaStar { lambda_star, gamma, rho, c2 })
}

/// A direction `φ` with `‖φ‖_β = 1` and a scale `t*` with `J(t*φ) < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeDirection {
    pub phi: DiscreteFunction,
    pub epsilon0: f64,
    /// Triangles where every quadrature point has `q < q⁻ + ε₀`.
    pub omega0_mask: Vec<bool>,
    /// `[x0, y0, x1, y1]` of the bump's support.
    pub support: [f64; 4],
    pub delta: f64,
    pub t_star: f64,
    pub energy_at_t_star: f64,
}

/// Triangles whose volume quadrature points all have `q < level`.
fn omega0_mask(pb: &Problem, level: f64) -> Vec<bool> {
    let nq = pb.quad.n_tri_pts();
    pb.q_samples().chunks(nq).map(|qs| qs.iter().all(|&q| q < level)).collect()
}

pub fn negative_direction_on(pb: &Problem) -> Result<NegativeDirection> {
    require_regime(pb, Regime::Sublinear)?;
    let r = &pb.regime;
    let eps0 = r.epsilon0();
    let nq = pb.quad.n_tri_pts();
    let qs = pb.q_samples();
    let mask = omega0_mask(pb, r.q_minus + eps0);
    let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for (tri, _) in pb.mesh().triangles.iter().zip(&mask).filter(|(_, m)| **m) {
        for &v in tri {
            let p = pb.mesh().vertices[v];
            bb = [bb[0].min(p[0]), bb[1].min(p[1]), bb[2].max(p[0]), bb[3].max(p[1])];
        }
    }
    let refine = || Error::Resolution(format!("the set where q < q⁻ + ε₀ = {} holds no bump at this mesh resolution; refine the mesh", r.q_minus + eps0));
    if !(bb[2] > bb[0] && bb[3] > bb[1]) {
        return Err(refine());
    }
    let pi = std::f64::consts::PI;
    let raw: Vec<f64> = pb
        .mesh()
        .vertices
        .iter()
        .map(|p| {
            if p[0] < bb[0] || p[0] > bb[2] || p[1] < bb[1] || p[1] > bb[3] {
                return 0.0;
            }
            let sx = (pi * (p[0] - bb[0]) / (bb[2] - bb[0])).sin();
            let sy = (pi * (p[1] - bb[1]) / (bb[3] - bb[1])).sin();
            sx * sx * sy * sy
        })
        .collect();
    let norm = pb.beta_norm(&raw)?;
    if norm == 0.0 {
        return Err(refine());
    }
    let phi: Vec<f64> = raw.iter().map(|v| v / norm).collect();

    let vals = pb.quad.volume_values(&phi);
    let bs = pb.b_samples();
    let mut integral = 0.0;
    for (t, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
        for k in t * nq..(t + 1) * nq {
            integral += pb.quad.vol_weights[k] * bs[k] * abs_pow(vals[k], qs[k]);
        }
    }
    let delta = 0.9 * 1f64.min(pb.lambda() * r.p_minus / r.q_plus * integral);
    let t_star = 0.5 * delta.powf(1.0 / (r.p_minus - r.q_minus - eps0));
    let start: Vec<f64> = phi.iter().map(|v| t_star * v).collect();
    let energy_at_t_star = pb.j(&start);
    if !(energy_at_t_star < 0.0) {
        return Err(Error::Numerical(format!("J(t*φ) = {energy_at_t_star} is not negative")));
    }
    Ok(NegativeDirection {
        phi: pb.function(phi)?,
        epsilon0: eps0,
        omega0_mask: mask,
        support: bb,
        delta,
        t_star,
        energy_at_t_star,
    })
}

pub fn construct_negative_direction(spec: &ProblemSpec) -> Result<NegativeDirection> {
    negative_direction_on(&Problem::new(spec)?)
}

fn radial(pb: &Problem, rho: f64) -> impl Fn(Vec<f64>) -> Result<Vec<f64>> + '_ {
    move |u: Vec<f64>| {
        let n = pb.beta_norm(&u)?;
        Ok(if n > rho { u.iter().map(|v| v * rho / n).collect() } else { u })
    }
}

/// Projected descent in the closed β-ball of radius `rho` from `t*φ` and
/// `restarts` seeded random starts, each finished by a Newton polish.
/// Returns the lowest-energy stationary point with `J < 0` strictly inside
/// the ball.
pub fn ekeland_on(pb: &Problem, rho: f64, tol: f64, restarts: usize, max_iters: usize, seed: u64) -> Result<CriticalPoint> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(format!("ball radius must be positive, got {rho}")));
    }
    require_regime(pb, Regime::Sublinear)?;
    let neg = negative_direction_on(pb)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![neg.phi.scaled(neg.t_star.min(0.5 * rho)).into_values()];
    for _ in 0..restarts {
        let s = random_function(pb, &mut rng);
        let n = pb.beta_norm(&s)?;
        starts.push(s.iter().map(|v| 0.5 * rho * v / n).collect());
    }

    let (value, gradient) = energy_objective(pb);
    let obj = Objective { value: &value, gradient: &gradient };
    let pre = pb.preconditioner()?;
    let direction = |_u: &[f64], g: &[f64]| -> Result<(Vec<f64>, f64)> {
        Ok((pre.solve(g).iter().map(|v| -v).collect(), pb.dual_norm(g)))
    };
    let retract = radial(pb, rho);
    let opts = DescentOptions { tol, max_iters, ..Default::default() };

    let mut best: Option<CriticalPoint> = None;
    let mut best_j = f64::INFINITY;
    for start in starts {
        let mut trace: Vec<TraceEntry> = Vec::new();
        let run = armijo(&obj, &direction, &retract, start, &opts, &mut |u, j, r| trace.push(trace_entry(pb, u, j, r)))?;
        best_j = best_j.min(run.value);
        let mut u = run.u;
        let mut iterations = run.iterations;
        if run.status != Status::Converged {
            let polished = newton_polish(pb, &u, tol, 50, None)?;
            iterations += polished.iterations;
            if polished.converged {
                trace.extend_from_slice(&polished.history[1..]);
                u = polished.u;
            }
        }
        let mut cand = CriticalPoint::finish(pb, u, iterations, Classification::BallMinimizer, run.status, trace)?;
        if cand.residual <= tol {
            cand.status = Status::Converged;
        }
        let ok = cand.residual <= tol && cand.energy < 0.0 && cand.beta_norm < rho;
        if ok && best.as_ref().is_none_or(|b| cand.energy < b.energy) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::Numerical(format!("no stationary point with J < 0 inside the ball; best J = {best_j}")))
}

/// Ekeland-type minimization of `J_λ` over the closed β-ball of radius `rho`.
pub fn ekeland_ball_minimize(spec: &ProblemSpec, rho: f64, tol: f64, restarts: usize) -> Result<CriticalPoint> {
    if !(rho > 0.0) {
        return Err(invalid(format!("ball radius must be positive, got {rho}")));
    }
    ekeland_on(&Problem::new(spec)?, rho, tol, restarts, 2000, 0)
}

/// Result of minimizing `J_λ` over the sphere `‖u‖_β = ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereInfimum {
    pub infimum: f64,
    /// `J` at each local minimizer.
    pub values: Vec<f64>,
    /// `‖u‖_β` of each local minimizer.
    pub norms: Vec<f64>,
}

/// Minimizes `J_λ` over `‖u‖_β = rho` from `samples` seeded random starts.
pub fn sphere_infimum_on(pb: &Problem, rho: f64, samples: usize, seed: u64) -> Result<SphereInfimum> {
    if samples == 0 {
        return Err(invalid("sphere_infimum needs at least one sample"));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(format!("sphere radius must be positive, got {rho}")));
    }
    let (value, gradient) = energy_objective(pb);
    let obj = Objective { value: &value, gradient: &gradient };
    let pre = pb.preconditioner()?;
    // tangential part g − μ∇‖u‖_β with μ = g·u/‖u‖_β (Euler: ∇‖u‖·u = ‖u‖)
    let direction = |u: &[f64], g: &[f64]| -> Result<(Vec<f64>, f64)> {
        let (n, gn) = pb.beta_norm_with_gradient(u)?;
        let mu = dot(g, u) / n;
        let gt: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - mu * b).collect();
        Ok((pre.solve(&gt).iter().map(|v| -v).collect(), pb.dual_norm(&gt)))
    };
    let retract = |u: Vec<f64>| -> Result<Vec<f64>> {
        let n = pb.beta_norm(&u)?;
        Ok(u.iter().map(|v| v * rho / n).collect())
    };
    let opts = DescentOptions { tol: 1e-9, max_iters: 300, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    let mut norms = Vec::with_capacity(samples);
    for _ in 0..samples {
        let start = retract(random_function(pb, &mut rng))?;
        let run = armijo(&obj, &direction, &retract, start, &opts, &mut |_, _, _| {})?;
        values.push(run.value);
        norms.push(pb.beta_norm(&run.u)?);
    }
    let infimum = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SphereInfimum { infimum, values, norms })
}

pub fn sphere_infimum(spec: &ProblemSpec, rho: f64, samples: usize) -> Result<SphereInfimum> {
    sphere_infimum_on(&Problem::new(spec)?, rho, samples, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_star_examples() {
        let a = lambda_star(4.0, 2.0, 0.5, 1.0).unwrap();
        assert_eq!((a.lambda_star, a.gamma), (0.0625, 0.0078125));
        assert_eq!(lambda_star(4.0, 2.0, 0.5, 2.0).unwrap().lambda_star, 0.015625);
        assert!(lambda_star(4.0, 2.0, 0.5, 2.5).unwrap_err().to_string().contains("ρ"));
        let b = lambda_star(4.0, 2.0, 0.4, 2.0).unwrap();
        let c = lambda_star(4.0, 2.0, 0.4, 2.2).unwrap();
        assert!(c.lambda_star < b.lambda_star);
        assert!(lambda_star(4.0, 2.0, 0.0, 1.0).is_err());
        assert!(lambda_star(2.0, 4.0, 0.5, 1.0).is_err());
    }

    fn sublinear(n: usize) -> Problem {
        let spec = ProblemSpec::new(crate::fields::DomainSpec::unit_square(n), ["1", "1", "3 + x", "2 + 1.5*x", "1"], 0.01);
        Problem::new(&spec.unwrap()).unwrap()
    }

    #[test]
    fn bump_is_normalized_and_negative_at_t_star() {
        let pb = sublinear(12);
        let neg = negative_direction_on(&pb).unwrap();
        assert!((pb.beta_norm(neg.phi.values()).unwrap() - 1.0).abs() <= 1e-9);
        assert!(neg.energy_at_t_star < 0.0);
        assert!(neg.omega0_mask.iter().any(|&m| m) && !neg.omega0_mask.iter().all(|&m| m));
    }

    #[test]
    fn constant_source_exponent_selects_every_triangle() {
        let spec = ProblemSpec::new(crate::fields::DomainSpec::unit_square(6), ["1", "1", "2.5 + x", "2", "1"], 0.01);
        let pb = Problem::new(&spec.unwrap()).unwrap();
        let mask = omega0_mask(&pb, 2.0 + 0.25);
        assert_eq!(mask.len(), pb.mesh().n_triangles());
        assert!(mask.iter().all(|&m| m));
    }

    #[test]
    fn sphere_candidates_lie_on_the_sphere() {
        let pb = sublinear(8);
        let s = sphere_infimum_on(&pb, 0.3, 3, 1).unwrap();
        assert_eq!(s.values.len(), 3);
        assert!(s.norms.iter().all(|n| (n - 0.3).abs() <= 1e-9), "{:?}", s.norms);
        assert_eq!(s.infimum, s.values.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn argument_errors() {
        let pb = sublinear(6);
        assert!(matches!(sphere_infimum_on(&pb, 0.3, 0, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(ekeland_on(&pb, 0.0, 1e-6, 1, 10, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(ekeland_on(&pb, -1.0, 1e-6, 1, 10, 0), Err(Error::InvalidArgument(_))));
    }
}
