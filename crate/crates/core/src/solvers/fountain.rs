use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::Problem;
use crate::error::{invalid, Error, Result};
use crate::fields::{ProblemSpec, Regime};
use crate::linalg::dot;

use super::descent::{armijo, energy_objective, DescentOptions, Objective};
use super::embedding::{maximize_ratio, random_function, surrogate_modes, Complement};
use super::mountain_pass::{endpoint_along, mountain_pass_deflated, ray_maximum, MountainPassOptions};
use super::newton::{newton_polish, Deflation};
use super::{require_regime, Classification, CriticalPoint, Status};

/// `α_k`, `γ_k`, `η_k`, `b_k`, `a_k` for `k = 1..=k_max`, index `k − 1`.
///
/// `Y_k` is spanned by the first `k` modes of the `p = 2` surrogate
/// `(K_a + B_β)v = θ M_b v`; `Z_k` is its `M_b`-orthogonal complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FountainDiagnostics {
    pub k_max: usize,
    /// `sup{‖u‖_{q,b} : ‖u‖_β = 1, u ∈ Z_k}`
    pub alpha: Vec<f64>,
    /// `(λq⁺α_k^{q⁺})^{1/(p⁻−q⁺)}`
    pub gamma: Vec<f64>,
    /// `2γ_k`
    pub eta: Vec<f64>,
    /// `inf{J(u) : u ∈ Z_k, ‖u‖_β = γ_k}` (sampled local minima)
    pub b_lower: Vec<f64>,
    /// `(1/p⁺ − 1/q⁺)(λq⁺α_k^{q⁺})^{p⁻/(p⁻−q⁺)}`
    pub b_bound: Vec<f64>,
    /// `max{J(u) : u ∈ Y_k, ‖u‖_β = η_k}` (sampled local maxima)
    pub a_upper: Vec<f64>,
    /// Surrogate eigenvalues `θ_1..θ_{k_max+1}`.
    pub surrogate_eigenvalues: Vec<f64>,
}

impl FountainDiagnostics {
    pub fn alpha_nonincreasing(&self) -> bool {
        self.alpha.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn a_nonpositive(&self) -> Vec<bool> {
        self.a_upper.iter().map(|&a| a <= 0.0).collect()
    }

    pub fn b_above_bound(&self, slack: f64) -> Vec<bool> {
        self.b_lower.iter().zip(&self.b_bound).map(|(b, lb)| *lb <= b + slack * (1.0 + b.abs())).collect()
    }
}

/// Minimizes `sign·J` on `{‖u‖_β = radius}` inside a subspace; `direction`
/// maps a tangential dual vector to a search direction in the subspace.
fn sphere_extremum(
    pb: &Problem,
    start: Vec<f64>,
    radius: f64,
    sign: f64,
    restrict: &dyn Fn(&[f64]) -> Vec<f64>,
    max_iters: usize,
) -> Result<(f64, Vec<f64>)> {
    let (value, gradient) = energy_objective(pb);
    let v = |u: &[f64]| value(u).map(|j| sign * j);
    let g = |u: &[f64]| gradient(u).map(|g| g.iter().map(|x| sign * x).collect::<Vec<f64>>());
    let obj = Objective { value: &v, gradient: &g };
    let direction = |u: &[f64], g: &[f64]| -> Result<(Vec<f64>, f64)> {
        let (n, gn) = pb.beta_norm_with_gradient(u)?;
        let mu = dot(g, u) / n;
        let gt: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - mu * b).collect();
        let d = restrict(&gt);
        Ok((d.iter().map(|x| -x).collect(), pb.dual_norm(&gt)))
    };
    let retract = |u: Vec<f64>| -> Result<Vec<f64>> {
        let n = pb.beta_norm(&u)?;
        Ok(u.iter().map(|x| x * radius / n).collect())
    };
    let start = retract(start)?;
    let opts = DescentOptions { tol: 1e-8, max_iters, ..Default::default() };
    let run = armijo(&obj, &direction, &retract, start, &opts, &mut |_, _, _| {})?;
    Ok((sign * run.value, run.u))
}

pub fn fountain_on(pb: &Problem, k_max: usize, seed: u64) -> Result<FountainDiagnostics> {
    require_regime(pb, Regime::Superlinear)?;
    if k_max == 0 || k_max + 1 > pb.n() {
        return Err(invalid(format!("k_max = {k_max} must lie in 1..{} for this mesh", pb.n())));
    }
    let r = pb.regime.clone();
    let lambda = pb.lambda();
    let (theta, modes, mass) = surrogate_modes(pb, k_max + 1)?;
    let pre = pb.preconditioner()?;
    let pmat = pb.sobolev_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // α_k from the top down; the maximizer over Z_{k+1} lies in Z_k
    let mut alpha = vec![0.0; k_max];
    let mut witness: Vec<Vec<f64>> = vec![Vec::new(); k_max];
    let mut carried: Option<(f64, Vec<f64>)> = None;
    for k in (1..=k_max).rev() {
        let comp = Complement::new(modes[..k].to_vec(), &mass);
        let mut starts = vec![modes[k].clone(), random_function(pb, &mut rng)];
        if let Some((_, w)) = &carried {
            starts.push(w.clone());
        }
        let mut best = carried.clone().unwrap_or((f64::NEG_INFINITY, Vec::new()));
        for s in starts {
            let (ratio, u) = maximize_ratio(pb, s, Some(&comp), 300, 1e-9)?;
            if ratio > best.0 {
                best = (ratio, u);
            }
        }
        alpha[k - 1] = best.0;
        witness[k - 1] = best.1.clone();
        carried = Some(best);
    }

    let qp = r.q_plus;
    let pm = r.p_minus;
    let gamma: Vec<f64> = alpha.iter().map(|a| (lambda * qp * a.powf(qp)).powf(1.0 / (pm - qp))).collect();
    let eta: Vec<f64> = gamma.iter().map(|g| 2.0 * g).collect();
    let b_bound: Vec<f64> = alpha
        .iter()
        .map(|a| (1.0 / r.p_plus - 1.0 / qp) * (lambda * qp * a.powf(qp)).powf(pm / (pm - qp)))
        .collect();

    let mut b_lower = Vec::with_capacity(k_max);
    let mut a_upper = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let comp = Complement::new(modes[..k].to_vec(), &mass);
        let restrict_z = |g: &[f64]| comp.project(&pre.solve(&comp.project_dual(g)));
        let mut b = f64::INFINITY;
        for s in [modes[k].clone(), witness[k - 1].clone()] {
            let (v, _) = sphere_extremum(pb, s, gamma[k - 1], 1.0, &restrict_z, 200)?;
            b = b.min(v);
        }
        b_lower.push(b);

        // Y_k: direction −E (EᵀPE)⁻¹ Eᵀ g
        let basis = &modes[..k];
        let pe: Vec<Vec<f64>> = basis.iter().map(|e| pmat.mul_vec(e)).collect();
        let gram = DMatrix::from_fn(k, k, |i, j| dot(&basis[i], &pe[j]));
        let chol = gram.cholesky().ok_or_else(|| Error::Numerical("surrogate basis is degenerate".into()))?;
        let restrict_y = |g: &[f64]| {
            let rhs = DVector::from_iterator(k, basis.iter().map(|e| dot(e, g)));
            let c = chol.solve(&rhs);
            let mut d = vec![0.0; g.len()];
            for (ci, e) in c.iter().zip(basis) {
                d.iter_mut().zip(e).for_each(|(x, y)| *x += ci * y);
            }
            d
        };
        let mut starts = vec![basis[0].clone(), basis[k - 1].clone()];
        for _ in 0..3 {
            let coeffs: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut u = vec![0.0; pb.n()];
            for (c, e) in coeffs.iter().zip(basis) {
                u.iter_mut().zip(e).for_each(|(x, y)| *x += c * y);
            }
            starts.push(u);
        }
        let mut a = f64::NEG_INFINITY;
        for s in starts {
            let (v, _) = sphere_extremum(pb, s, eta[k - 1], -1.0, &restrict_y, 200)?;
            a = a.max(v);
        }
        a_upper.push(a);
    }

    Ok(FountainDiagnostics { k_max, alpha, gamma, eta, b_lower, b_bound, a_upper, surrogate_eigenvalues: theta })
}

pub fn fountain_diagnostics(spec: &ProblemSpec, k_max: usize) -> Result<FountainDiagnostics> {
    fountain_on(&Problem::new(spec)?, k_max, 0)
}

/// Distinct critical points from mountain passes towards successive
/// surrogate modes, each polished with deflation of the pairs `±u_i`
/// already found.
#[derive(Debug, Clone)]
pub struct Multiplicity {
    /// Sorted by increasing `J`.
    pub points: Vec<CriticalPoint>,
    /// False when fewer than the requested count were found.
    pub complete: bool,
    /// Surrogate mode index used as endpoint direction, per point.
    pub directions: Vec<usize>,
}

pub fn multiplicity_on(pb: &Problem, count: usize, opts: &MountainPassOptions, extra_directions: usize) -> Result<Multiplicity> {
    require_regime(pb, Regime::Superlinear)?;
    if count == 0 {
        return Ok(Multiplicity { points: vec![], complete: true, directions: vec![] });
    }
    let n_dirs = (count + extra_directions).min(pb.n());
    let (_, modes, _) = surrogate_modes(pb, n_dirs)?;
    let mut found: Vec<(usize, CriticalPoint)> = Vec::new();
    for (k, mode) in modes.iter().enumerate() {
        if found.len() == count {
            break;
        }
        let known: Vec<Vec<f64>> = found.iter().map(|(_, c)| c.u.values().to_vec()).collect();
        let deflation = (!known.is_empty()).then(|| Deflation::new(known));
        let e = endpoint_along(pb, mode)?;
        let from_path = match mountain_pass_deflated(pb, &e, opts, deflation.as_ref()) {
            Ok(cp) if cp.converged() => Some(cp),
            Ok(_) | Err(Error::Geometry(_)) | Err(Error::Numerical(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some(cp) = from_path {
            if distinct_from_all(pb, &cp, found.iter().map(|(_, c)| c), opts.tol)? {
                found.push((k, cp));
                continue;
            }
        }
        // the deformed path fell back to a known level: polish the peak of
        // the undeformed path instead
        let Some(defl) = &deflation else { continue };
        let start = ray_maximum(pb, &e);
        let out = newton_polish(pb, &start, opts.tol, 4 * opts.newton_iters, Some(defl))?;
        if !out.converged || pb.j(&out.u) <= 0.0 {
            continue;
        }
        let trace: Vec<_> = out.history.clone();
        let cp = CriticalPoint::finish(pb, out.u, out.iterations, Classification::Deflated, Status::Converged, trace)?;
        if distinct_from_all(pb, &cp, found.iter().map(|(_, c)| c), opts.tol)? {
            found.push((k, cp));
        }
    }
    found.sort_by(|a, b| a.1.energy.total_cmp(&b.1.energy));
    let complete = found.len() == count;
    let (directions, points) = found.into_iter().unzip();
    Ok(Multiplicity { points, complete, directions })
}

fn distinct_from_all<'a>(pb: &Problem, c: &CriticalPoint, others: impl Iterator<Item = &'a CriticalPoint>, tol: f64) -> Result<bool> {
    for o in others {
        let minus: Vec<f64> = c.u.values().iter().zip(o.u.values()).map(|(a, b)| a - b).collect();
        let plus: Vec<f64> = c.u.values().iter().zip(o.u.values()).map(|(a, b)| a + b).collect();
        if pb.beta_norm(&minus)? <= 10.0 * tol || pb.beta_norm(&plus)? <= 10.0 * tol {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn multiplicity_search(spec: &ProblemSpec, count: usize) -> Result<Multiplicity> {
    multiplicity_on(&Problem::new(spec)?, count, &MountainPassOptions::default(), 4)
}
