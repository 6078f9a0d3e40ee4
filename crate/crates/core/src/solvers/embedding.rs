use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::Problem;
use crate::error::Result;
use crate::fields::ProblemSpec;
use crate::linalg::{dot, BandMatrix};

use super::descent::{armijo, DescentOptions, Objective};
use super::eigen::generalized_eigs;

/// Safety factor applied to the discrete embedding constant before it is
/// used in the threshold formula.
pub const INFLATION: f64 = 1.1;

/// `min(0.5, 0.9/C₂)`: a radius below both 1 and `1/C₂`.
pub fn default_rho(c2: f64) -> f64 {
    0.5f64.min(0.9 / c2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingEstimate {
    /// Largest ratio `‖u‖_{q,b}/‖u‖_β` found; a lower bound for `C₂`.
    pub raw: f64,
    /// `raw · INFLATION`.
    pub inflated: f64,
    /// Final ratio of each start.
    pub per_trial: Vec<f64>,
    #[serde(skip)]
    pub maximizer: Vec<f64>,
}

/// The `M`-orthogonal complement of a span of `M`-orthonormal vectors.
#[derive(Debug, Clone)]
pub(crate) struct Complement {
    basis: Vec<Vec<f64>>,
    mass_basis: Vec<Vec<f64>>,
}

impl Complement {
    pub fn new(basis: Vec<Vec<f64>>, mass: &BandMatrix) -> Self {
        let mass_basis = basis.iter().map(|e| mass.mul_vec(e)).collect();
        Complement { basis, mass_basis }
    }

    /// `v − E Eᵀ M v`
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for (e, me) in self.basis.iter().zip(&self.mass_basis) {
            let c = dot(me, v);
            out.iter_mut().zip(e).for_each(|(o, x)| *o -= c * x);
        }
        out
    }

    /// Transpose of [`Self::project`], acting on dual vectors.
    pub fn project_dual(&self, g: &[f64]) -> Vec<f64> {
        let mut out = g.to_vec();
        for (e, me) in self.basis.iter().zip(&self.mass_basis) {
            let c = dot(e, g);
            out.iter_mut().zip(me).for_each(|(o, x)| *o -= c * x);
        }
        out
    }
}

/// Projected, preconditioned ascent of `log ‖u‖_{q,b} − log ‖u‖_β` from
/// `start`, optionally restricted to `within`. Returns the ratio and the
/// maximizer scaled to `‖u‖_β = 1`.
pub(crate) fn maximize_ratio(
    pb: &Problem,
    start: Vec<f64>,
    within: Option<&Complement>,
    max_iters: usize,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let value = |u: &[f64]| -> Result<f64> {
        let nq = pb.source_norm(u)?;
        let nb = pb.beta_norm(u)?;
        Ok(-(nq.ln() - nb.ln()))
    };
    let gradient = |u: &[f64]| -> Result<Vec<f64>> {
        let (nq, gq) = pb.source_norm_with_gradient(u)?;
        let (nb, gb) = pb.beta_norm_with_gradient(u)?;
        Ok(gq.iter().zip(&gb).map(|(a, b)| -(a / nq - b / nb)).collect())
    };
    let pre = pb.preconditioner()?;
    let direction = |_u: &[f64], g: &[f64]| -> Result<(Vec<f64>, f64)> {
        let (g, d) = match within {
            Some(c) => {
                let gp = c.project_dual(g);
                let d = c.project(&pre.solve(&gp));
                (gp, d)
            }
            None => (g.to_vec(), pre.solve(g)),
        };
        Ok((d.iter().map(|v| -v).collect(), pb.dual_norm(&g)))
    };
    let retract = |u: Vec<f64>| -> Result<Vec<f64>> {
        let n = pb.beta_norm(&u)?;
        Ok(u.iter().map(|v| v / n).collect())
    };
    let start = match within {
        Some(c) => c.project(&start),
        None => start,
    };
    let start = retract(start)?;
    let obj = Objective { value: &value, gradient: &gradient };
    let opts = DescentOptions { tol, max_iters, ..Default::default() };
    let run = armijo(&obj, &direction, &retract, start, &opts, &mut |_, _, _| {})?;
    Ok(((-run.value).exp(), run.u))
}

/// Smooth random start: a random combination of low-order sine/cosine products.
pub fn random_function(pb: &Problem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = pb.mesh().rect;
    let modes: Vec<(f64, f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0..4) as f64,
                rng.gen_range(0..4) as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    pb.mesh()
        .vertices
        .iter()
        .map(|p| {
            let sx = (p[0] - r.x0) / (r.x1 - r.x0) * std::f64::consts::PI;
            let sy = (p[1] - r.y0) / (r.y1 - r.y0) * std::f64::consts::PI;
            0.05 + modes.iter().map(|(c, i, j, fx, fy)| c * (i * sx + fx).cos() * (j * sy + fy).cos()).sum::<f64>()
        })
        .collect()
}

/// First eigenvector of the `p = 2` surrogate `(K_a + B_β) v = θ M_b v`.
pub(crate) fn surrogate_modes(pb: &Problem, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>, BandMatrix)> {
    let (mut kk, bb, mm) = pb.linear_matrices();
    kk.add_scaled(1.0, &bb);
    let (vals, vecs) = generalized_eigs(&kk, &mm, k, 1e-10)?;
    Ok((vals, vecs, mm))
}

/// Multi-start estimate of `sup ‖u‖_{q,b}/‖u‖_β` on the discrete space.
///
/// Start 0 is the first `p = 2` surrogate mode; the others are seeded
/// random smooth functions. The result is deterministic for a fixed seed.
pub fn estimate_embedding_on(pb: &Problem, trials: usize, seed: u64) -> Result<EmbeddingEstimate> {
    let trials = trials.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, modes, _) = surrogate_modes(pb, 1)?;
    let mut per_trial = Vec::with_capacity(trials);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for t in 0..trials {
        let start = if t == 0 { modes[0].clone() } else { random_function(pb, &mut rng) };
        let (ratio, u) = maximize_ratio(pb, start, None, 400, 1e-9)?;
        per_trial.push(ratio);
        if ratio > best.0 {
            best = (ratio, u);
        }
    }
    Ok(EmbeddingEstimate { raw: best.0, inflated: best.0 * INFLATION, per_trial, maximizer: best.1 })
}

pub fn estimate_embedding_constant(spec: &ProblemSpec, trials: usize, seed: u64) -> Result<EmbeddingEstimate> {
    estimate_embedding_on(&Problem::new(spec)?, trials, seed)
}
