//! Critical-point searches for `J_λ` and the quantitative pieces of the
//! existence arguments: embedding constant, threshold `λ*`, Fountain
//! diagnostics and the `p = q = 2` linear oracle.

mod descent;
mod eigen;
mod ekeland;
mod embedding;
mod fountain;
mod mountain_pass;
mod newton;
mod palais_smale;

use serde::{Deserialize, Serialize};

use crate::discrete::DiscreteFunction;
use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::fields::{ProblemSpec, Regime};

pub use descent::{descent_minimize, descent_on, DescentOptions};
pub use eigen::{generalized_eigs, linear_robin_eigs, rectangle_robin_eigenvalue, robin_root_1d, EigenPair};
pub use ekeland::{
    construct_negative_direction, ekeland_ball_minimize, ekeland_on, lambda_star, negative_direction_on,
    sphere_infimum, sphere_infimum_on, LambdaStar, NegativeDirection,
};
pub use embedding::{default_rho, estimate_embedding_constant, estimate_embedding_on, random_function, EmbeddingEstimate, INFLATION};
pub use fountain::{fountain_diagnostics, fountain_on, multiplicity_on, multiplicity_search, FountainDiagnostics, Multiplicity};
pub use mountain_pass::{default_endpoint, mountain_pass, mountain_pass_on, MountainPassOptions};
pub use newton::{newton_polish, Deflation, NewtonOutcome};
pub use palais_smale::{ps_check, PsCheck};

/// Default stationarity tolerance on the residual.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    MountainPass,
    BallMinimizer,
    LinearEigen,
    Deflated,
    Descent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    IterationCap,
    /// The line search found no acceptable step.
    Stalled,
    /// Norm or energy left every reasonable bound.
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    #[serde(rename = "J")]
    pub j: f64,
    pub residual: f64,
    pub beta_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub u: DiscreteFunction,
    pub energy: f64,
    pub residual: f64,
    pub beta_norm: f64,
    pub iterations: usize,
    pub classification: Classification,
    pub status: Status,
    pub trace: Vec<TraceEntry>,
}

impl CriticalPoint {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub(crate) fn finish(
        pb: &Problem,
        u: Vec<f64>,
        iterations: usize,
        classification: Classification,
        status: Status,
        trace: Vec<TraceEntry>,
    ) -> Result<Self> {
        let energy = pb.j(&u);
        let residual = pb.residual(&u);
        let beta_norm = pb.beta_norm(&u)?;
        Ok(CriticalPoint { u: pb.function(u)?, energy, residual, beta_norm, iterations, classification, status, trace })
    }

    /// `J′(u)(u)`, zero on the Nehari set.
    pub fn nehari(&self, pb: &Problem) -> f64 {
        pb.gradient_vector(self.u.values()).pair(self.u.values())
    }
}

pub(crate) fn trace_entry(pb: &Problem, u: &[f64], j: f64, residual: f64) -> TraceEntry {
    TraceEntry { j, residual, beta_norm: pb.beta_norm(u).unwrap_or(f64::NAN) }
}

pub(crate) fn require_regime(pb: &Problem, want: Regime) -> Result<()> {
    pb.regime.require(want)
}

/// Mountain-pass point of a superlinear spec and Ekeland minimizer of a
/// sublinear one, with the sign separation `J(u) > 0 > J(w)` checked.
///
/// The two regimes cannot hold for one spec, so they are solved separately.
pub fn two_solutions(spec_super: &ProblemSpec, spec_sub: &ProblemSpec, opts: &TwoSolutionOptions) -> Result<TwoSolutions> {
    let sup = Problem::new(spec_super)?;
    sup.regime.require(Regime::Superlinear)?;
    let sub = Problem::new(spec_sub)?;
    sub.regime.require(Regime::Sublinear)?;
    two_solutions_on(&sup, &sub, opts)
}

#[derive(Debug, Clone)]
pub struct TwoSolutionOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub n_path: usize,
    pub restarts: usize,
    pub embedding_trials: usize,
    /// `λ` of the sublinear spec as a fraction of `λ̂*`; `None` keeps the spec's value.
    pub lambda_fraction: Option<f64>,
    pub seed: u64,
}

impl Default for TwoSolutionOptions {
    fn default() -> Self {
        TwoSolutionOptions {
            tol: DEFAULT_TOL,
            max_iters: 2000,
            n_path: 21,
            restarts: 3,
            embedding_trials: 4,
            lambda_fraction: Some(0.5),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoSolutions {
    pub mountain_pass: CriticalPoint,
    pub minimizer: CriticalPoint,
    pub lambda_sub: f64,
    pub rho: f64,
    /// `J(|u|) − J(u)` for both solutions.
    pub abs_gaps: [f64; 2],
    pub separated: bool,
}

pub fn two_solutions_on(sup: &Problem, sub: &Problem, opts: &TwoSolutionOptions) -> Result<TwoSolutions> {
    let mp_opts = MountainPassOptions { n_path: opts.n_path, tol: opts.tol, max_iters: opts.max_iters, ..Default::default() };
    let e = mountain_pass::default_endpoint(sup)?;
    let mp = mountain_pass_on(sup, &e, &mp_opts)?;

    let est = estimate_embedding_on(sub, opts.embedding_trials, opts.seed)?;
    let rho = default_rho(est.inflated);
    let owned;
    let sub = match opts.lambda_fraction {
        Some(f) => {
            let ls = lambda_star(sub.regime.p_plus, sub.regime.q_minus, rho, est.inflated)?;
            owned = sub.clone().with_lambda(f * ls.lambda_star)?;
            &owned
        }
        None => sub,
    };
    let w = ekeland_on(sub, rho, opts.tol, opts.restarts, opts.max_iters, opts.seed)?;

    let gap = |pb: &Problem, c: &CriticalPoint| pb.j(c.u.abs().values()) - c.energy;
    let abs_gaps = [gap(sup, &mp), gap(sub, &w)];
    let separated = mp.energy > 0.0 && w.energy < 0.0;
    if !separated {
        return Err(Error::Numerical(format!(
            "sign separation failed: mountain-pass J = {}, minimizer J = {}",
            mp.energy, w.energy
        )));
    }
    Ok(TwoSolutions { mountain_pass: mp, minimizer: w, lambda_sub: sub.lambda(), rho, abs_gaps, separated })
}
