use crate::discrete::DiscreteFunction;
use crate::energy::Problem;
use crate::error::Result;
use crate::fields::ProblemSpec;
use crate::linalg::{axpy, dot};

use super::{trace_entry, Classification, CriticalPoint, Status, TraceEntry};

#[derive(Debug, Clone)]
pub struct DescentOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub initial_step: f64,
    pub backtrack: f64,
    pub armijo: f64,
    /// After an accepted step `t` the next trial starts at `growth·t`.
    pub growth: f64,
    pub max_step: f64,
    /// Iterates with a nodal value beyond this are declared divergent.
    pub divergence_bound: f64,
    /// Also try the minimizer of the quadratic through `f(0)`, `f′(0)` and
    /// the accepted trial, keeping whichever is lower.
    pub interpolate: bool,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            tol: super::DEFAULT_TOL,
            max_iters: 2000,
            initial_step: 1.0,
            backtrack: 0.5,
            armijo: 1e-4,
            growth: 2.0,
            max_step: 1e8,
            divergence_bound: 1e8,
            interpolate: true,
        }
    }
}

/// A direction rule: given `(u, ∇f(u))` return a descent direction `d`
/// (`∇f·d < 0` unless stationary) and the stationarity measure.
pub(crate) type DirectionFn<'a> = dyn Fn(&[f64], &[f64]) -> Result<(Vec<f64>, f64)> + 'a;
pub(crate) type RetractFn<'a> = dyn Fn(Vec<f64>) -> Result<Vec<f64>> + 'a;

pub(crate) struct Objective<'a> {
    pub value: &'a dyn Fn(&[f64]) -> Result<f64>,
    pub gradient: &'a dyn Fn(&[f64]) -> Result<Vec<f64>>,
}

pub(crate) struct RunResult {
    pub u: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub status: Status,
}

/// Armijo backtracking on a (possibly retracted) direction rule.
///
/// Accepted steps never increase the objective.
pub(crate) fn armijo(
    obj: &Objective,
    direction: &DirectionFn,
    retract: &RetractFn,
    u0: Vec<f64>,
    opts: &DescentOptions,
    on_iter: &mut dyn FnMut(&[f64], f64, f64),
) -> Result<RunResult> {
    let mut u = u0;
    let mut f = (obj.value)(&u)?;
    let mut step = opts.initial_step;
    let mut iterations = 0;
    loop {
        let g = (obj.gradient)(&u)?;
        let (d, measure) = direction(&u, &g)?;
        on_iter(&u, f, measure);
        if measure <= opts.tol {
            return Ok(RunResult { u, value: f, iterations, status: Status::Converged });
        }
        if iterations >= opts.max_iters {
            return Ok(RunResult { u, value: f, iterations, status: Status::IterationCap });
        }
        let slope = dot(&g, &d);
        if !(slope < 0.0) {
            return Ok(RunResult { u, value: f, iterations, status: Status::Stalled });
        }
        let mut t = step;
        let mut accepted = None;
        while t > 1e-20 * opts.initial_step {
            let trial = retract(axpy(&u, t, &d))?;
            let ft = (obj.value)(&trial)?;
            if ft <= f + opts.armijo * t * slope && ft.is_finite() {
                accepted = Some((trial, ft));
                break;
            }
            t *= opts.backtrack;
        }
        if let Some((_, ft)) = &accepted {
            let curvature = *ft - f - t * slope;
            let tq = -slope * t * t / (2.0 * curvature);
            if opts.interpolate && curvature > 0.0 && tq < 0.9 * t && tq > 1e-3 * t {
                let trial = retract(axpy(&u, tq, &d))?;
                let fq = (obj.value)(&trial)?;
                if fq < *ft {
                    accepted = Some((trial, fq));
                }
            }
        }
        iterations += 1;
        let Some((next, fn_)) = accepted else {
            return Ok(RunResult { u, value: f, iterations, status: Status::Stalled });
        };
        u = next;
        f = fn_;
        step = (t * opts.growth).min(opts.max_step);
        if u.iter().any(|v| v.abs() > opts.divergence_bound) || f < -1e30 {
            return Ok(RunResult { u, value: f, iterations, status: Status::Diverged });
        }
    }
}

/// Sobolev-gradient direction `−P⁻¹g` with the residual as measure.
pub(crate) fn sobolev_direction<'a>(pb: &'a Problem) -> impl Fn(&[f64], &[f64]) -> Result<(Vec<f64>, f64)> + 'a {
    move |_u, g| {
        let pre = pb.preconditioner()?;
        let d: Vec<f64> = pre.solve(g).iter().map(|v| -v).collect();
        Ok((d, pb.dual_norm(g)))
    }
}

pub(crate) fn energy_objective(pb: &Problem) -> (impl Fn(&[f64]) -> Result<f64> + '_, impl Fn(&[f64]) -> Result<Vec<f64>> + '_) {
    (move |u: &[f64]| Ok(pb.j(u)), move |u: &[f64]| Ok(pb.gradient(u)))
}

/// Preconditioned steepest descent on `J_λ` from `u0`.
pub fn descent_on(pb: &Problem, u0: &[f64], opts: &DescentOptions) -> Result<CriticalPoint> {
    let (value, gradient) = energy_objective(pb);
    let obj = Objective { value: &value, gradient: &gradient };
    let dir = sobolev_direction(pb);
    let mut trace: Vec<TraceEntry> = Vec::new();
    let run = armijo(&obj, &dir, &|u| Ok(u), u0.to_vec(), opts, &mut |u, j, r| trace.push(trace_entry(pb, u, j, r)))?;
    CriticalPoint::finish(pb, run.u, run.iterations, Classification::Descent, run.status, trace)
}

/// Armijo gradient descent on `J_λ` (Sobolev-preconditioned) until the
/// residual drops below `tol` or `max_iters` steps were taken.
pub fn descent_minimize(spec: &ProblemSpec, u0: &DiscreteFunction, tol: f64, max_iters: usize) -> Result<CriticalPoint> {
    let pb = Problem::on_mesh(spec, u0.mesh().clone())?;
    descent_on(&pb, u0.values(), &DescentOptions { tol, max_iters, ..Default::default() })
}
