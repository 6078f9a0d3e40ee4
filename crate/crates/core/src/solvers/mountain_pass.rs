use crate::discrete::DiscreteFunction;
use crate::energy::Problem;
use crate::error::{invalid, Error, Result};
use crate::fields::{ProblemSpec, Regime};
use crate::linalg::{axpy, dot, BandMatrix};

use super::embedding::surrogate_modes;
use super::newton::{newton_polish, Deflation};
use super::{require_regime, trace_entry, Classification, CriticalPoint, Status, TraceEntry};

#[derive(Debug, Clone)]
pub struct MountainPassOptions {
    pub n_path: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Climbing-image residual below which Newton is attempted; divided by
    /// ten after each failed attempt.
    pub newton_switch: f64,
    pub newton_iters: usize,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        MountainPassOptions { n_path: 21, tol: super::DEFAULT_TOL, max_iters: 2000, newton_switch: 1e-2, newton_iters: 30 }
    }
}

/// Scales `dir` by powers of two until `J_λ` is negative there.
pub(crate) fn endpoint_along(pb: &Problem, dir: &[f64]) -> Result<Vec<f64>> {
    let n = pb.beta_norm(dir)?;
    if n == 0.0 {
        return Err(invalid("endpoint direction is zero"));
    }
    let mut t = 1.0 / n;
    for _ in 0..80 {
        let e: Vec<f64> = dir.iter().map(|v| t * v).collect();
        if pb.j(&e) < 0.0 {
            return Ok(e);
        }
        t *= 2.0;
    }
    Err(Error::Geometry("J stays nonnegative along the endpoint ray".into()))
}

/// `t·e₁` with `J(t·e₁) < 0`, `e₁` the first `p = 2` surrogate mode.
pub fn default_endpoint(pb: &Problem) -> Result<Vec<f64>> {
    let (_, modes, _) = surrogate_modes(pb, 1)?;
    endpoint_along(pb, &modes[0])
}

/// Maximizer of `J` on the segment `[0, e]`.
pub(crate) fn ray_maximum(pb: &Problem, e: &[f64]) -> Vec<f64> {
    let half: Vec<f64> = e.iter().map(|v| 0.5 * v).collect();
    maximize_on_line(pb, &half, &half)
}

fn sobolev_sq(p: &BandMatrix, v: &[f64]) -> f64 {
    dot(v, &p.mul_vec(v))
}

/// Moves `points[lo..=hi]` to equal Sobolev arclength along the polyline,
/// keeping both ends.
fn reparametrize(p: &BandMatrix, points: &mut [Vec<f64>], lo: usize, hi: usize) {
    if hi <= lo + 1 {
        return;
    }
    let seg: Vec<f64> = (lo..hi)
        .map(|i| {
            let d: Vec<f64> = points[i + 1].iter().zip(&points[i]).map(|(a, b)| a - b).collect();
            sobolev_sq(p, &d).sqrt()
        })
        .collect();
    let total: f64 = seg.iter().sum();
    if !(total > 0.0) {
        return;
    }
    let old: Vec<Vec<f64>> = points[lo..=hi].to_vec();
    let m = hi - lo;
    let mut acc = 0.0;
    let mut j = 0;
    for k in 1..m {
        let target = total * k as f64 / m as f64;
        while j < seg.len() - 1 && acc + seg[j] < target {
            acc += seg[j];
            j += 1;
        }
        let s = if seg[j] > 0.0 { ((target - acc) / seg[j]).clamp(0.0, 1.0) } else { 0.0 };
        points[lo + k] = old[j].iter().zip(&old[j + 1]).map(|(a, b)| a + s * (b - a)).collect();
    }
}

/// Golden-section maximization of `J` on `c + s·d`, `s ∈ [−1, 1]`.
fn maximize_on_line(pb: &Problem, c: &[f64], d: &[f64]) -> Vec<f64> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let f = |s: f64| pb.j(&axpy(c, s, d));
    let (mut a, mut b) = (-1.0, 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..40 {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    let s = 0.5 * (a + b);
    if f(s) > pb.j(c) {
        axpy(c, s, d)
    } else {
        c.to_vec()
    }
}

/// One Armijo step on `J` along `−(G − cτ)`, the Sobolev gradient with its
/// component along the unit tangent `τ` removed, no longer than `max_len`.
/// Returns the new point and the next trial step.
fn perpendicular_step(pb: &Problem, pmat: &BandMatrix, u: &[f64], tau: &[f64], step: f64, max_len: f64) -> Result<(Vec<f64>, f64)> {
    let g = pb.gradient(u);
    let big_g = pb.preconditioner()?.solve(&g);
    let c = dot(&g, tau);
    let d: Vec<f64> = big_g.iter().zip(tau).map(|(a, t)| -(a - c * t)).collect();
    let slope = dot(&g, &d);
    if !(slope < 0.0) {
        return Ok((u.to_vec(), step));
    }
    let j0 = pb.j(u);
    let mut t = step.min(max_len / sobolev_sq(pmat, &d).sqrt());
    while t > 1e-12 {
        let trial = axpy(u, t, &d);
        if pb.j(&trial) <= j0 + 1e-4 * t * slope {
            return Ok((trial, (2.0 * t).min(1e3)));
        }
        t *= 0.5;
    }
    Ok((u.to_vec(), t))
}

/// Mountain-pass critical point between `0` and the endpoint `e`, found by
/// deforming a discrete path of `n_path` points and polishing the climbing
/// image with Newton's method.
pub fn mountain_pass_on(pb: &Problem, e: &[f64], opts: &MountainPassOptions) -> Result<CriticalPoint> {
    mountain_pass_deflated(pb, e, opts, None)
}

pub(crate) fn mountain_pass_deflated(
    pb: &Problem,
    e: &[f64],
    opts: &MountainPassOptions,
    deflation: Option<&Deflation>,
) -> Result<CriticalPoint> {
    require_regime(pb, Regime::Superlinear)?;
    if opts.n_path < 3 {
        return Err(invalid(format!("a mountain-pass path needs at least 3 points, got {}", opts.n_path)));
    }
    let e = if pb.j(e) < 0.0 { e.to_vec() } else { endpoint_along(pb, e)? };
    let n = opts.n_path;
    let pmat = pb.sobolev_matrix();
    let mut path: Vec<Vec<f64>> = (0..n).map(|i| e.iter().map(|v| v * i as f64 / (n - 1) as f64).collect()).collect();
    let mut steps = vec![1.0; n];
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut switch = opts.newton_switch;
    let mut last = None;

    for iter in 0..opts.max_iters {
        let energies: Vec<f64> = path.iter().map(|u| pb.j(u)).collect();
        let imax = (0..n).fold(0, |b, i| if energies[i] > energies[b] { i } else { b });
        if imax == 0 || imax == n - 1 {
            return Err(Error::Geometry(format!(
                "path maximum collapsed onto an endpoint (J = {}); the mountain-pass geometry fails",
                energies[imax]
            )));
        }
        // refine the climbing image along the path
        let half: Vec<f64> = path[imax + 1].iter().zip(&path[imax - 1]).map(|(a, b)| 0.5 * (a - b)).collect();
        path[imax] = maximize_on_line(pb, &path[imax], &half);

        let climb = path[imax].clone();
        let r = pb.residual(&climb);
        trace.push(trace_entry(pb, &climb, pb.j(&climb), r));
        if r <= switch {
            let out = newton_polish(pb, &climb, opts.tol, opts.newton_iters, deflation)?;
            let nontrivial = pb.beta_norm(&out.u)? > 1e-3 * pb.beta_norm(&climb)?;
            if out.converged && nontrivial && pb.j(&out.u) > 0.0 {
                trace.extend_from_slice(&out.history[1..]);
                let class = if deflation.is_some() { Classification::Deflated } else { Classification::MountainPass };
                return CriticalPoint::finish(pb, out.u, iter + out.iterations, class, Status::Converged, trace);
            }
            switch *= 0.1;
        }
        last = Some(climb);

        let spacing = (0..n - 1)
            .map(|i| {
                let d: Vec<f64> = path[i + 1].iter().zip(&path[i]).map(|(a, b)| a - b).collect();
                sobolev_sq(pmat, &d).sqrt()
            })
            .sum::<f64>()
            / (n - 1) as f64;
        // the downhill side stays on the chord to `e`; J is unbounded below
        for i in 1..=imax {
            let mut tau: Vec<f64> = path[i + 1].iter().zip(&path[i - 1]).map(|(a, b)| a - b).collect();
            let tn = sobolev_sq(pmat, &tau).sqrt();
            if tn == 0.0 {
                continue;
            }
            tau.iter_mut().for_each(|t| *t /= tn);
            let (next, step) = perpendicular_step(pb, pmat, &path[i], &tau, steps[i], spacing)?;
            path[i] = next;
            steps[i] = step;
        }
        reparametrize(pmat, &mut path, 0, imax);
        for k in imax + 1..n - 1 {
            let s = (k - imax) as f64 / (n - 1 - imax) as f64;
            path[k] = path[imax].iter().zip(&e).map(|(a, b)| a + s * (b - a)).collect();
        }
    }
    let u = last.unwrap_or_else(|| path[n / 2].clone());
    CriticalPoint::finish(pb, u, opts.max_iters, Classification::MountainPass, Status::IterationCap, trace)
}

/// Mountain-pass solution of a superlinear spec from endpoint direction `e`.
pub fn mountain_pass(spec: &ProblemSpec, e: &DiscreteFunction, n_path: usize, tol: f64, max_iters: usize) -> Result<CriticalPoint> {
    let pb = Problem::on_mesh(spec, e.mesh().clone())?;
    mountain_pass_on(&pb, e.values(), &MountainPassOptions { n_path, tol, max_iters, ..Default::default() })
}
