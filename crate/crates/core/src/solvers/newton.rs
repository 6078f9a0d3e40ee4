use crate::energy::Problem;
use crate::error::Result;
use crate::linalg::{axpy, dot};

use super::{trace_entry, TraceEntry};

/// Multiplicative deflation `m(u) = Π_i (‖u − u_i‖⁻² + σ)(‖u + u_i‖⁻² + σ)`
/// removing the known solutions `±u_i` from Newton's basin map. Distances
/// use the lumped mass.
#[derive(Debug, Clone)]
pub struct Deflation {
    pub known: Vec<Vec<f64>>,
    pub shift: f64,
}

impl Deflation {
    pub fn new(known: Vec<Vec<f64>>) -> Self {
        Deflation { known, shift: 1.0 }
    }

    /// `m(u)` and `∇m(u)`.
    fn eval(&self, u: &[f64], mass: &[f64]) -> (f64, Vec<f64>) {
        let mut m = 1.0;
        // ∇ log m
        let mut glog = vec![0.0; u.len()];
        for k in &self.known {
            for sign in [-1.0, 1.0] {
                let diff: Vec<f64> = u.iter().zip(k).map(|(a, b)| a + sign * b).collect();
                let d2: f64 = diff.iter().zip(mass).map(|(d, w)| w * d * d).sum();
                let f = 1.0 / d2 + self.shift;
                m *= f;
                // d/du (1/d2) = −2 M diff / d2²
                let c = -2.0 / (d2 * d2) / f;
                for ((g, d), w) in glog.iter_mut().zip(&diff).zip(mass) {
                    *g += c * w * d;
                }
            }
        }
        let grad = glog.iter().map(|g| g * m).collect();
        (m, grad)
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// One entry per iterate, starting with `u0`.
    pub history: Vec<TraceEntry>,
}

/// Damped Newton iteration on `J′_λ(u) = 0` with a banded LU solve; the
/// damping is a backtracking search on the (deflated) residual.
pub fn newton_polish(pb: &Problem, u0: &[f64], tol: f64, max_iters: usize, deflation: Option<&Deflation>) -> Result<NewtonOutcome> {
    let mass = pb.lumped_mass().clone();
    let merit = |u: &[f64], r: f64| match deflation {
        Some(d) => d.eval(u, &mass).0 * r,
        None => r,
    };
    let mut u = u0.to_vec();
    let mut g = pb.gradient(&u);
    let mut r = pb.dual_norm(&g);
    let mut history = vec![trace_entry(pb, &u, pb.j(&u), r)];
    let mut iterations = 0;
    while r > tol && iterations < max_iters {
        let lu = match pb.hessian(&u).lu() {
            Ok(lu) => lu,
            Err(_) => break,
        };
        let mut d: Vec<f64> = lu.solve(&g).iter().map(|v| -v).collect();
        if d.iter().any(|v| !v.is_finite()) {
            break;
        }
        if let Some(defl) = deflation {
            let (m, gm) = defl.eval(&u, &mass);
            let denom = 1.0 - dot(&gm, &d) / m;
            if denom.abs() > 1e-14 {
                d.iter_mut().for_each(|v| *v /= denom);
            }
        }
        let current = merit(&u, r);
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1.0 / 1024.0 {
            let trial = axpy(&u, t, &d);
            let gt = pb.gradient(&trial);
            let rt = pb.dual_norm(&gt);
            if rt.is_finite() && merit(&trial, rt) < (1.0 - 1e-4 * t) * current {
                accepted = Some((trial, gt, rt));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((nu, ng, nr)) = accepted else { break };
        u = nu;
        g = ng;
        r = nr;
        history.push(trace_entry(pb, &u, pb.j(&u), r));
    }
    Ok(NewtonOutcome { converged: r <= tol, u, residual: r, iterations, history })
}
