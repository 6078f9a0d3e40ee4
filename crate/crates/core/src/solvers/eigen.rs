use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discrete::DiscreteFunction;
use crate::error::{invalid, Error, Result};
use crate::fields::{DomainSpec, ProblemSpec};
use crate::geometry::Mesh;
use crate::linalg::{dot, BandMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DiscreteFunction,
}

/// Lowest `k` eigenpairs of `A x = θ M x` for symmetric positive definite
/// band matrices, by block inverse iteration with Rayleigh–Ritz.
///
/// Vectors are `M`-orthonormal; eigenvalues ascending. Each vector's sign is
/// fixed so that its largest-magnitude entry is positive.
pub fn generalized_eigs(a: &BandMatrix, m: &BandMatrix, k: usize, tol: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.n();
    if k == 0 {
        return Ok((vec![], vec![]));
    }
    if k > n {
        return Err(invalid(format!("{k} eigenpairs requested from a {n}-dimensional space")));
    }
    let block = (k + (k / 2).max(6)).min(n);
    let chol = a.cholesky()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<Vec<f64>> = (0..block).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut theta = vec![0.0; block];
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut last = f64::INFINITY;
    for _ in 0..5000 {
        let y: Vec<Vec<f64>> = x.iter().map(|xi| chol.solve(&m.mul_vec(xi))).collect();
        let ay: Vec<Vec<f64>> = y.iter().map(|v| a.mul_vec(v)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|v| m.mul_vec(v)).collect();
        let ar = DMatrix::from_fn(block, block, |i, j| 0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i])));
        let mr = DMatrix::from_fn(block, block, |i, j| 0.5 * (dot(&y[i], &my[j]) + dot(&y[j], &my[i])));
        let (vals, coeffs) = small_generalized(ar, mr)?;
        x = (0..block)
            .map(|c| {
                let mut v = vec![0.0; n];
                for (j, yj) in y.iter().enumerate() {
                    let w = coeffs[(j, c)];
                    v.iter_mut().zip(yj).for_each(|(a, b)| *a += w * b);
                }
                v
            })
            .collect();
        theta = vals;
        let res = (0..k)
            .map(|i| {
                let ax = a.mul_vec(&x[i]);
                let mx = m.mul_vec(&x[i]);
                ax.iter().zip(&mx).map(|(p, q)| (p - theta[i] * q).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        last = res;
        if res <= tol {
            break;
        }
        if res < 0.5 * best {
            best = res;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 50 {
                return Err(Error::Numerical(format!("eigen iteration stagnated at residual {res:e}")));
            }
        }
    }
    if last > tol {
        return Err(Error::Numerical(format!("eigen iteration stopped at residual {last:e}")));
    }
    let mut vecs: Vec<Vec<f64>> = x.into_iter().take(k).collect();
    for v in &mut vecs {
        let (imax, _) = v.iter().enumerate().fold((0, 0.0), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        if v[imax] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    theta.truncate(k);
    Ok((theta, vecs))
}

/// Solves `A c = θ M c` for small dense SPD pairs; columns of the result
/// are `M`-orthonormal.
fn small_generalized(a: DMatrix<f64>, m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let l = m.cholesky().ok_or_else(|| Error::Numerical("Ritz basis lost rank".into()))?.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Numerical("Ritz basis lost rank".into()))?;
    let c = &linv * a * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = DMatrix::from_fn(order.len(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, linv.transpose() * w))
}

/// First `k` eigenpairs of `(a·K + β·B) u = λ b·M u`: the problem with
/// `p = q = 2` and constant coefficients.
pub fn linear_robin_eigs(mesh: &Arc<Mesh>, a: f64, b: f64, beta: f64, k: usize) -> Result<Vec<EigenPair>> {
    for (name, v) in [("a", a), ("b", b), ("β", beta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(format!("{name} must be a positive constant, got {v}")));
        }
    }
    let r = mesh.rect;
    let domain = DomainSpec { x0: r.x0, y0: r.y0, x1: r.x1, y1: r.y1, nx: mesh.nx, ny: mesh.ny };
    let spec = ProblemSpec::new(domain, [&fmt(a), &fmt(b), "2", "2", &fmt(beta)], 1.0)?;
    let pb = crate::energy::Problem::on_mesh(&spec, mesh.clone())?;
    let (mut kk, bb, mm) = pb.linear_matrices();
    kk.add_scaled(1.0, &bb);
    let (vals, vecs) = generalized_eigs(&kk, &mm, k, 1e-11)?;
    vals.into_iter()
        .zip(vecs)
        .map(|(value, v)| Ok(EigenPair { value, vector: DiscreteFunction::new(mesh.clone(), v)? }))
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// `n`-th positive root (`n ≥ 1`) of the one-dimensional Robin condition on
/// an interval of length `len`: `tan(μ·len) = 2μκ/(μ² − κ²)`, `κ = β/a`.
///
/// Uses the pole-free form `(μ² − κ²) sin(μ len) − 2μκ cos(μ len) = 0`.
pub fn robin_root_1d(kappa: f64, len: f64, n: usize) -> Result<f64> {
    if !(kappa > 0.0 && len > 0.0) || n == 0 {
        return Err(invalid("robin_root_1d needs κ > 0, len > 0, n ≥ 1"));
    }
    let f = |mu: f64| (mu * mu - kappa * kappa) * (mu * len).sin() - 2.0 * mu * kappa * (mu * len).cos();
    // exactly one root in each ((j−1)π/len, jπ/len)
    let pi = std::f64::consts::PI / len;
    let (mut lo, mut hi) = ((n as f64 - 1.0).max(1e-9) * pi, n as f64 * pi);
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo * fhi > 0.0 {
        return Err(Error::Numerical("Robin root not bracketed".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact first eigenvalue `(a/b)(μ_x² + μ_y²)` of the continuous problem on
/// a rectangle with constant coefficients.
pub fn rectangle_robin_eigenvalue(width: f64, height: f64, a: f64, b: f64, beta: f64) -> Result<f64> {
    let kappa = beta / a;
    let mx = robin_root_1d(kappa, width, 1)?;
    let my = robin_root_1d(kappa, height, 1)?;
    Ok(a / b * (mx * mx + my * my))
}
