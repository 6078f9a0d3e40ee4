//! Variable-exponent modulars and their Luxemburg norms.
//!
//! Every modular in this crate is a finite weighted sum over quadrature
//! points,
//!
//! ```text
//! ϱ(u) = Σ_i W_i |v_i(u)|^{p_i}
//! ```
//!
//! where `v_i` is either the value of `u` at a volume or boundary point or the
//! magnitude of its (element-constant) gradient, `p_i` the exponent sampled at
//! that point and `W_i` the quadrature weight times the weight field. The
//! Luxemburg norm `‖u‖ = inf{τ > 0 : ϱ(u/τ) ≤ 1}` is then the root of the
//! strictly decreasing map `τ ↦ ϱ(u/τ)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discrete::{DiscreteFunction, Quadrature};
use crate::error::{invalid, Error, Result};
use crate::fields::FieldExpr;

/// `|v|^p` computed as `exp(p·ln|v|)`, with `0^p = 0`.
#[inline]
pub fn abs_pow(v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        (p * v.abs().ln()).exp()
    }
}

/// Where a modular samples its argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Carrier {
    /// `∫_Ω |u|^p w dx`
    Volume,
    /// `∫_∂Ω |u|^p w dσ`
    Boundary,
    /// `∫_Ω |∇u|^p w dx`
    Gradient,
}

/// The map `τ ↦ ϱ(u/τ)` for one fixed `u`.
///
/// Stored as `(W_i, ln|v_i|, p_i)` triples; points where `v_i = 0` contribute
/// nothing and are dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModularClosure {
    weights: Vec<f64>,
    log_abs: Vec<f64>,
    exponents: Vec<f64>,
}

impl ModularClosure {
    pub fn from_points(weights: &[f64], values: &[f64], exponents: &[f64]) -> Self {
        let mut m = ModularClosure::default();
        m.extend_points(weights, values, exponents);
        m
    }

    fn extend_points(&mut self, weights: &[f64], values: &[f64], exponents: &[f64]) {
        for ((&w, &v), &p) in weights.iter().zip(values).zip(exponents) {
            if v != 0.0 && w != 0.0 {
                self.weights.push(w);
                self.log_abs.push(v.abs().ln());
                self.exponents.push(p);
            }
        }
    }

    /// Pointwise sum of two modulars.
    pub fn sum(mut self, other: &ModularClosure) -> Self {
        self.weights.extend_from_slice(&other.weights);
        self.log_abs.extend_from_slice(&other.log_abs);
        self.exponents.extend_from_slice(&other.exponents);
        self
    }

    /// True when the underlying function vanishes at every sample.
    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    /// `ϱ(u/τ)`.
    pub fn eval(&self, tau: f64) -> f64 {
        self.eval_log(tau.ln())
    }

    /// `ϱ(u)`.
    pub fn modular(&self) -> f64 {
        self.eval_log(0.0)
    }

    fn eval_log(&self, s: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.log_abs)
            .zip(&self.exponents)
            .map(|((w, l), p)| w * (p * (l - s)).exp())
            .sum()
    }

    /// `ϱ(u/e^s)` and its derivative in `s`.
    fn eval_log_with_slope(&self, s: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for ((w, l), p) in self.weights.iter().zip(&self.log_abs).zip(&self.exponents) {
            let t = w * (p * (l - s)).exp();
            f += t;
            df -= p * t;
        }
        (f, df)
    }

    pub fn exponent_range(&self) -> Option<(f64, f64)> {
        let lo = self.exponents.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }
}

/// Relative tolerance on the Luxemburg norm.
pub const NORM_RTOL: f64 = 1e-12;
const MAX_REFINE_STEPS: usize = 200;
const MAX_BRACKET_STEPS: usize = 4000;

/// Luxemburg norm of the closure's function.
///
/// The root of `s ↦ ϱ(u/e^s) − 1` is bracketed by doubling `τ = e^s`, then
/// refined inside the bracket. The map is convex and decreasing in `s`, so a
/// Newton step taken from the left end never leaves the bracket; any step
/// that would is replaced by bisection.
pub fn luxemburg_norm(m: &ModularClosure) -> Result<f64> {
    if m.is_zero() {
        return Ok(0.0);
    }
    let p0 = m.exponents[0];
    if m.exponents.iter().all(|&p| p == p0) {
        // ϱ(u/τ) = τ^{−p}ϱ(u)
        let top = m.log_abs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let s: f64 = m.weights.iter().zip(&m.log_abs).map(|(w, l)| w * (p0 * (l - top)).exp()).sum();
        return Ok((top + s.ln() / p0).exp());
    }
    let ln2 = std::f64::consts::LN_2;
    let f0 = m.eval_log(0.0) - 1.0;
    if f0 == 0.0 {
        return Ok(1.0);
    }
    // f(lo) > 0 > f(hi)
    let (mut lo, mut hi);
    if f0 > 0.0 {
        lo = 0.0;
        hi = ln2;
        let mut k = 0;
        while m.eval_log(hi) > 1.0 {
            lo = hi;
            hi += ln2;
            k += 1;
            if k > MAX_BRACKET_STEPS {
                return Err(Error::Numerical("Luxemburg bracket did not close".into()));
            }
        }
    } else {
        hi = 0.0;
        lo = -ln2;
        let mut k = 0;
        while m.eval_log(lo) < 1.0 {
            hi = lo;
            lo -= ln2;
            k += 1;
            if k > MAX_BRACKET_STEPS {
                return Err(Error::Numerical("Luxemburg bracket did not close".into()));
            }
        }
    }

    let mut x = lo;
    for _ in 0..MAX_REFINE_STEPS {
        let (f, df) = m.eval_log_with_slope(x);
        let g = f - 1.0;
        if g == 0.0 {
            return Ok(x.exp());
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - g / df;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= NORM_RTOL * 0.1 || hi - lo <= NORM_RTOL * 0.1 {
            return Ok(next.exp());
        }
        x = next;
    }
    Err(Error::Numerical("Luxemburg refinement did not converge in 200 steps".into()))
}

/// One modular term sampled on a quadrature: weights `W_i` and exponents `p_i`.
#[derive(Debug, Clone)]
pub struct SampledModular {
    pub carrier: Carrier,
    pub weights: Vec<f64>,
    pub exponents: Vec<f64>,
}

impl SampledModular {
    pub fn new(quad: &Quadrature, carrier: Carrier, p: &FieldExpr, w: &FieldExpr) -> Result<Self> {
        let (ps, ws) = match carrier {
            Carrier::Volume | Carrier::Gradient => (quad.sample_volume(p)?, quad.sample_volume(w)?),
            Carrier::Boundary => (quad.sample_boundary(p)?, quad.sample_boundary(w)?),
        };
        Ok(Self::from_samples(quad, carrier, ps, &ws))
    }

    /// `p_samples` and `w_samples` are values at the carrier's quadrature points.
    pub fn from_samples(quad: &Quadrature, carrier: Carrier, p_samples: Vec<f64>, w_samples: &[f64]) -> Self {
        let qw = match carrier {
            Carrier::Volume | Carrier::Gradient => &quad.vol_weights,
            Carrier::Boundary => &quad.edge_weights,
        };
        let weights = qw.iter().zip(w_samples).map(|(a, b)| a * b).collect();
        SampledModular { carrier, weights, exponents: p_samples }
    }

    /// `|v_i(u)|` at every sample.
    pub fn magnitudes(&self, quad: &Quadrature, u: &[f64]) -> Vec<f64> {
        match self.carrier {
            Carrier::Volume => quad.volume_values(u),
            Carrier::Boundary => quad.boundary_values(u),
            Carrier::Gradient => {
                let nq = quad.n_tri_pts();
                let g = quad.element_gradients(u);
                let mut out = Vec::with_capacity(g.len() * nq);
                for d in g {
                    let m = d[0].hypot(d[1]);
                    out.extend(std::iter::repeat_n(m, nq));
                }
                out
            }
        }
    }

    pub fn closure(&self, quad: &Quadrature, u: &[f64]) -> ModularClosure {
        ModularClosure::from_points(&self.weights, &self.magnitudes(quad, u), &self.exponents)
    }

    pub fn value(&self, quad: &Quadrature, u: &[f64]) -> f64 {
        self.magnitudes(quad, u)
            .iter()
            .zip(&self.weights)
            .zip(&self.exponents)
            .map(|((v, w), p)| w * abs_pow(*v, *p))
            .sum()
    }

    /// Adds `∂ϱ/∂u_j` into `out`.
    pub fn add_derivative(&self, quad: &Quadrature, u: &[f64], out: &mut [f64]) {
        match self.carrier {
            Carrier::Volume | Carrier::Boundary => {
                let vals = match self.carrier {
                    Carrier::Volume => quad.volume_values(u),
                    _ => quad.boundary_values(u),
                };
                let coef: Vec<f64> = vals
                    .iter()
                    .zip(&self.weights)
                    .zip(&self.exponents)
                    .map(|((&v, &w), &p)| w * p * abs_pow(v, p - 1.0) * v.signum())
                    .collect();
                if self.carrier == Carrier::Volume {
                    quad.scatter_volume(&coef, out);
                } else {
                    quad.scatter_boundary(&coef, out);
                }
            }
            Carrier::Gradient => {
                let nq = quad.n_tri_pts();
                let flux: Vec<[f64; 2]> = quad
                    .element_gradients(u)
                    .iter()
                    .enumerate()
                    .map(|(t, d)| {
                        let m = d[0].hypot(d[1]);
                        let mut c = 0.0;
                        if m > 0.0 {
                            for k in 0..nq {
                                let i = t * nq + k;
                                c += self.weights[i] * self.exponents[i] * abs_pow(m, self.exponents[i] - 2.0);
                            }
                        }
                        [c * d[0], c * d[1]]
                    })
                    .collect();
                quad.scatter_gradient(&flux, out);
            }
        }
    }
}

/// A sum of sampled modulars, e.g. the gradient-plus-boundary Robin modular.
#[derive(Debug, Clone)]
pub struct CompositeModular {
    pub terms: Vec<SampledModular>,
}

impl CompositeModular {
    pub fn new(terms: Vec<SampledModular>) -> Self {
        CompositeModular { terms }
    }

    pub fn closure(&self, quad: &Quadrature, u: &[f64]) -> ModularClosure {
        self.terms
            .iter()
            .fold(ModularClosure::default(), |acc, t| acc.sum(&t.closure(quad, u)))
    }

    pub fn value(&self, quad: &Quadrature, u: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(quad, u)).sum()
    }

    pub fn norm(&self, quad: &Quadrature, u: &[f64]) -> Result<f64> {
        luxemburg_norm(&self.closure(quad, u))
    }

    /// The norm and its gradient with respect to the nodal values.
    ///
    /// With `w = u/‖u‖`, implicit differentiation of `ϱ(u/τ) = 1` gives
    /// `∂τ/∂u_j = ∂_jϱ(w) / Σ_i W_i p_i |v_i(w)|^{p_i}`.
    pub fn norm_with_gradient(&self, quad: &Quadrature, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let tau = self.norm(quad, u)?;
        let mut grad = vec![0.0; u.len()];
        if tau == 0.0 {
            return Ok((0.0, grad));
        }
        let w: Vec<f64> = u.iter().map(|v| v / tau).collect();
        let mut denom = 0.0;
        for t in &self.terms {
            t.add_derivative(quad, &w, &mut grad);
            denom += t
                .magnitudes(quad, &w)
                .iter()
                .zip(&t.weights)
                .zip(&t.exponents)
                .map(|((v, wt), p)| wt * p * abs_pow(*v, *p))
                .sum::<f64>();
        }
        if !(denom > 0.0) {
            return Err(Error::Numerical("degenerate modular derivative".into()));
        }
        grad.iter_mut().for_each(|g| *g /= denom);
        Ok((tau, grad))
    }
}

fn quad_for(u: &DiscreteFunction) -> Result<Quadrature> {
    Quadrature::new(Arc::clone(u.mesh()))
}

fn single(u: &DiscreteFunction, carrier: Carrier, p: &FieldExpr, w: &FieldExpr) -> Result<(Quadrature, SampledModular)> {
    let quad = quad_for(u)?;
    let m = SampledModular::new(&quad, carrier, p, w)?;
    Ok((quad, m))
}

/// `∫_Ω |u|^{p(x)} w(x) dx`.
pub fn modular_lebesgue(u: &DiscreteFunction, p: &FieldExpr, w: &FieldExpr) -> Result<f64> {
    let (quad, m) = single(u, Carrier::Volume, p, w)?;
    Ok(m.value(&quad, u.values()))
}

/// `∫_∂Ω |u|^{p(x)} w(x) dσ`.
pub fn modular_boundary(u: &DiscreteFunction, p: &FieldExpr, w: &FieldExpr) -> Result<f64> {
    let (quad, m) = single(u, Carrier::Boundary, p, w)?;
    Ok(m.value(&quad, u.values()))
}

/// `∫_Ω a(x) |∇u|^{p(x)} dx`.
pub fn modular_gradient(u: &DiscreteFunction, p: &FieldExpr, a: &FieldExpr) -> Result<f64> {
    let (quad, m) = single(u, Carrier::Gradient, p, a)?;
    Ok(m.value(&quad, u.values()))
}

/// Closure of a single-carrier modular, ready for [`luxemburg_norm`].
pub fn modular_closure(u: &DiscreteFunction, carrier: Carrier, p: &FieldExpr, w: &FieldExpr) -> Result<ModularClosure> {
    let (quad, m) = single(u, carrier, p, w)?;
    Ok(m.closure(&quad, u.values()))
}

/// Outcome of one norm–modular relation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationVerdict {
    pub relation: String,
    /// False when the relation's hypothesis (e.g. `‖u‖ > 1`) does not hold.
    pub applicable: bool,
    pub holds: bool,
    pub detail: String,
}

pub const RELATION_SLACK: f64 = 1e-9;

fn le(a: f64, b: f64) -> bool {
    a <= b + RELATION_SLACK * b.abs().max(1.0)
}

/// Checks the norm–modular relations for `(norm, modular)` with exponent
/// range `[p_lo, p_hi]`: trichotomy, the two power bounds, the min/max
/// sandwich and the root sandwich.
pub fn norm_modular_relations(norm: f64, rho: f64, p_lo: f64, p_hi: f64) -> Vec<RelationVerdict> {
    let mut out = Vec::with_capacity(5);
    let side = |x: f64| if (x - 1.0).abs() <= RELATION_SLACK { 0 } else if x < 1.0 { -1 } else { 1 };
    let (sn, sr) = (side(norm), side(rho));
    out.push(RelationVerdict {
        relation: "trichotomy: ‖u‖ <,=,> 1 iff ϱ(u) <,=,> 1".into(),
        applicable: true,
        holds: sn == sr || (norm - 1.0).abs() <= RELATION_SLACK * p_hi.max(1.0) || (rho - 1.0).abs() <= RELATION_SLACK * p_hi.max(1.0),
        detail: format!("‖u‖={norm:e}, ϱ(u)={rho:e}"),
    });
    let lo_pow = norm.powf(p_lo);
    let hi_pow = norm.powf(p_hi);
    out.push(RelationVerdict {
        relation: "‖u‖ > 1: ‖u‖^{p⁻} ≤ ϱ(u) ≤ ‖u‖^{p⁺}".into(),
        applicable: norm > 1.0,
        holds: norm <= 1.0 || (le(lo_pow, rho) && le(rho, hi_pow)),
        detail: format!("{lo_pow:e} ≤ {rho:e} ≤ {hi_pow:e}"),
    });
    out.push(RelationVerdict {
        relation: "‖u‖ < 1: ‖u‖^{p⁺} ≤ ϱ(u) ≤ ‖u‖^{p⁻}".into(),
        applicable: norm < 1.0,
        holds: norm >= 1.0 || (le(hi_pow, rho) && le(rho, lo_pow)),
        detail: format!("{hi_pow:e} ≤ {rho:e} ≤ {lo_pow:e}"),
    });
    let (mn, mx) = (lo_pow.min(hi_pow), lo_pow.max(hi_pow));
    out.push(RelationVerdict {
        relation: "min/max sandwich: min(‖u‖^{p⁻}, ‖u‖^{p⁺}) ≤ ϱ(u) ≤ max(…)".into(),
        applicable: true,
        holds: le(mn, rho) && le(rho, mx),
        detail: format!("{mn:e} ≤ {rho:e} ≤ {mx:e}"),
    });
    let (r_lo, r_hi) = (rho.powf(1.0 / p_lo), rho.powf(1.0 / p_hi));
    let (mn, mx) = (r_lo.min(r_hi), r_lo.max(r_hi));
    out.push(RelationVerdict {
        relation: "root sandwich: min(ϱ^{1/p⁻}, ϱ^{1/p⁺}) ≤ ‖u‖ ≤ max(…)".into(),
        applicable: true,
        holds: le(mn, norm) && le(norm, mx),
        detail: format!("{mn:e} ≤ {norm:e} ≤ {mx:e}"),
    });
    out
}

/// Evaluates the weighted Lebesgue norm and modular of `u` and checks the
/// relations between them.
pub fn check_modular_norm_relations(u: &DiscreteFunction, p: &FieldExpr, w: &FieldExpr) -> Result<Vec<RelationVerdict>> {
    let (quad, m) = single(u, Carrier::Volume, p, w)?;
    let closure = m.closure(&quad, u.values());
    let norm = luxemburg_norm(&closure)?;
    let rho = closure.modular();
    let (lo, hi) = range(&m.exponents)?;
    Ok(norm_modular_relations(norm, rho, lo, hi))
}

fn range(v: &[f64]) -> Result<(f64, f64)> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo <= hi {
        Ok((lo, hi))
    } else {
        Err(invalid("empty exponent sample"))
    }
}

/// Both sides of the variable-exponent Hölder bound used for the source
/// pairing:
///
/// `|∫ b|u|^{q−2}u v| ≤ 2 ‖ |u|^{q−1} b^{1/r} ‖_{r(·)} ‖ v b^{1/q} ‖_{q(·)}`,
/// `1/q + 1/r = 1`, both norms unweighted.
pub fn holder_pairing_bound(u: &DiscreteFunction, v: &DiscreteFunction, q: &FieldExpr, b: &FieldExpr) -> Result<(f64, f64)> {
    if !u.on_mesh(v.mesh()) {
        return Err(invalid("u and v live on different meshes"));
    }
    let quad = quad_for(u)?;
    let qs = quad.sample_volume(q)?;
    if let Some(bad) = qs.iter().find(|&&x| x <= 1.0) {
        return Err(invalid(format!("Hölder pairing needs q > 1, found {bad}")));
    }
    let bs = quad.sample_volume(b)?;
    let us = quad.volume_values(u.values());
    let vs = quad.volume_values(v.values());
    let mut lhs = 0.0;
    let mut f = Vec::with_capacity(us.len());
    let mut g = Vec::with_capacity(us.len());
    let mut r = Vec::with_capacity(us.len());
    for i in 0..us.len() {
        let (qi, bi) = (qs[i], bs[i]);
        let ri = qi / (qi - 1.0);
        lhs += quad.vol_weights[i] * bi * abs_pow(us[i], qi - 1.0) * us[i].signum() * vs[i];
        f.push(abs_pow(us[i], qi - 1.0) * bi.powf(1.0 / ri));
        g.push(vs[i].abs() * bi.powf(1.0 / qi));
        r.push(ri);
    }
    let nf = luxemburg_norm(&ModularClosure::from_points(&quad.vol_weights, &f, &r))?;
    let ng = luxemburg_norm(&ModularClosure::from_points(&quad.vol_weights, &g, &qs))?;
    Ok((lhs.abs(), 2.0 * nf * ng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::parse_field;
    use crate::geometry::build_rect_mesh;

    fn mesh(n: usize) -> Arc<crate::geometry::Mesh> {
        Arc::new(build_rect_mesh(0.0, 0.0, 1.0, 1.0, n, n).unwrap())
    }

    fn f(s: &str) -> FieldExpr {
        parse_field(s).unwrap()
    }

    fn constant(m: &Arc<crate::geometry::Mesh>, c: f64) -> DiscreteFunction {
        DiscreteFunction::interpolate(m.clone(), |_, _| c).unwrap()
    }

    #[test]
    fn lebesgue_constants() {
        let m = mesh(4);
        assert!((modular_lebesgue(&constant(&m, 1.0), &f("2"), &f("1")).unwrap() - 1.0).abs() < 1e-14);
        assert!((modular_lebesgue(&constant(&m, 2.0), &f("3"), &f("1")).unwrap() - 8.0).abs() < 1e-13);
    }

    #[test]
    fn lebesgue_variable_exponent() {
        let m = mesh(32);
        let v = modular_lebesgue(&constant(&m, 2.0), &f("2 + x"), &f("1")).unwrap();
        assert!((v - 4.0 / 2f64.ln()).abs() < 1e-4, "{v}");
    }

    #[test]
    fn boundary_values() {
        let m = mesh(4);
        assert!((modular_boundary(&constant(&m, 1.0), &f("2"), &f("1")).unwrap() - 4.0).abs() < 1e-14);
        let x = DiscreteFunction::interpolate(m.clone(), |x, _| x).unwrap();
        assert!((modular_boundary(&x, &f("2"), &f("1")).unwrap() - 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(modular_boundary(&constant(&m, 0.0), &f("2"), &f("1")).unwrap(), 0.0);
    }

    #[test]
    fn gradient_values() {
        let m = mesh(4);
        assert_eq!(modular_gradient(&constant(&m, 3.0), &f("2"), &f("1")).unwrap(), 0.0);
        let x = DiscreteFunction::interpolate(m.clone(), |x, _| x).unwrap();
        assert!((modular_gradient(&x, &f("2"), &f("1")).unwrap() - 1.0).abs() < 1e-14);
        let xy = DiscreteFunction::interpolate(m.clone(), |x, y| x + y).unwrap();
        assert!((modular_gradient(&xy, &f("3"), &f("1")).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn norms_of_constants() {
        let m = mesh(4);
        let n1 = luxemburg_norm(&modular_closure(&constant(&m, 1.0), Carrier::Volume, &f("2"), &f("1")).unwrap()).unwrap();
        assert!((n1 - 1.0).abs() < 1e-12);
        let n2 = luxemburg_norm(&modular_closure(&constant(&m, 2.0), Carrier::Volume, &f("4"), &f("1")).unwrap()).unwrap();
        assert!((n2 - 2.0).abs() < 2e-12);
        let n0 = luxemburg_norm(&modular_closure(&constant(&m, 0.0), Carrier::Volume, &f("4"), &f("1")).unwrap()).unwrap();
        assert_eq!(n0, 0.0);
    }

    #[test]
    fn unit_modular_at_norm() {
        let m = mesh(8);
        let u = DiscreteFunction::interpolate(m.clone(), |x, y| 1e-3 + 40.0 * x * y * (1.0 - y)).unwrap();
        let c = modular_closure(&u, Carrier::Volume, &f("1.5 + 3*x*y"), &f("1 + x")).unwrap();
        let n = luxemburg_norm(&c).unwrap();
        assert!((c.eval(n) - 1.0).abs() < 1e-10);
        let tiny = u.scaled(1e-9);
        let c = modular_closure(&tiny, Carrier::Volume, &f("1.5 + 3*x*y"), &f("1 + x")).unwrap();
        let nt = luxemburg_norm(&c).unwrap();
        assert!((nt / n - 1e-9).abs() < 1e-9 * 1e-9);
    }

    #[test]
    fn relations_for_constants() {
        let m = mesh(16);
        let big = check_modular_norm_relations(&constant(&m, 2.0), &f("2 + x"), &f("1")).unwrap();
        assert!(big.iter().all(|v| v.holds));
        assert!(big[1].applicable && !big[2].applicable);
        let small = check_modular_norm_relations(&constant(&m, 0.1), &f("2 + x"), &f("1")).unwrap();
        assert!(small.iter().all(|v| v.holds));
        assert!(!small[1].applicable && small[2].applicable);
    }

    #[test]
    fn holder_trivial_cases() {
        let m = mesh(6);
        let u = DiscreteFunction::interpolate(m.clone(), |x, y| x - y * y).unwrap();
        let (l, r) = holder_pairing_bound(&u, &constant(&m, 0.0), &f("2 + x"), &f("1")).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let (l, r) = holder_pairing_bound(&u, &u, &f("2"), &f("1")).unwrap();
        assert!((r - 2.0 * l).abs() < 1e-10 * l);
        assert!(holder_pairing_bound(&u, &u, &f("1"), &f("1")).is_err());
    }

    #[test]
    fn norm_gradient_matches_differences() {
        let m = mesh(5);
        let quad = Quadrature::new(m.clone()).unwrap();
        let comp = CompositeModular::new(vec![
            SampledModular::new(&quad, Carrier::Gradient, &f("2.5 + x"), &f("1 + y")).unwrap(),
            SampledModular::new(&quad, Carrier::Boundary, &f("2.5 + x"), &f("2")).unwrap(),
        ]);
        let u: Vec<f64> = m.vertices.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[1]).collect();
        let (n, g) = comp.norm_with_gradient(&quad, &u).unwrap();
        let v: Vec<f64> = m.vertices.iter().map(|p| p[0] * p[1] - 0.3).collect();
        let h = 1e-6;
        let plus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let fd = (comp.norm(&quad, &plus).unwrap() - comp.norm(&quad, &minus).unwrap()) / (2.0 * h);
        let an: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!(n > 0.0);
        assert!((fd - an).abs() < 1e-6 * an.abs().max(1e-3), "fd {fd} vs {an}");
    }
}
