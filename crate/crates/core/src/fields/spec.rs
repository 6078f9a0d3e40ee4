use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::{parse_field, FieldExpr};
use crate::discrete::Quadrature;
use crate::error::{Error, Result};
use crate::geometry::{build_rect_mesh, Mesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl DomainSpec {
    pub fn unit_square(n: usize) -> Self {
        DomainSpec { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0, nx: n, ny: n }
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        build_rect_mesh(self.x0, self.y0, self.x1, self.y1, self.nx, self.ny)
    }
}

/// Field expressions as written in a configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldTexts {
    pub a: String,
    pub b: String,
    pub p: String,
    pub q: String,
    pub beta: String,
}

/// The JSON form of a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub domain: DomainSpec,
    pub fields: FieldTexts,
    pub lambda: f64,
}

/// A parsed problem instance: domain, weights `a`, `b`, exponents `p`, `q`,
/// Robin coefficient `beta` and the parameter `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub domain: DomainSpec,
    pub a: FieldExpr,
    pub b: FieldExpr,
    pub p: FieldExpr,
    pub q: FieldExpr,
    pub beta: FieldExpr,
    pub lambda: f64,
    texts: FieldTexts,
}

impl ProblemSpec {
    /// `fields` is `[a, b, p, q, beta]`.
    pub fn new(domain: DomainSpec, fields: [&str; 5], lambda: f64) -> Result<Self> {
        let [a, b, p, q, beta] = fields.map(str::to_owned);
        Self::from_document(&SpecDocument { domain, fields: FieldTexts { a, b, p, q, beta }, lambda })
    }

    pub fn from_document(doc: &SpecDocument) -> Result<Self> {
        let parse = |name: &str, text: &str| {
            parse_field(text).map_err(|e| Error::Config(format!("field `{name}`: {e}")))
        };
        Ok(ProblemSpec {
            domain: doc.domain.clone(),
            a: parse("a", &doc.fields.a)?,
            b: parse("b", &doc.fields.b)?,
            p: parse("p", &doc.fields.p)?,
            q: parse("q", &doc.fields.q)?,
            beta: parse("beta", &doc.fields.beta)?,
            lambda: doc.lambda,
            texts: doc.fields.clone(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDocument = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        Self::from_document(&doc)
    }

    pub fn to_document(&self) -> SpecDocument {
        SpecDocument { domain: self.domain.clone(), fields: self.texts.clone(), lambda: self.lambda }
    }

    pub fn texts(&self) -> &FieldTexts {
        &self.texts
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ProblemSpec { lambda, ..self.clone() }
    }

    pub fn with_resolution(&self, nx: usize, ny: usize) -> Self {
        ProblemSpec { domain: DomainSpec { nx, ny, ..self.domain.clone() }, ..self.clone() }
    }
}

/// Exponent regime of a problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `p⁺ < q⁻`
    Superlinear,
    /// `q⁻ < p⁻ < q⁺ < p⁺`
    Sublinear,
    Other,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Superlinear => "Superlinear",
            Regime::Sublinear => "Sublinear",
            Regime::Other => "Other",
        })
    }
}

pub fn classify(p_minus: f64, p_plus: f64, q_minus: f64, q_plus: f64) -> Regime {
    if p_plus < q_minus {
        Regime::Superlinear
    } else if q_minus < p_minus && p_minus < q_plus && q_plus < p_plus {
        Regime::Sublinear
    } else {
        Regime::Other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub p_minus: f64,
    pub p_plus: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub regime: Regime,
    /// `(p⁺, q⁻)` when nonempty.
    pub eta_interval: Option<(f64, f64)>,
    /// Hypotheses the library does not verify.
    pub unchecked: Vec<String>,
}

impl RegimeReport {
    pub fn from_bounds(p: (f64, f64), q: (f64, f64)) -> Self {
        let regime = classify(p.0, p.1, q.0, q.1);
        RegimeReport {
            p_minus: p.0,
            p_plus: p.1,
            q_minus: q.0,
            q_plus: q.1,
            regime,
            eta_interval: (p.1 < q.0).then_some((p.1, q.0)),
            unchecked: vec![
                "compact-embedding conditions on (p, q, a, b) for W_{a,b}^{1,p} into L_b^q and L^p(boundary): not checked (out of scope)"
                    .to_owned(),
            ],
        }
    }

    /// `(p⁺ + q⁻)/2`, the midpoint of the η interval.
    pub fn eta(&self) -> Option<f64> {
        self.eta_interval.map(|(lo, hi)| 0.5 * (lo + hi))
    }

    /// The ε₀ used for the negative-direction construction, `(p⁻ − q⁻)/2`.
    pub fn epsilon0(&self) -> f64 {
        0.5 * (self.p_minus - self.q_minus)
    }

    pub fn require(&self, want: Regime) -> Result<()> {
        if self.regime == want {
            return Ok(());
        }
        let condition = match want {
            Regime::Superlinear => "p⁺ < η < q⁻ (some η between p⁺ and q⁻)",
            Regime::Sublinear => "1 < q⁻ < p⁻ < q⁺ < p⁺",
            Regime::Other => "no regime",
        };
        Err(Error::Hypothesis(format!(
            "{want} regime requires {condition}; found p⁻={}, p⁺={}, q⁻={}, q⁺={} ({})",
            self.p_minus, self.p_plus, self.q_minus, self.q_plus, self.regime
        )))
    }
}

/// A violated standing hypothesis with a witnessing point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub hypothesis: String,
    pub witness: [f64; 2],
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (value {} at ({}, {}))", self.hypothesis, self.value, self.witness[0], self.witness[1])
    }
}

/// `(min, max)` of `f` over all volume and boundary quadrature points and
/// mesh vertices.
pub fn exponent_bounds(f: &FieldExpr, quad: &Quadrature) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in quad.vol_points.iter().chain(&quad.edge_points).chain(&quad.mesh.vertices) {
        let v = f.eval(p[0], p[1])?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// [`exponent_bounds`] on the default quadrature of `mesh`.
pub fn exponent_bounds_on_mesh(f: &FieldExpr, mesh: &Mesh) -> Result<(f64, f64)> {
    exponent_bounds(f, &Quadrature::new(Arc::new(mesh.clone()))?)
}

fn first_failure(
    points: &[[f64; 2]],
    f: &FieldExpr,
    ok: impl Fn(f64) -> bool,
    hypothesis: &str,
    out: &mut Vec<Violation>,
) {
    let mut worst: Option<([f64; 2], f64)> = None;
    for p in points {
        match f.eval(p[0], p[1]) {
            Ok(v) if ok(v) => {}
            Ok(v) => {
                if worst.is_none() {
                    worst = Some((*p, v));
                }
            }
            Err(e) => {
                out.push(Violation { hypothesis: format!("{hypothesis}: {e}"), witness: *p, value: f64::NAN });
                return;
            }
        }
    }
    if let Some((witness, value)) = worst {
        out.push(Violation { hypothesis: hypothesis.to_owned(), witness, value });
    }
}

/// Checks the standing hypotheses on the sampled point set and classifies
/// the exponent regime.
pub fn validate_spec(spec: &ProblemSpec) -> std::result::Result<RegimeReport, Vec<Violation>> {
    let quad = match spec.domain.build_mesh().and_then(|m| Quadrature::new(Arc::new(m))) {
        Ok(q) => q,
        Err(e) => {
            return Err(vec![Violation {
                hypothesis: format!("domain: {e}"),
                witness: [spec.domain.x0, spec.domain.y0],
                value: f64::NAN,
            }])
        }
    };
    validate_on(spec, &quad)
}

pub fn validate_on(spec: &ProblemSpec, quad: &Quadrature) -> std::result::Result<RegimeReport, Vec<Violation>> {
    let mut bad = Vec::new();
    let mut closure: Vec<[f64; 2]> = quad.vol_points.clone();
    closure.extend_from_slice(&quad.edge_points);
    closure.extend_from_slice(&quad.mesh.vertices);

    first_failure(&closure, &spec.p, |v| v > 1.0, "C₊ membership: inf p(x) > 1 fails", &mut bad);
    first_failure(&closure, &spec.q, |v| v > 1.0, "C₊ membership: inf q(x) > 1 fails", &mut bad);
    first_failure(&quad.edge_points, &spec.beta, |v| v > 0.0, "Robin coefficient: β⁻ = inf β(x) > 0 fails", &mut bad);
    first_failure(&quad.vol_points, &spec.a, |v| v > 0.0, "weight admissibility: a(x) > 0 fails", &mut bad);
    first_failure(&quad.vol_points, &spec.b, |v| v > 0.0, "weight admissibility: b(x) > 0 fails", &mut bad);
    if !(spec.lambda > 0.0 && spec.lambda.is_finite()) {
        bad.push(Violation {
            hypothesis: "parameter: λ > 0 fails".to_owned(),
            witness: [spec.domain.x0, spec.domain.y0],
            value: spec.lambda,
        });
    }
    if !bad.is_empty() {
        return Err(bad);
    }
    let p = exponent_bounds(&spec.p, quad).map_err(|e| vec![eval_violation("p", e)])?;
    let q = exponent_bounds(&spec.q, quad).map_err(|e| vec![eval_violation("q", e)])?;
    Ok(RegimeReport::from_bounds(p, q))
}

fn eval_violation(name: &str, e: Error) -> Violation {
    let witness = match &e {
        Error::Domain { at, .. } => [at.0, at.1],
        _ => [f64::NAN, f64::NAN],
    };
    Violation { hypothesis: format!("field `{name}` not evaluable: {e}"), witness, value: f64::NAN }
}
