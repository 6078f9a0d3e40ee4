use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::Problem;
use crate::error::Result;
use crate::modular::{holder_pairing_bound, luxemburg_norm, norm_modular_relations, Carrier, SampledModular};
use crate::solvers::random_function;

/// Tally of one property over the sampled functions.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Tally {
    pub passed: usize,
    pub total: usize,
    /// Largest observed violation measure (relation-specific).
    pub worst: f64,
    pub note: String,
}

impl Tally {
    fn record(&mut self, ok: bool, measure: f64) {
        self.total += 1;
        if ok {
            self.passed += 1;
        }
        if measure.is_finite() {
            self.worst = self.worst.max(measure);
        }
    }

    pub fn holds(&self) -> bool {
        self.passed == self.total
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn strictly(xs: &[f64], up: bool) -> bool {
    xs.windows(2).all(|w| if up { w[1] > w[0] } else { w[1] < w[0] })
}

/// Random smooth function with its scale spread over four decades, so that
/// norms fall on both sides of 1.
fn sample(pb: &Problem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    random_function(pb, rng).iter().map(|v| scale * v).collect()
}

/// One tally per invariant; serialized under these field names.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PropertySuite {
    pub modular_relations_volume_q: Tally,
    pub modular_relations_gradient_p: Tally,
    pub modular_relations_boundary_p: Tally,
    pub luxemburg_homogeneity: Tally,
    pub unit_modular_identity: Tally,
    pub constant_exponent_collapse: Tally,
    pub holder_pairing_bound: Tally,
    pub i_beta_relations: Tally,
    pub norm_equivalence: Tally,
    pub i_beta_trend_vanishing: Tally,
    pub i_beta_trend_unbounded: Tally,
    pub gradient_exactness: Tally,
    pub derivative_decomposition: Tally,
    pub evenness_and_zero: Tally,
    pub strict_monotonicity: Tally,
}

impl PropertySuite {
    pub fn tallies(&self) -> [(&'static str, &Tally); 15] {
        [
            ("modular_relations_volume_q", &self.modular_relations_volume_q),
            ("modular_relations_gradient_p", &self.modular_relations_gradient_p),
            ("modular_relations_boundary_p", &self.modular_relations_boundary_p),
            ("luxemburg_homogeneity", &self.luxemburg_homogeneity),
            ("unit_modular_identity", &self.unit_modular_identity),
            ("constant_exponent_collapse", &self.constant_exponent_collapse),
            ("holder_pairing_bound", &self.holder_pairing_bound),
            ("i_beta_relations", &self.i_beta_relations),
            ("norm_equivalence", &self.norm_equivalence),
            ("i_beta_trend_vanishing", &self.i_beta_trend_vanishing),
            ("i_beta_trend_unbounded", &self.i_beta_trend_unbounded),
            ("gradient_exactness", &self.gradient_exactness),
            ("derivative_decomposition", &self.derivative_decomposition),
            ("evenness_and_zero", &self.evenness_and_zero),
            ("strict_monotonicity", &self.strict_monotonicity),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.tallies().iter().all(|(_, t)| t.holds())
    }
}

/// Evaluates the modular, `I_β` and energy invariants on `samples` seeded
/// random functions.
pub fn property_suite(pb: &Problem, samples: usize, seed: u64) -> Result<PropertySuite> {
    let spec = &pb.spec;
    let quad = &pb.quad;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite = PropertySuite::default();
    let PropertySuite {
        modular_relations_volume_q: rel_vol,
        modular_relations_gradient_p: rel_grad,
        modular_relations_boundary_p: rel_bdry,
        luxemburg_homogeneity: homog,
        unit_modular_identity: unit,
        constant_exponent_collapse: collapse,
        holder_pairing_bound: holder,
        i_beta_relations: ib,
        norm_equivalence: equiv,
        i_beta_trend_vanishing: down,
        i_beta_trend_unbounded: up,
        gradient_exactness: fd,
        derivative_decomposition: decomp,
        evenness_and_zero: even,
        strict_monotonicity: mono,
    } = &mut suite;

    let mut terms = [
        (SampledModular::new(quad, Carrier::Volume, &spec.q, &spec.b)?, rel_vol),
        (SampledModular::new(quad, Carrier::Gradient, &spec.p, &spec.a)?, rel_grad),
        (SampledModular::new(quad, Carrier::Boundary, &spec.p, &spec.beta)?, rel_bdry),
    ];
    let r = &pb.regime;
    let mut ratios = (f64::INFINITY, 0.0f64);

    for s in 0..samples {
        let u = sample(pb, &mut rng);
        let v = sample(pb, &mut rng);
        for (m, t) in terms.iter_mut() {
            let c = m.closure(quad, &u);
            if c.is_zero() {
                continue;
            }
            let norm = luxemburg_norm(&c)?;
            let (lo, hi) = c.exponent_range().unwrap_or((1.0, 1.0));
            let ok = norm_modular_relations(norm, c.modular(), lo, hi).iter().all(|v| v.holds);
            t.record(ok, 0.0);
            let dev = (c.eval(norm) - 1.0).abs();
            unit.record(dev <= 1e-10, dev);
            if lo == hi {
                let d = rel(norm, c.modular().powf(1.0 / lo));
                collapse.record(d <= 1e-10, d);
            }
            for t in [-3.0, -1.0, 0.5, 2.0] {
                let ut: Vec<f64> = u.iter().map(|x| t * x).collect();
                let d = rel(luxemburg_norm(&m.closure(quad, &ut))?, t.abs() * norm);
                homog.record(d <= 1e-9, d);
            }
        }

        let (bn, ibv) = (pb.beta_norm(&u)?, pb.i_beta(&u));
        let ok = norm_modular_relations(bn, ibv, r.p_minus, r.p_plus).iter().all(|v| v.holds);
        ib.record(ok, 0.0);
        let ratio = bn / pb.sobolev_norm_ab(&u)?;
        ratios = (ratios.0.min(ratio), ratios.1.max(ratio));

        if s < 100 {
            let uf = pb.function(u.clone())?;
            let vf = pb.function(v.clone())?;
            let (lhs, rhs) = holder_pairing_bound(&uf, &vf, &spec.q, &spec.b)?;
            holder.record(lhs <= rhs * (1.0 + 1e-12), lhs / rhs);
        }

        if s < 12 {
            let seq = |f: &dyn Fn(f64) -> f64| -> Result<(Vec<f64>, Vec<f64>)> {
                let mut ns = Vec::new();
                let mut ms = Vec::new();
                for k in 1..=12 {
                    let w: Vec<f64> = u.iter().map(|x| f(k as f64) * x).collect();
                    ns.push(pb.beta_norm(&w)?);
                    ms.push(pb.i_beta(&w));
                }
                Ok((ns, ms))
            };
            // u − u_k = u/k → 0, and k·u → ∞
            let (ns, ms) = seq(&|k| 1.0 / k)?;
            down.record(strictly(&ns, false) && strictly(&ms, false), 0.0);
            let (ns, ms) = seq(&|k| k)?;
            up.record(strictly(&ns, true) && strictly(&ms, true), 0.0);
        }

        if s < 10 {
            let g = pb.gradient(&u);
            let gv: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
            if r.p_minus >= 2.0 {
                let h = 1e-6;
                let sup = |w: &[f64]| w.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                let k = sup(&u) / sup(&v);
                let v: Vec<f64> = v.iter().map(|x| k * x).collect();
                let gv: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
                let plus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
                let minus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
                let d = rel((pb.j(&plus) - pb.j(&minus)) / (2.0 * h), gv);
                fd.record(d <= 1e-5, d);
            }
            let l: f64 = pb.l_gradient(&u).iter().zip(&v).map(|(a, b)| a * b).sum();
            let src: f64 = pb.source_gradient(&u).iter().zip(&v).map(|(a, b)| a * b).sum();
            let d = (gv - (l - pb.lambda() * src)).abs() / (l.abs() + pb.lambda() * src.abs()).max(f64::MIN_POSITIVE);
            decomp.record(d <= 1e-13, d);
            let neg: Vec<f64> = u.iter().map(|x| -x).collect();
            even.record(pb.j(&neg) == pb.j(&u) && pb.j(&vec![0.0; u.len()]) == 0.0, 0.0);
            let uf = pb.function(u.clone())?;
            let vf = pb.function(v.clone())?;
            let gap = crate::energy::monotonicity_gap(&uf, &vf, spec)?;
            mono.record(gap > 0.0, -gap);
        }
    }
    if r.p_minus < 2.0 {
        fd.note = "skipped: p⁻ < 2".into();
    }
    if collapse.total == 0 {
        collapse.note = "skipped: no constant exponent".into();
    }
    equiv.record(ratios.0 > 0.0 && ratios.1.is_finite(), 0.0);
    equiv.note = format!("ratio ‖u‖_β/‖u‖_(a,b) in [{:e}, {:e}]", ratios.0, ratios.1);
    Ok(suite)
}
