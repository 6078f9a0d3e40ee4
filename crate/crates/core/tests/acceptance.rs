//! End-to-end acceptance run: one PASS/FAIL line per criterion, exit status
//! 1 if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pxrobin::cli::{canonical_json, property_suite, run_experiment, ExperimentConfig, PropertySuite};
use pxrobin::energy::Problem;
use pxrobin::fields::DomainSpec;
use pxrobin::solvers::{
    default_endpoint, default_rho, ekeland_on, estimate_embedding_on, fountain_on, lambda_star, linear_robin_eigs,
    mountain_pass_on, multiplicity_on, negative_direction_on, random_function, sphere_infimum_on, CriticalPoint,
    MountainPassOptions,
};
use pxrobin::{ProblemSpec, Result};

const LINEAR: [&str; 5] = ["1", "1", "2", "2", "1"];
const SUPERLINEAR: [&str; 5] = ["1", "1", "2", "4", "1"];
const SUBLINEAR: [&str; 5] = ["1", "1", "3 + x", "2 + 1.5*x", "1"];
const VARIABLE: [&str; 5] = ["1 + 0.5*x*y", "2 - x", "2.2 + 0.5*sin(3*x)*y", "3 + x", "0.5 + y"];
const SMOOTH_P: [&str; 5] = ["1 + 0.5*x*y", "2 - x", "2.5 + 0.5*sin(3*x)*y", "4 + x", "0.5 + y"];
const TOL: f64 = 1e-6;
const SEED: u64 = 0;

fn spec(fields: [&str; 5], n: usize) -> ProblemSpec {
    ProblemSpec::new(DomainSpec::unit_square(n), fields, 1.0).expect("acceptance specs parse")
}

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

/// `tan μ = 2μ/(μ²−1)` on `(1, π/2)`, by bisection on `(μ²−1) sin μ − 2μ cos μ`.
fn separation_root() -> f64 {
    let f = |m: f64| (m * m - 1.0) * m.sin() - 2.0 * m * m.cos();
    let (mut lo, mut hi) = (1.0f64, std::f64::consts::FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn suites(fields_list: &[[&str; 5]]) -> Result<Vec<PropertySuite>> {
    fields_list.iter().map(|f| property_suite(&Problem::new(&spec(*f, 16))?, 200, 7)).collect()
}

fn modular_suite() -> Result<Outcome> {
    let suites = suites(&[SUPERLINEAR, SUBLINEAR, VARIABLE])?;
    let mut failed = Vec::new();
    for s in &suites {
        for (name, t) in s.tallies().into_iter().take(7) {
            if !t.holds() {
                failed.push(format!("{name} {}/{}", t.passed, t.total));
            }
        }
    }
    let worst = |pick: fn(&PropertySuite) -> f64| suites.iter().map(pick).fold(0.0, f64::max);
    outcome(
        failed.is_empty(),
        format!(
            "3 specs × 200 functions; worst homogeneity {:.1e}, unit modular {:.1e}, collapse {:.1e}{}",
            worst(|s| s.luxemburg_homogeneity.worst),
            worst(|s| s.unit_modular_identity.worst),
            worst(|s| s.constant_exponent_collapse.worst),
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    )
}

fn i_beta_suite() -> Result<Outcome> {
    let s = &suites(&[VARIABLE])?[0];
    let checks = [&s.i_beta_relations, &s.norm_equivalence, &s.i_beta_trend_vanishing, &s.i_beta_trend_unbounded];
    outcome(
        checks.iter().all(|t| t.holds()),
        format!(
            "relations {}/{}, trends {}/{} and {}/{}, {}",
            s.i_beta_relations.passed,
            s.i_beta_relations.total,
            s.i_beta_trend_vanishing.passed,
            s.i_beta_trend_vanishing.total,
            s.i_beta_trend_unbounded.passed,
            s.i_beta_trend_unbounded.total,
            s.norm_equivalence.note
        ),
    )
}

fn gradient_exactness() -> Result<Outcome> {
    let pb = Problem::new(&spec(SMOOTH_P, 16))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let h = 1e-6;
    let sup = |w: &[f64]| w.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let u = random_function(&pb, &mut rng);
        let v = random_function(&pb, &mut rng);
        let k = sup(&u) / sup(&v);
        let v: Vec<f64> = v.iter().map(|x| k * x).collect();
        let at = |t: f64| pb.j(&u.iter().zip(&v).map(|(a, b)| a + t * b).collect::<Vec<_>>());
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let exact: f64 = pb.gradient(&u).iter().zip(&v).map(|(a, b)| a * b).sum();
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    outcome(worst <= 1e-5, format!("p⁻ = {}, worst relative error {worst:.2e}", pb.regime.p_minus))
}

fn linear_oracle() -> Result<Outcome> {
    let mu = separation_root();
    let exact = 2.0 * mu * mu;
    let sizes = [16usize, 32, 64];
    let mut errors = Vec::new();
    for n in sizes {
        let mesh = std::sync::Arc::new(DomainSpec::unit_square(n).build_mesh()?);
        let l1 = linear_robin_eigs(&mesh, 1.0, 1.0, 1.0, 1)?[0].value;
        errors.push((l1 - exact).abs() / exact);
    }
    let orders: Vec<f64> = (1..3).map(|i| (errors[i - 1] / errors[i]).log2()).collect();
    outcome(
        errors[2] <= 0.02 && orders.iter().all(|&o| o >= 1.8),
        format!("2μ₁² = {exact:.6}, errors [{}], orders {orders:.3?}", sci(&errors)),
    )
}

fn embedding_consistency() -> Result<Outcome> {
    let pb = Problem::new(&spec(LINEAR, 32))?;
    let est = estimate_embedding_on(&pb, 4, SEED)?;
    let l1 = linear_robin_eigs(pb.mesh(), 1.0, 1.0, 1.0, 1)?[0].value;
    let expected = l1.powf(-0.5);
    let dev = (est.raw - expected).abs() / expected;
    outcome(dev <= 0.05, format!("Ĉ₂ = {:.7}, λ₁^(−1/2) = {expected:.7}, deviation {dev:.1e}", est.raw))
}

fn mountain_pass_existence() -> Result<(Outcome, CriticalPoint)> {
    let pb = Problem::new(&spec(SUPERLINEAR, 32))?;
    let e = default_endpoint(&pb)?;
    let opts = MountainPassOptions { tol: TOL, ..Default::default() };
    let u = mountain_pass_on(&pb, &e, &opts)?;
    let nehari = u.nehari(&pb);
    let sphere = sphere_infimum_on(&pb, 0.05 * u.beta_norm, 4, SEED)?;
    let pass = u.residual <= TOL && u.energy > 0.0 && nehari.abs() <= TOL * (1.0 + u.beta_norm) && sphere.infimum > 0.0;
    let detail = format!(
        "J = {:.6}, residual {:.1e}, |J′(u)(u)| = {:.1e}, small-sphere min {:.3e}",
        u.energy,
        u.residual,
        nehari.abs(),
        sphere.infimum
    );
    Ok((Outcome { pass, detail }, u))
}

fn ekeland_existence() -> Result<(Outcome, CriticalPoint)> {
    let pb = Problem::new(&spec(SUBLINEAR, 32))?;
    let est = estimate_embedding_on(&pb, 4, SEED)?;
    let rho = default_rho(est.inflated);
    let ls = lambda_star(pb.regime.p_plus, pb.regime.q_minus, rho, est.inflated)?;
    let pb = pb.with_lambda(0.5 * ls.lambda_star)?;
    let neg = negative_direction_on(&pb)?;
    let w = ekeland_on(&pb, rho, TOL, 3, 2000, SEED)?;
    let sphere = sphere_infimum_on(&pb, rho, 4, SEED)?;
    let pass = neg.energy_at_t_star < 0.0
        && w.energy < 0.0
        && w.residual <= TOL
        && w.beta_norm < rho
        && sphere.infimum >= 0.5 * ls.gamma;
    let detail = format!(
        "λ = {:.4e}, J(t*φ) = {:.2e}, J(w) = {:.3e}, residual {:.1e}, ‖w‖_β = {:.4} < ρ = {rho:.4}, sphere min {:.4e} vs γ/2 = {:.4e}",
        pb.lambda(),
        neg.energy_at_t_star,
        w.energy,
        w.residual,
        w.beta_norm,
        sphere.infimum,
        0.5 * ls.gamma
    );
    Ok((Outcome { pass, detail }, w))
}

fn fountain() -> Result<Outcome> {
    let pb = Problem::new(&spec(SUPERLINEAR, 32))?;
    let diag = fountain_on(&pb, 20, SEED)?;
    let opts = MountainPassOptions { tol: TOL, ..Default::default() };
    let mult = multiplicity_on(&pb, 2, &opts, 4)?;
    let ratio = diag.alpha[19] / diag.alpha[0];
    let a_ok = diag.a_nonpositive();
    let bad_a: Vec<usize> = a_ok.iter().enumerate().filter(|(_, ok)| !**ok).map(|(k, _)| k + 1).collect();
    let pts = &mult.points;
    let two = pts.len() == 2 && pts[0].energy < pts[1].energy && pts.iter().all(|c| c.residual <= TOL);
    let pass = diag.alpha_nonincreasing() && ratio <= 0.6 && bad_a.is_empty() && two;
    let detail = format!(
        "α nonincreasing: {}, α₂₀/α₁ = {ratio:.4}, a_k ≤ 0 fails for k ∈ {bad_a:?}, critical J = {:.4?}, residuals [{}]",
        diag.alpha_nonincreasing(),
        pts.iter().map(|c| c.energy).collect::<Vec<_>>(),
        sci(&pts.iter().map(|c| c.residual).collect::<Vec<_>>())
    );
    outcome(pass, detail)
}

fn determinism() -> Result<Outcome> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/solve-mp.json"))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let a = canonical_json(&run_experiment(&cfg)?.report);
    let b = canonical_json(&run_experiment(&cfg)?.report);
    outcome(a == b, format!("solve-mp report.json, {} bytes, identical: {}", a.len(), a == b))
}

struct Line {
    id: usize,
    name: &'static str,
    budget: Option<Duration>,
    elapsed: Duration,
    result: Result<Outcome>,
}

impl Line {
    fn pass(&self) -> bool {
        matches!(&self.result, Ok(o) if o.pass) && self.budget.is_none_or(|b| self.elapsed < b)
    }

    fn print(&self) {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        let budget = self.budget.map_or(String::new(), |b| format!(" (< {} s)", b.as_secs()));
        let detail = match &self.result {
            Ok(o) => o.detail.clone(),
            Err(e) => format!("error: {e}"),
        };
        println!(
            "criterion {:>2} {verdict} [{:.1} s{budget}] {}: {detail}",
            self.id,
            self.elapsed.as_secs_f64(),
            self.name
        );
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() -> ExitCode {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let mut lines = Vec::new();
    let mut record = |id, name, budget, (result, elapsed)| {
        let line = Line { id, name, budget, elapsed, result };
        line.print();
        lines.push(line);
    };
    record(1, "modular/norm suite", secs(30), timed(modular_suite));
    record(2, "I_β/β-norm suite", secs(30), timed(i_beta_suite));
    record(3, "gradient exactness", secs(10), timed(gradient_exactness));
    record(4, "linear oracle", secs(60), timed(linear_oracle));
    record(5, "embedding constant", secs(60), timed(embedding_consistency));

    let (mp, t_mp) = timed(mountain_pass_existence);
    let mp_energy = mp.as_ref().ok().map(|(_, u)| u.energy);
    record(6, "mountain pass", secs(120), (mp.map(|(o, _)| o), t_mp));
    let (ek, t_ek) = timed(ekeland_existence);
    let ek_energy = ek.as_ref().ok().map(|(_, w)| w.energy);
    record(7, "Ekeland minimizer", secs(120), (ek.map(|(o, _)| o), t_ek));
    let separation = match (mp_energy, ek_energy) {
        (Some(c_up), Some(c_lo)) => outcome(
            c_up > 0.0 && c_lo < 0.0,
            format!("c̄ = {c_up:.6} > 0 > c̲ = {c_lo:.3e}; the two regimes need separate exponent pairs"),
        ),
        _ => Err(pxrobin::Error::Numerical("criterion 6 or 7 produced no solution".into())),
    };
    record(8, "sign separation", None, (separation, t_mp + t_ek));

    record(9, "fountain diagnostics", secs(300), timed(fountain));
    record(10, "determinism", None, timed(determinism));

    let passed = lines.iter().filter(|l| l.pass()).count();
    println!("{passed}/{} criteria pass", lines.len());
    if passed == lines.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
