//! Configuration, experiment dispatch and result export for the `pxrobin`
//! binary.
//!
//! A run reads one JSON configuration, executes one experiment and writes
//! `report.json`, `trace.csv`, `mesh.csv` and, when the experiment
//! produces a function, `solution.csv` into the output directory. Wall
//! time goes to `timing.json` so that reports of identical runs are
//! byte-identical.

mod report;
mod suite;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::discrete::DiscreteFunction;
use crate::energy::Problem;
use crate::error::{Error, Result};
use crate::fields::{exponent_bounds, validate_spec, DomainSpec, ProblemSpec, Regime, SpecDocument};
use crate::geometry::Mesh;
use crate::solvers::{
    self, default_endpoint, default_rho, ekeland_on, estimate_embedding_on, fountain_on, lambda_star,
    linear_robin_eigs, mountain_pass_on, multiplicity_on, negative_direction_on, ps_check,
    rectangle_robin_eigenvalue, sphere_infimum_on, two_solutions_on, CriticalPoint, MountainPassOptions,
    TraceEntry, TwoSolutionOptions,
};

pub use report::{
    canonical_json, export_mesh_csv, export_report_json, export_solution_csv, export_trace_csv, import_solution_csv,
};
pub use suite::{property_suite, PropertySuite, Tally};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Validate,
    PropSuite,
    SolveMp,
    SolveEkeland,
    TwoSolutions,
    Fountain,
    Oracle,
    EmbedConst,
}

/// Experiment-specific knobs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Random functions per property (prop-suite).
    pub samples: usize,
    /// Embedding-constant starts.
    pub trials: usize,
    /// Ekeland multi-starts.
    pub restarts: usize,
    pub n_path: usize,
    pub k_max: usize,
    /// Critical points requested from the multiplicity search.
    pub count: usize,
    /// Sublinear `λ` as a fraction of `λ̂*`; `null` keeps the spec's `λ`.
    pub lambda_fraction: Option<f64>,
    /// Ball radius; defaults to `min(0.5, 0.9/Ĉ₂)`.
    pub rho: Option<f64>,
    /// Random starts for sphere infima.
    pub sphere_samples: usize,
    /// Small-sphere radius of the mountain-pass check, relative to `‖u*‖_β`.
    pub sphere_fraction: f64,
    /// Refinement ladder for the linear oracle.
    pub mesh_sizes: Vec<usize>,
    pub eigen_count: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            samples: 200,
            trials: 4,
            restarts: 3,
            n_path: 21,
            k_max: 20,
            count: 2,
            lambda_fraction: Some(0.5),
            rho: None,
            sphere_samples: 4,
            sphere_fraction: 0.05,
            mesh_sizes: vec![16, 32, 64],
            eigen_count: 4,
        }
    }
}

fn default_tol() -> f64 {
    solvers::DEFAULT_TOL
}

fn default_max_iters() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub spec: SpecDocument,
    /// Sublinear companion for `two-solutions`.
    #[serde(default)]
    pub spec_sub: Option<SpecDocument>,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let p = &self.params;
        let bad = |what: &str| Err(Error::Config(format!("{what} must be positive")));
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol");
        }
        for (name, v) in [
            ("max_iters", self.max_iters),
            ("params.samples", p.samples),
            ("params.trials", p.trials),
            ("params.restarts", p.restarts),
            ("params.k_max", p.k_max),
            ("params.sphere_samples", p.sphere_samples),
            ("params.eigen_count", p.eigen_count),
        ] {
            if v == 0 {
                return bad(name);
            }
        }
        if p.n_path < 3 {
            return Err(Error::Config("params.n_path must be at least 3".into()));
        }
        if p.lambda_fraction.is_some_and(|f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::Config("params.lambda_fraction must lie in (0, 1)".into()));
        }
        if p.rho.is_some_and(|r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::Config("params.rho must lie in (0, 1)".into()));
        }
        if !(p.sphere_fraction > 0.0 && p.sphere_fraction < 1.0) {
            return Err(Error::Config("params.sphere_fraction must lie in (0, 1)".into()));
        }
        if p.mesh_sizes.len() < 2 || p.mesh_sizes.contains(&0) {
            return Err(Error::Config("params.mesh_sizes needs at least two positive sizes".into()));
        }
        Ok(())
    }

    fn apply(&mut self, args: &Args) {
        if let Some(e) = args.experiment {
            self.experiment = e;
        }
        if let Some(s) = args.seed {
            self.seed = s;
        }
        if let Some(t) = args.tol {
            self.tol = t;
        }
        if let Some(m) = args.max_iters {
            self.max_iters = m;
        }
        if let Some(n) = args.mesh_n {
            for d in std::iter::once(&mut self.spec).chain(self.spec_sub.as_mut()) {
                d.domain.nx = n;
                d.domain.ny = n;
            }
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "pxrobin", version, about = "Critical points of the weighted p(x)-Laplacian Robin energy")]
pub struct Args {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Overrides nx = ny of every spec.
    #[arg(long)]
    pub mesh_n: Option<usize>,
    /// Overrides the configured experiment.
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
}

/// Everything an experiment produces besides the files' names.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Value,
    pub solutions: Vec<(String, DiscreteFunction)>,
    pub traces: Vec<(String, Vec<TraceEntry>)>,
    pub mesh: Option<Arc<Mesh>>,
    /// 0, or 1 when the experiment's solver (or suite) failed.
    pub exit_code: i32,
}

/// Exit status for an error: 2 for configuration and hypothesis problems,
/// 1 for solver failures.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Hypothesis(_)
        | Error::InvalidArgument(_)
        | Error::Syntax { .. }
        | Error::UnknownIdentifier(_)
        | Error::Domain { .. }
        | Error::Mesh(_) => 2,
        Error::Numerical(_) | Error::Resolution(_) | Error::Geometry(_) | Error::Io(_) => 1,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidArgument(_) => "InvalidArgument",
        Error::Mesh(_) => "Mesh",
        Error::Syntax { .. } => "Syntax",
        Error::UnknownIdentifier(_) => "UnknownIdentifier",
        Error::Domain { .. } => "Domain",
        Error::Hypothesis(_) => "Hypothesis",
        Error::Numerical(_) => "Numerical",
        Error::Resolution(_) => "Resolution",
        Error::Geometry(_) => "Geometry",
        Error::Config(_) => "Config",
        Error::Io(_) => "Io",
    }
}

/// Parses the configuration, runs it and writes the outputs; returns the
/// process exit status.
pub fn run(args: &Args) -> i32 {
    let start = Instant::now();
    let cfg = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))
        .and_then(|text| ExperimentConfig::from_json(&text))
        .and_then(|mut cfg| {
            cfg.apply(args);
            cfg.check()?;
            Ok(cfg)
        });
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let code = match run_experiment(&cfg) {
        Ok(out) => match write_outputs(&out, &args.out) {
            Ok(()) => out.exit_code,
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code_for(&e);
            let report = json!({
                "config": cfg,
                "experiment": cfg.experiment,
                "error": { "kind": error_kind(&e), "message": e.to_string() },
                "exit_code": code,
            });
            if let Err(w) = export_report_json(&report, &args.out.join("report.json")) {
                eprintln!("error: {w}");
            }
            code
        }
    };
    let secs = start.elapsed().as_secs_f64();
    eprintln!("wall time: {secs:.3} s");
    let _ = std::fs::write(args.out.join("timing.json"), format!("{{\"wall_time_s\": {secs}}}\n"));
    code
}

pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    export_report_json(&out.report, &dir.join("report.json"))?;
    let series: Vec<(&str, &[TraceEntry])> = out.traces.iter().map(|(n, t)| (n.as_str(), t.as_slice())).collect();
    export_trace_csv(&series, &dir.join("trace.csv"))?;
    if let Some(mesh) = &out.mesh {
        export_mesh_csv(mesh, &dir.join("mesh.csv"))?;
    }
    for (name, u) in &out.solutions {
        export_solution_csv(u, &dir.join(name))?;
    }
    Ok(())
}

fn point_json(pb: &Problem, c: &CriticalPoint) -> Value {
    json!({
        "J": c.energy,
        "residual": c.residual,
        "beta_norm": c.beta_norm,
        "iterations": c.iterations,
        "classification": c.classification,
        "status": c.status,
        "nehari": c.nehari(pb),
    })
}

struct Verdicts(serde_json::Map<String, Value>);

impl Verdicts {
    fn new() -> Self {
        Verdicts(serde_json::Map::new())
    }

    fn add(&mut self, name: &str, holds: bool) -> bool {
        self.0.insert(name.to_owned(), Value::Bool(holds));
        holds
    }

    fn all(&self) -> bool {
        self.0.values().all(|v| v == &Value::Bool(true))
    }
}

fn envelope(cfg: &ExperimentConfig, pb: Option<&Problem>, results: Value, verdicts: Verdicts, iterations: usize) -> Value {
    json!({
        "config": cfg,
        "experiment": cfg.experiment,
        "regime": pb.map(|p| &p.regime),
        "results": results,
        "verdicts": verdicts.0,
        "iterations": iterations,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let spec = ProblemSpec::from_document(&cfg.spec)?;
    match cfg.experiment {
        Experiment::Validate => validate(cfg, &spec),
        Experiment::PropSuite => prop_suite(cfg, &spec),
        Experiment::SolveMp => solve_mp(cfg, &spec),
        Experiment::SolveEkeland => solve_ekeland(cfg, &spec),
        Experiment::TwoSolutions => two_solutions(cfg, &spec),
        Experiment::Fountain => fountain(cfg, &spec),
        Experiment::Oracle => oracle(cfg, &spec),
        Experiment::EmbedConst => embed_const(cfg, &spec),
    }
}

fn output(report: Value, mesh: Option<Arc<Mesh>>, exit_code: i32) -> RunOutput {
    RunOutput { report, solutions: vec![], traces: vec![], mesh, exit_code }
}

fn validate(cfg: &ExperimentConfig, spec: &ProblemSpec) -> Result<RunOutput> {
    let mut verdicts = Verdicts::new();
    let mut results = serde_json::Map::new();
    let mut code = 0;
    let docs = std::iter::once(("spec", spec.clone())).chain(
        cfg.spec_sub.as_ref().map(|d| ProblemSpec::from_document(d).map(|s| ("spec_sub", s))).transpose()?,
    );
    let mut regime = Value::Null;
    for (name, s) in docs {
        match validate_spec(&s) {
            Ok(r) => {
                verdicts.add(&format!("{name}_standing_hypotheses"), true);
                let entry = json!({
                    "regime": r,
                    "eta": r.eta(),
                    "epsilon0": (r.regime == Regime::Sublinear).then(|| r.epsilon0()),
                });
                if name == "spec" {
                    regime = json!(r);
                }
                results.insert(name.to_owned(), entry);
            }
            Err(violations) => {
                verdicts.add(&format!("{name}_standing_hypotheses"), false);
                results.insert(name.to_owned(), json!({ "violations": violations }));
                code = 2;
            }
        }
    }
    let mesh = spec.domain.build_mesh().ok().map(Arc::new);
    let mut report = envelope(cfg, None, Value::Object(results), verdicts, 0);
    report["regime"] = regime;
    Ok(output(report, mesh, code))
}

fn prop_suite(cfg: &ExperimentConfig, spec: &ProblemSpec) -> Result<RunOutput> {
    let pb = Problem::new(spec)?;
    let suite = property_suite(&pb, cfg.params.samples, cfg.seed)?;
    let mut verdicts = Verdicts::new();
    for (name, t) in suite.tallies() {
        verdicts.add(name, t.holds());
    }
    let ok = verdicts.all();
    let report = envelope(cfg, Some(&pb), json!(suite), verdicts, cfg.params.samples);
    Ok(output(report, Some(pb.mesh().clone()), if ok { 0 } else { 1 }))
}

fn mp_options(cfg: &ExperimentConfig) -> MountainPassOptions {
    MountainPassOptions { n_path: cfg.params.n_path, tol: cfg.tol, max_iters: cfg.max_iters, ..Default::default() }
}

fn solve_mp(cfg: &ExperimentConfig, spec: &ProblemSpec) -> Result<RunOutput> {
    let pb = Problem::new(spec)?;
    pb.regime.require(Regime::Superlinear)?;
    let e = default_endpoint(&pb)?;
    let cp = mountain_pass_on(&pb, &e, &mp_options(cfg))?;
    let mut v = Verdicts::new();
    let converged = v.add("converged", cp.converged());
    v.add("energy_positive", cp.energy > 0.0);
    let nehari = cp.nehari(&pb);
    v.add("nehari_identity", nehari.abs() <= cfg.tol * (1.0 + cp.beta_norm));

    let radius = cfg.params.sphere_fraction * cp.beta_norm;
    let sphere = sphere_infimum_on(&pb, radius, cfg.params.sphere_samples, cfg.seed)?;
    v.add("small_sphere_positive", sphere.infimum > 0.0);

    // beyond the ray maximum J decreases to −∞
    let ray: Vec<f64> = (0..8).map(|k| pb.j(&e.iter().map(|x| x * (1 << k) as f64).collect::<Vec<_>>())).collect();
    v.add("ray_decreasing", ray.windows(2).all(|w| w[1] < w[0]));

    let ps = ps_check(&cp.trace, &pb.regime)?;
    v.add("palais_smale_bound", ps.holds);

    let results = json!({
        "critical_point": point_json(&pb, &cp),
        "sphere": { "radius": radius, "infimum": sphere.infimum, "values": sphere.values },
        "ray_energies": ray,
        "palais_smale": ps,
    });
    let report = envelope(cfg, Some(&pb), results, v, cp.iterations);
    Ok(RunOutput {
        report,
        traces: vec![("mountain_pass".into(), cp.trace.clone())],
        solutions: vec![("solution.csv".into(), cp.u.clone())],
        mesh: Some(pb.mesh().clone()),
        exit_code: if converged { 0 } else { 1 },
    })
}

fn solve_ekeland(cfg: &ExperimentConfig, spec: &ProblemSpec) -> Result<RunOutput> {
    let pb = Problem::new(spec)?;
    pb.regime.require(Regime::Sublinear)?;
    let p = &cfg.params;
    let est = estimate_embedding_on(&pb, p.trials, cfg.seed)?;
    let rho = p.rho.unwrap_or_else(|| default_rho(est.inflated));
    let ls = lambda_star(pb.regime.p_plus, pb.regime.q_minus, rho, est.inflated)?;
    let lambda = p.lambda_fraction.map_or(pb.lambda(), |f| f * ls.lambda_star);
    let pb = pb.with_lambda(lambda)?;

    let mut v = Verdicts::new();
    v.add("lambda_below_threshold", lambda < ls.lambda_star);
    let neg = negative_direction_on(&pb)?;
    v.add("initializer_negative", neg.energy_at_t_star < 0.0);
    let w = ekeland_on(&pb, rho, cfg.tol, p.restarts, cfg.max_iters, cfg.seed)?;
    let converged = v.add("converged", w.converged());
    v.add("energy_negative", w.energy < 0.0);
    v.add("interior", w.beta_norm < rho);
    let sphere = sphere_infimum_on(&pb, rho, p.sphere_samples, cfg.seed)?;
    v.add("sphere_above_half_gamma", sphere.infimum >= 0.5 * ls.gamma);

    let results = json!({
        "embedding": est,
        "rho": rho,
        "lambda_star": ls,
        "lambda": lambda,
        "negative_direction": {
            "t_star": neg.t_star,
            "energy_at_t_star": neg.energy_at_t_star,
            "epsilon0": neg.epsilon0,
            "delta": neg.delta,
            "support": neg.support,
        },
        "critical_point": point_json(&pb, &w),
        "sphere": { "radius": rho, "infimum": sphere.infimum, "values": sphere.values },
    });
    let report = envelope(cfg, Some(&pb), results, v, w.iterations);
    Ok(RunOutput {
        report,
        traces: vec![("ekeland".into(), w.trace.clone())],
        solutions: vec![("solution.csv".into(), w.u.clone())],
        mesh: Some(pb.mesh().clone()),
        exit_code: if converged { 0 } else { 1 },
    })
}

const REGIME_NOTE: &str = "the superlinear (p⁺ < q⁻) and sublinear (q⁻ < p⁻ < q⁺ < p⁺) hypotheses cannot hold \
for one exponent pair, so the positive-energy and negative-energy solutions are computed for two specs";

fn two_solutions(cfg: &ExperimentConfig, spec: &ProblemSpec) -> Result<RunOutput> {
    let sub_doc = cfg.spec_sub.as_ref().ok_or_else(|| Error::Config("two-solutions needs `spec_sub`".into()))?;
    let sup = Problem::new(spec)?;
    sup.regime.require(Regime::Superlinear)?;
    let sub = Problem::new(&ProblemSpec::from_document(sub_doc)?)?;
    sub.regime.require(Regime::Sublinear)?;
    let p = &cfg.params;
    let opts = TwoSolutionOptions {
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        n_path: p.n_path,
        restarts: p.restarts,
        embedding_trials: p.trials,
        lambda_fraction: p.lambda_fraction,
        seed: cfg.seed,
    };
    let two = two_solutions_on(&sup, &sub, &opts)?;
    let sub = sub.with_lambda(two.lambda_sub)?;
    let (mp, w) = (&two.mountain_pass, &two.minimizer);
    let mut v = Verdicts::new();
    v.add("sign_separation", two.separated);
    let ok = v.add("mountain_pass_converged", mp.converged()) & v.add("minimizer_converged", w.converged());
    let results = json!({
        "c_upper": mp.energy,
        "c_lower": w.energy,
        "mountain_pass": point_json(&sup, mp),
        "minimizer": point_json(&sub, w),
        "lambda_sub": two.lambda_sub,
        "rho": two.rho,
        "abs_gaps": two.abs_gaps,
        "sub_regime": sub.regime,
        "regime_incompatibility": REGIME_NOTE,
    });
    let report = envelope(cfg, Some(&sup), results, v, mp.iterations + w.iterations);
    Ok(RunOutput {
        report,
        traces: vec![("mountain_pass".into(), mp.trace.clone()), ("minimizer".into(), w.trace.clone())],
        solutions: vec![("solution.csv".into(), mp.u.clone()), ("solution_minimizer.csv".into(), w.u.clone())],
        mesh: Some(sup.mesh().clone()),
        exit_code: if ok { 0 } else { 1 },
    })
}

fn fountain(cfg: &ExperimentConfig, spec: &ProblemSpec) -> Result<RunOutput> {
    let pb = Problem::new(spec)?;
    pb.regime.require(Regime::Superlinear)?;
    let p = &cfg.params;
    let diag = fountain_on(&pb, p.k_max, cfg.seed)?;
    let mult = multiplicity_on(&pb, p.count, &mp_options(cfg), 4)?;

    let mut v = Verdicts::new();
    v.add("alpha_nonincreasing", diag.alpha_nonincreasing());
    v.add("b_above_lower_bound", diag.b_above_bound(1e-6).iter().all(|&b| b));
    v.add("a_nonpositive", diag.a_nonpositive().iter().all(|&b| b));
    let found = v.add("multiplicity_complete", mult.complete);
    v.add("energies_increasing", mult.points.windows(2).all(|w| w[0].energy < w[1].energy));
    v.add("residuals_within_tol", mult.points.iter().all(|c| c.residual <= cfg.tol));

    let points: Vec<Value> = mult.points.iter().map(|c| point_json(&pb, c)).collect();
    let results = json!({
        "diagnostics": diag,
        "alpha_ratio": diag.alpha.last().unwrap_or(&f64::NAN) / diag.alpha[0],
        "critical_points": points,
        "directions": mult.directions,
    });
    let iterations = mult.points.iter().map(|c| c.iterations).sum();
    let report = envelope(cfg, Some(&pb), results, v, iterations);
    let mut out = RunOutput {
        report,
        traces: mult.points.iter().enumerate().map(|(i, c)| (format!("critical_{i}"), c.trace.clone())).collect(),
        solutions: mult.points.iter().enumerate().map(|(i, c)| (format!("critical_{i}.csv"), c.u.clone())).collect(),
        mesh: Some(pb.mesh().clone()),
        exit_code: if found { 0 } else { 1 },
    };
    if let Some(first) = mult.points.first() {
        out.solutions.insert(0, ("solution.csv".into(), first.u.clone()));
    }
    Ok(out)
}

/// The value of a spatially constant field, or a configuration error.
fn constant(f: &crate::fields::FieldExpr, name: &str, pb: &Problem) -> Result<f64> {
    let (lo, hi) = exponent_bounds(f, &pb.quad)?;
    if lo == hi {
        Ok(lo)
    } else {
        Err(Error::Config(format!("the linear oracle needs a constant `{name}`, found range [{lo}, {hi}]")))
    }
}

fn oracle(cfg: &ExperimentConfig, spec: &ProblemSpec) -> Result<RunOutput> {
    let pb = Problem::new(spec)?;
    let [a, b, p, q, beta] = [("a", &spec.a), ("b", &spec.b), ("p", &spec.p), ("q", &spec.q), ("beta", &spec.beta)]
        .map(|(n, f)| constant(f, n, &pb));
    let (a, b, p, q, beta) = (a?, b?, p?, q?, beta?);
    if p != 2.0 || q != 2.0 {
        return Err(Error::Config(format!("the linear oracle needs p = q = 2, found p = {p}, q = {q}")));
    }
    let d = &spec.domain;
    let exact = rectangle_robin_eigenvalue(d.x1 - d.x0, d.y1 - d.y0, a, b, beta)?;
    let mut levels = Vec::new();
    let mut errors = Vec::new();
    let mut finest = None;
    for &n in &cfg.params.mesh_sizes {
        let mesh = Arc::new(DomainSpec { nx: n, ny: n, ..d.clone() }.build_mesh()?);
        let mut pairs = linear_robin_eigs(&mesh, a, b, beta, cfg.params.eigen_count)?;
        let l1 = pairs[0].value;
        errors.push((l1 - exact).abs() / exact);
        levels.push(json!({
            "n": n,
            "eigenvalues": pairs.iter().map(|p| p.value).collect::<Vec<_>>(),
            "relative_error": (l1 - exact).abs() / exact,
        }));
        finest = Some((mesh, pairs.swap_remove(0)));
    }
    let sizes = &cfg.params.mesh_sizes;
    let orders: Vec<f64> = (1..sizes.len())
        .map(|i| (errors[i - 1] / errors[i]).ln() / (sizes[i] as f64 / sizes[i - 1] as f64).ln())
        .collect();
    let mut v = Verdicts::new();
    v.add("finest_within_2_percent", errors.last().is_some_and(|&e| e <= 0.02));
    v.add("order_at_least_1_8", orders.iter().all(|&o| o >= 1.8));
    let results = json!({ "exact": exact, "levels": levels, "orders": orders });
    let report = envelope(cfg, Some(&pb), results, v, 0);
    let (mesh, pair) = finest.expect("mesh_sizes is nonempty");
    Ok(RunOutput { report, solutions: vec![("solution.csv".into(), pair.vector)], traces: vec![], mesh: Some(mesh), exit_code: 0 })
}

fn embed_const(cfg: &ExperimentConfig, spec: &ProblemSpec) -> Result<RunOutput> {
    let pb = Problem::new(spec)?;
    let est = estimate_embedding_on(&pb, cfg.params.trials, cfg.seed)?;
    let rho = cfg.params.rho.unwrap_or_else(|| default_rho(est.inflated));
    let mut v = Verdicts::new();
    let ls = if pb.regime.regime == Regime::Sublinear {
        Some(lambda_star(pb.regime.p_plus, pb.regime.q_minus, rho, est.inflated)?)
    } else {
        None
    };
    let consts = [&spec.a, &spec.b, &spec.p, &spec.q, &spec.beta].map(|f| exponent_bounds(f, &pb.quad));
    let linear = match consts {
        [Ok(a), Ok(b), Ok(p), Ok(q), Ok(beta)]
            if [a, b, p, q, beta].iter().all(|r| r.0 == r.1) && p.0 == 2.0 && q.0 == 2.0 =>
        {
            let pairs = linear_robin_eigs(pb.mesh(), a.0, b.0, beta.0, 1)?;
            let expected = pairs[0].value.powf(-0.5);
            v.add("rayleigh_identity_within_5_percent", (est.raw - expected).abs() <= 0.05 * expected);
            Some(json!({ "lambda1": pairs[0].value, "expected": expected }))
        }
        _ => None,
    };
    let results = json!({ "embedding": est, "rho": rho, "lambda_star": ls, "linear": linear });
    let report = envelope(cfg, Some(&pb), results, v, cfg.params.trials);
    let u = pb.function(est.maximizer.clone())?;
    Ok(RunOutput { report, solutions: vec![("solution.csv".into(), u)], traces: vec![], mesh: Some(pb.mesh().clone()), exit_code: 0 })
}
