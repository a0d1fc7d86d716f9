use std::f64::consts::PI;

use serde_json::{json, Value};

use cylmatter::decompose::{DecompError, Decomposer};
use cylmatter::growth::{lambda_phi, longrange_growth, telescoping_family, theta_max, GrowthError, PowerLawSpec};
use cylmatter::lattice::{empirical_tv, run_branches, ExperimentSpec, LedgerPolicy, SimError};
use cylmatter::matter::{coarse_grain_threshold_1d, iterate_recursion, matter_bounds, MatterError};
use cylmatter::oracle::{exact_distribution, OracleError};
use cylmatter::statespace::{max_input_radius_bspace_with, SearchOptions, StateSpaceError};

use crate::output::{Format, Header, Table};
use crate::{Command, Sampling};

/// Search tolerance on the B-space input radius.
const BSPACE_RADIUS_TOL: f64 = 1e-5;

#[derive(Debug)]
pub enum Failure {
    Infeasible(String),
    Solver(String),
    BadInput(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Infeasible(_) => 2,
            Failure::Solver(_) => 3,
            Failure::BadInput(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Infeasible(m) | Failure::Solver(m) | Failure::BadInput(m) => m,
        }
    }
}

impl From<DecompError> for Failure {
    fn from(e: DecompError) -> Self {
        match e {
            DecompError::InfeasibleRequest { .. } => Failure::Infeasible(e.to_string()),
            DecompError::NonExtremalInput(_) | DecompError::InvalidRequest(_) => Failure::BadInput(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Infeasible { .. } => Failure::Infeasible(e.to_string()),
            SimError::InvalidSpec(_) => Failure::BadInput(e.to_string()),
            SimError::Decomposition(d) => d.into(),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<GrowthError> for Failure {
    fn from(e: GrowthError) -> Self {
        Failure::BadInput(e.to_string())
    }
}

impl From<MatterError> for Failure {
    fn from(e: MatterError) -> Self {
        Failure::BadInput(e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Spec(s) => s.into(),
            other => Failure::BadInput(other.to_string()),
        }
    }
}

impl From<StateSpaceError> for Failure {
    fn from(e: StateSpaceError) -> Self {
        match e {
            StateSpaceError::Decomposition(d) => d.into(),
            other => Failure::BadInput(other.to_string()),
        }
    }
}

pub fn run(cmd: &Command, format: Format) -> Result<Table, Failure> {
    match cmd {
        Command::Growth { points, .. } => growth(*points),
        Command::PhaseDiagram { delta, points, temperature, .. } => phase_diagram(delta, *points, *temperature),
        Command::Longrange { alpha: Some(alpha), dim, cutoff, .. } => longrange_report(*alpha, *dim, *cutoff),
        Command::Longrange { alpha: None, points, alpha_max, .. } => alpha_sweep(*points, *alpha_max),
        Command::Simulate { sampling, .. } => simulate(sampling, format),
        Command::Verify { sampling, threshold, .. } => verify(sampling, *threshold),
        Command::Thresholds { recursion: Some(r), r1, steps, .. } => recursion(*r, r1.unwrap_or(*r), *steps),
        Command::Thresholds { dim, delta, literal, .. } => thresholds(*dim, *delta, *literal),
        Command::SearchSpace { delta, phi, solver, .. } => search_space(*delta, *phi, solver.discretization, solver.tolerance),
    }
}

fn need_points(points: usize, min: usize) -> Result<(), Failure> {
    if points < min {
        return Err(Failure::BadInput(format!("--points must be at least {min}")));
    }
    Ok(())
}

fn growth(points: usize) -> Result<Table, Failure> {
    need_points(points, 1)?;
    let mut t = Table::new(Header::new("growth").with("points", points), vec!["phi", "lambda"]);
    for k in 0..points {
        let phi = 2.0 * PI * k as f64 / points as f64;
        t.push(vec![json!(phi), json!(lambda_phi(phi))]);
    }
    Ok(t)
}

fn phase_diagram(deltas: &[u32], points: usize, temperature: f64) -> Result<Table, Failure> {
    need_points(points, 2)?;
    if deltas.iter().any(|&d| d == 0) || !(temperature >= 0.0) {
        return Err(Failure::BadInput("--delta must be positive and --temperature non-negative".into()));
    }
    let header = Header::new("phase-diagram").with("delta", json!(deltas)).with("points", points).with("temperature", temperature);
    let mut t = Table::new(header, vec!["delta", "phi", "theta_max_deg"]);
    for &d in deltas {
        for k in 0..points {
            let phi = PI * k as f64 / (points - 1) as f64;
            t.push(vec![json!(d), json!(phi), json!(theta_max(phi, d, temperature).to_degrees())]);
        }
    }
    Ok(t)
}

fn alpha_sweep(points: usize, alpha_max: f64) -> Result<Table, Failure> {
    need_points(points, 1)?;
    if !(alpha_max > 1.5) {
        return Err(Failure::BadInput("--alpha-max must exceed 1.5".into()));
    }
    let header = Header::new("longrange").with("dim", 1).with("points", points).with("alpha_max", alpha_max);
    let mut t = Table::new(header, vec!["alpha", "theta_deg", "r0"]);
    for k in 1..=points {
        let alpha = 1.5 + (alpha_max - 1.5) * k as f64 / points as f64;
        let fam = telescoping_family(alpha)?;
        t.push(vec![json!(alpha), json!(fam.theta().to_degrees()), json!(fam.r0)]);
    }
    Ok(t)
}

fn longrange_report(alpha: f64, dim: u32, cutoff: u64) -> Result<Table, Failure> {
    let rep = longrange_growth(&PowerLawSpec::cz_pinned(alpha, dim, cutoff))?;
    let header = Header::new("longrange").with("alpha", alpha).with("dim", dim).with("cutoff", cutoff);
    let mut t = Table::new(header, vec!["alpha", "dim", "cutoff", "ln_lambda_tot", "verdict", "tail_bound", "theta_deg"]);
    let theta = (-rep.ln_lambda_tot).exp().min(1.0).asin().to_degrees();
    let verdict = format!("{:?}", rep.verdict).to_lowercase();
    t.push(vec![json!(alpha), json!(dim), json!(cutoff), json!(rep.ln_lambda_tot), json!(verdict), json!(rep.tail_bound), json!(theta)]);
    Ok(t)
}

fn load_spec(s: &Sampling) -> Result<ExperimentSpec, Failure> {
    let text = std::fs::read_to_string(&s.spec).map_err(|e| Failure::BadInput(format!("{}: {e}", s.spec.display())))?;
    let mut spec: ExperimentSpec = serde_json::from_str(&text).map_err(|e| Failure::BadInput(format!("{}: {e}", s.spec.display())))?;
    if let Some(n) = s.samples {
        spec.sampler.num_samples = n;
    }
    if let Some(seed) = s.seed {
        spec.sampler.seed = seed;
    }
    if let Some(n) = s.discretization {
        spec.sampler.discretization = n;
    }
    if let Some(tol) = s.tolerance {
        spec.sampler.tolerance = tol;
    }
    match s.policy.as_deref() {
        Some("measurement-aware") => spec.ledger_policy = LedgerPolicy::MeasurementAware,
        Some("static") => spec.ledger_policy = LedgerPolicy::Static,
        _ => {}
    }
    if spec.sampler.discretization == 0 || !(spec.sampler.tolerance > 0.0) {
        return Err(Failure::BadInput("discretization and tolerance must be positive".into()));
    }
    spec.validate()?;
    Ok(spec)
}

fn sampling_header(command: &'static str, s: &Sampling, spec: &ExperimentSpec) -> Header {
    let policy = match spec.ledger_policy {
        LedgerPolicy::Static => "static",
        LedgerPolicy::MeasurementAware => "measurement-aware",
    };
    Header::new(command)
        .with("spec", s.spec.display().to_string())
        .with("seed", spec.sampler.seed)
        .with("samples", spec.sampler.num_samples)
        .with("N", spec.sampler.discretization)
        .with("tolerance", spec.sampler.tolerance)
        .with("policy", policy)
}

fn simulate(s: &Sampling, format: Format) -> Result<Table, Failure> {
    let spec = load_spec(s)?;
    let run = run_branches(&spec, &Decomposer::new())?;
    let header = sampling_header("simulate", s, &spec);
    let hist = run.histogram();
    let histogram: serde_json::Map<String, Value> = hist.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut t = if format == Format::Jsonl {
        let mut t = Table::new(header, vec!["sample", "outcome"]);
        for (i, o) in run.outcomes.iter().enumerate() {
            t.push(vec![json!(i), json!(o)]);
        }
        t.summary("histogram", Value::Object(histogram))
    } else {
        let total = run.outcomes.len().max(1) as f64;
        let mut t = Table::new(header, vec!["outcome", "count", "frequency"]);
        for (k, v) in &hist {
            t.push(vec![json!(k), json!(v), json!(*v as f64 / total)]);
        }
        t
    };
    t = t
        .summary("lp_gates", run.stats.lp_gates)
        .summary("zero_radius_gates", run.stats.zero_radius_gates)
        .summary("identity_gates", run.stats.identity_gates)
        .summary("cached_decompositions", run.stats.cached_decompositions)
        .summary("tv_budget", run.stats.tv_budget)
        .summary("final_radii", json!(run.ledger.final_radii));
    Ok(t)
}

fn verify(s: &Sampling, threshold: f64) -> Result<Table, Failure> {
    let spec = load_spec(s)?;
    let exact = exact_distribution(&spec)?;
    let run = run_branches(&spec, &Decomposer::new())?;
    let tv = empirical_tv(&run.histogram(), &exact)?;
    let header = sampling_header("verify", s, &spec).with("threshold", threshold);
    let mut t = Table::new(header, vec!["samples", "outcomes_sampled", "outcomes_exact", "tv", "pass"]);
    t.push(vec![
        json!(run.outcomes.len()),
        json!(run.histogram().len()),
        json!(exact.len()),
        json!(tv),
        json!(tv <= threshold),
    ]);
    Ok(t.summary("negative_probabilities", run.stats.negative_probabilities))
}

fn thresholds(dim: u32, delta: Option<u32>, literal: bool) -> Result<Table, Failure> {
    let mut header = Header::new("thresholds").with("dim", dim).with("literal", literal);
    if let Some(d) = delta {
        header = header.with("delta", d);
    }
    let mut cols = vec!["dim", "lower", "upper"];
    if literal {
        cols.push("lower_literal");
    }
    let mut t = Table::new(header, cols);
    for d in 1..=dim.max(1) {
        let b = matter_bounds(d, delta)?;
        let mut row = vec![json!(d), json!(b.lower), json!(b.upper)];
        if literal {
            row.push(json!(b.lower_literal));
        }
        t.push(row);
    }
    Ok(t.summary("chain_threshold", 0.25).summary("coarse_grain_threshold_1d", coarse_grain_threshold_1d()))
}

fn recursion(r: f64, r1: f64, steps: usize) -> Result<Table, Failure> {
    if !(r >= 0.0 && r1 >= 0.0) {
        return Err(Failure::BadInput("--recursion and --r1 must be non-negative".into()));
    }
    let rep = iterate_recursion(r, r1, steps);
    let header = Header::new("thresholds").with("recursion", r).with("r1", r1).with("steps", steps);
    let mut t = Table::new(header, vec!["n", "R_n"]);
    for (k, v) in rep.trajectory.iter().enumerate() {
        t.push(vec![json!(k + 1), json!(v)]);
    }
    Ok(t.summary("verdict", serde_json::to_value(rep.verdict).unwrap_or(Value::Null)))
}

fn search_space(delta: u32, phi: f64, n: usize, tolerance: f64) -> Result<Table, Failure> {
    if n == 0 || !(tolerance > 0.0) {
        return Err(Failure::BadInput("discretization and tolerance must be positive".into()));
    }
    let opts = SearchOptions { n, tol: 1e-7, lp_tol: tolerance };
    let (best, rows) = max_input_radius_bspace_with(delta, phi, &opts, BSPACE_RADIUS_TOL)?;
    let header = Header::new("search-space").with("delta", delta).with("phi", phi).with("N", n).with("tolerance", tolerance);
    let mut t = Table::new(header, vec!["r", "feasible", "r1"]);
    for row in rows {
        t.push(vec![json!(row.r), json!(row.feasible), json!(row.r1)]);
    }
    Ok(t.summary("max_input_radius", best).summary("cylinder_baseline", lambda_phi(phi).powi(-(delta as i32))))
}
