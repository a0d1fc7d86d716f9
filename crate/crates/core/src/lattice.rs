//! Experiment specifications, radius ledgers and the Monte-Carlo branch sampler.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch::{
    extremal_split, fold_angle, measure_prob, normalize_angle, phasing, post_measurement_state, BlochVector,
    CylinderSpace, MeasurementMode, MeasurementSpec, NEGATIVE_PROBABILITY_TOL,
};
use crate::decompose::{
    DecompError, DecompositionPath, DecompositionRequest, DecompositionTerm, Decomposer, CYLINDER_SLACK,
    DEFAULT_DISCRETIZATION, DEFAULT_TOLERANCE,
};
use crate::growth::lambda_phi;

pub const SPEC_VERSION: u32 = 1;
/// Slack on the unit-radius measurability test.
pub const MEASURABLE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("spec is not simulable: node {node} has radius {radius} at schedule step {step}")]
    Infeasible { step: usize, node: usize, radius: f64 },
    #[error("negative branch probability {p} in sample {sample} at schedule step {step}")]
    NegativeBranchProbability { sample: u64, step: usize, p: f64 },
    #[error("branch vector of node {node} has radius {radius} above its ledger radius {bound}")]
    BranchRadiusExceeded { node: usize, radius: f64, bound: f64 },
    #[error(transparent)]
    Decomposition(#[from] DecompError),
    #[error("outcome alphabets differ: {0}")]
    AlphabetMismatch(String),
}

fn default_one() -> f64 {
    1.0
}

fn default_version() -> u32 {
    SPEC_VERSION
}

/// Per-node input: pure state at polar angle `theta`, then all components
/// scaled by `shrink` (thermal noise) and the transverse ones by `dephasing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputState {
    pub theta: f64,
    #[serde(default)]
    pub azimuth: f64,
    #[serde(default = "default_one")]
    pub shrink: f64,
    #[serde(default = "default_one")]
    pub dephasing: f64,
}

impl InputState {
    pub fn pure(theta: f64) -> Self {
        Self { theta, azimuth: 0.0, shrink: 1.0, dephasing: 1.0 }
    }

    pub fn bloch(&self) -> BlochVector {
        phasing(&BlochVector::pure(self.theta, self.azimuth).scaled(self.shrink), self.dephasing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub edge: [usize; 2],
    pub phi: f64,
    #[serde(default)]
    pub round: u32,
}

/// Power-law interactions on a rectilinear lattice with row-major node ids:
/// every pair at ℓ¹ distance `l ≤ cutoff` receives phase `scale · l^{−α}`,
/// where `scale` is `nn_phase` if given and `time` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawGates {
    pub dims: Vec<usize>,
    pub alpha: f64,
    #[serde(default)]
    pub time: f64,
    #[serde(default)]
    pub nn_phase: Option<f64>,
    pub cutoff: usize,
    #[serde(default)]
    pub round: u32,
}

impl PowerLawGates {
    pub fn expand(&self) -> Vec<GateOp> {
        let n: usize = self.dims.iter().product();
        let coords = |mut k: usize| {
            let mut c = vec![0usize; self.dims.len()];
            for (d, &len) in self.dims.iter().enumerate().rev() {
                c[d] = k % len;
                k /= len;
            }
            c
        };
        let scale = self.nn_phase.unwrap_or(self.time);
        let mut out = Vec::new();
        for a in 0..n {
            let ca = coords(a);
            for b in a + 1..n {
                let cb = coords(b);
                let l: usize = ca.iter().zip(&cb).map(|(x, y)| x.abs_diff(*y)).sum();
                if l <= self.cutoff {
                    out.push(GateOp { edge: [a, b], phi: normalize_angle(scale * (l as f64).powf(-self.alpha)), round: self.round });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateList {
    Explicit(Vec<GateOp>),
    PowerLaw { power_law: PowerLawGates },
}

impl Default for GateList {
    fn default() -> Self {
        GateList::Explicit(Vec::new())
    }
}

impl GateList {
    pub fn expand(&self) -> Vec<GateOp> {
        match self {
            GateList::Explicit(g) => g.clone(),
            GateList::PowerLaw { power_law } => power_law.expand(),
        }
    }
}

/// Measurement angle chosen from the parity of earlier outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRule {
    /// Schedule indices whose outcomes enter the parity.
    pub parity_of: Vec<usize>,
    /// Angle for even and odd parity.
    pub omega: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub node: usize,
    pub measurement: MeasurementSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveRule>,
    #[serde(default)]
    pub round: u32,
}

impl ScheduleStep {
    pub fn new(node: usize, measurement: MeasurementSpec) -> Self {
        Self { node, measurement, adaptive: None, round: 0 }
    }

    /// Measurement with the adaptive angle resolved from `outcomes` (indexed by schedule step).
    pub fn resolve(&self, outcomes: &[i8]) -> MeasurementSpec {
        match &self.adaptive {
            None => self.measurement,
            Some(rule) => {
                let odd = rule.parity_of.iter().filter(|&&k| outcomes[k] < 0).count() % 2;
                self.measurement.with_omega(rule.omega[odd])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub num_samples: u64,
    pub seed: u64,
    #[serde(default = "default_discretization")]
    pub discretization: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_discretization() -> usize {
    DEFAULT_DISCRETIZATION
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { num_samples: 10_000, seed: 0, discretization: DEFAULT_DISCRETIZATION, tolerance: DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LedgerPolicy {
    #[default]
    Static,
    MeasurementAware,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub graph: Vec<[usize; 2]>,
    pub inputs: Vec<InputState>,
    #[serde(default)]
    pub gates: GateList,
    #[serde(default)]
    pub schedule: Vec<ScheduleStep>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub ledger_policy: LedgerPolicy,
}

/// One step of the chronological event list: gates of a round, then its measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Gate(usize),
    Measure(usize),
}

impl ExperimentSpec {
    pub fn new(inputs: Vec<InputState>, gates: Vec<GateOp>, schedule: Vec<ScheduleStep>) -> Self {
        Self {
            version: SPEC_VERSION,
            graph: gates.iter().map(|g| g.edge).collect(),
            inputs,
            gates: GateList::Explicit(gates),
            schedule,
            sampler: SamplerConfig::default(),
            ledger_policy: LedgerPolicy::Static,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.inputs.len()
    }

    pub fn gate_list(&self) -> Vec<GateOp> {
        self.gates.expand()
    }

    /// Maximum degree over the union of graph edges and gate edges.
    pub fn max_degree(&self) -> usize {
        let mut edges: Vec<[usize; 2]> = self
            .graph
            .iter()
            .chain(self.gate_list().iter().map(|g| &g.edge))
            .map(|e| [e[0].min(e[1]), e[0].max(e[1])])
            .collect();
        edges.sort();
        edges.dedup();
        let mut deg = vec![0usize; self.num_nodes()];
        for e in edges {
            if e[0] < deg.len() && e[1] < deg.len() {
                deg[e[0]] += 1;
                deg[e[1]] += 1;
            }
        }
        deg.into_iter().max().unwrap_or(0)
    }

    pub fn events(&self) -> Vec<Event> {
        let gates = self.gate_list();
        let mut rounds: Vec<u32> = gates.iter().map(|g| g.round).chain(self.schedule.iter().map(|s| s.round)).collect();
        rounds.sort();
        rounds.dedup();
        let mut out = Vec::with_capacity(gates.len() + self.schedule.len());
        for r in rounds {
            out.extend(gates.iter().enumerate().filter(|(_, g)| g.round == r).map(|(k, _)| Event::Gate(k)));
            out.extend(self.schedule.iter().enumerate().filter(|(_, s)| s.round == r).map(|(k, _)| Event::Measure(k)));
        }
        out
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidSpec(m));
        if self.version != SPEC_VERSION {
            return bad(format!("unsupported spec version {}", self.version));
        }
        let n = self.num_nodes();
        if n == 0 {
            return bad("no nodes".into());
        }
        for (k, inp) in self.inputs.iter().enumerate() {
            let ok = inp.theta.is_finite()
                && inp.azimuth.is_finite()
                && inp.shrink > 0.0
                && inp.shrink <= 1.0
                && (0.0..=1.0).contains(&inp.dephasing);
            if !ok {
                return bad(format!("input {k} has invalid parameters"));
            }
        }
        for e in &self.graph {
            if e[0] >= n || e[1] >= n || e[0] == e[1] {
                return bad(format!("graph edge {e:?} is invalid"));
            }
        }
        if let GateList::PowerLaw { power_law } = &self.gates {
            if power_law.dims.iter().product::<usize>() != n {
                return bad("power-law lattice size does not match the number of inputs".into());
            }
            if !(power_law.alpha > 0.0) {
                return bad("power-law alpha must be positive".into());
            }
        }
        let gates = self.gate_list();
        for g in &gates {
            if g.edge[0] >= n || g.edge[1] >= n || g.edge[0] == g.edge[1] || !g.phi.is_finite() {
                return bad(format!("gate on edge {:?} is invalid", g.edge));
            }
        }
        let mut gone = vec![false; n];
        let mut measured = vec![false; self.schedule.len()];
        for ev in self.events() {
            match ev {
                Event::Gate(k) => {
                    let e = gates[k].edge;
                    if gone[e[0]] || gone[e[1]] {
                        return bad(format!("gate {k} acts on a destructively measured node"));
                    }
                }
                Event::Measure(k) => {
                    let step = &self.schedule[k];
                    if step.node >= n {
                        return bad(format!("schedule step {k} measures unknown node {}", step.node));
                    }
                    if gone[step.node] {
                        return bad(format!("schedule step {k} measures a destroyed node"));
                    }
                    if let Some(rule) = &step.adaptive {
                        if let Some(&bad_ref) = rule.parity_of.iter().find(|&&j| j >= measured.len() || !measured[j]) {
                            return bad(format!("adaptive rule of step {k} refers to step {bad_ref}, which is not measured earlier"));
                        }
                    }
                    if step.measurement.mode == MeasurementMode::Destructive {
                        gone[step.node] = true;
                    }
                    measured[k] = true;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Radius ledger

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PlanStep {
    /// Gate on `(a, b)` growing the allowed radii from `*_in` to `*_out`.
    Gate { a: usize, b: usize, phi: f64, ra_in: f64, rb_in: f64, ra_out: f64, rb_out: f64 },
    /// Measurement of schedule step `step`; `radius` is the node's allowed radius before it.
    Measure { step: usize, node: usize, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum LedgerVerdict {
    Simulable,
    Infeasible { step: usize, node: usize, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub policy: LedgerPolicy,
    pub plan: Vec<PlanStep>,
    pub final_radii: Vec<f64>,
    pub verdict: LedgerVerdict,
}

impl LedgerReport {
    pub fn simulable(&self) -> bool {
        self.verdict == LedgerVerdict::Simulable
    }

    /// Allowed radius of each node just before each of its measurements, by schedule step.
    pub fn measurement_radii(&self) -> BTreeMap<usize, f64> {
        self.plan
            .iter()
            .filter_map(|p| match *p {
                PlanStep::Measure { step, radius, .. } => Some((step, radius)),
                _ => None,
            })
            .collect()
    }
}

struct LedgerState {
    radii: Vec<f64>,
    plan: Vec<PlanStep>,
    verdict: LedgerVerdict,
}

impl LedgerState {
    fn gate(&mut self, a: usize, b: usize, phi: f64, grow: f64) {
        let (ra_in, rb_in) = (self.radii[a], self.radii[b]);
        let (ra_out, rb_out) = (ra_in * grow, rb_in * grow);
        self.radii[a] = ra_out;
        self.radii[b] = rb_out;
        self.plan.push(PlanStep::Gate { a, b, phi, ra_in, rb_in, ra_out, rb_out });
    }

    fn measure(&mut self, step: usize, node: usize) {
        let radius = self.radii[node];
        self.plan.push(PlanStep::Measure { step, node, radius });
        if radius > 1.0 + MEASURABLE_SLACK && self.verdict == LedgerVerdict::Simulable {
            self.verdict = LedgerVerdict::Infeasible { step, node, radius };
        }
    }
}

/// Track the cylinder radius every node needs so that the state stays
/// cylinder separable, and check that measured nodes never exceed radius 1.
pub fn radius_ledger(spec: &ExperimentSpec, policy: LedgerPolicy) -> Result<LedgerReport, SimError> {
    spec.validate()?;
    let gates = spec.gate_list();
    let mut st = LedgerState {
        radii: spec.inputs.iter().map(|i| i.bloch().transverse_radius()).collect(),
        plan: Vec::new(),
        verdict: LedgerVerdict::Simulable,
    };
    match policy {
        LedgerPolicy::Static => {
            for ev in spec.events() {
                match ev {
                    Event::Gate(k) => {
                        let g = gates[k];
                        st.gate(g.edge[0], g.edge[1], normalize_angle(g.phi), lambda_phi(g.phi));
                    }
                    Event::Measure(k) => st.measure(k, spec.schedule[k].node),
                }
            }
        }
        LedgerPolicy::MeasurementAware => {
            // Pending merged phase per unordered edge, in first-seen order.
            let mut pending: Vec<([usize; 2], f64)> = Vec::new();
            let flush = |st: &mut LedgerState, pending: &mut Vec<([usize; 2], f64)>, node: Option<usize>| {
                let mut keep = Vec::with_capacity(pending.len());
                for (e, phi) in pending.drain(..) {
                    if node.map_or(true, |v| e.contains(&v)) {
                        let phi = normalize_angle(phi);
                        let trivial = st.radii[e[0]] == 0.0 || st.radii[e[1]] == 0.0 || fold_angle(phi) == 0.0;
                        let grow = if trivial { 1.0 } else { lambda_phi(phi) };
                        st.gate(e[0], e[1], phi, grow);
                    } else {
                        keep.push((e, phi));
                    }
                }
                *pending = keep;
            };
            for ev in spec.events() {
                match ev {
                    Event::Gate(k) => {
                        let g = gates[k];
                        let key = [g.edge[0], g.edge[1]];
                        let rev = [g.edge[1], g.edge[0]];
                        if let Some(p) = pending.iter_mut().find(|(e, _)| *e == key || *e == rev) {
                            p.1 += g.phi;
                        } else {
                            pending.push((key, g.phi));
                        }
                    }
                    Event::Measure(k) => {
                        let node = spec.schedule[k].node;
                        flush(&mut st, &mut pending, Some(node));
                        st.measure(k, node);
                        st.radii[node] = 0.0;
                    }
                }
            }
            flush(&mut st, &mut pending, None);
        }
    }
    Ok(LedgerReport { policy, plan: st.plan, final_radii: st.radii, verdict: st.verdict })
}

// ---------------------------------------------------------------------------
// Branch sampler

/// Per-node state of one sampled branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub vectors: Vec<BlochVector>,
    /// Sum of the logs of the sampled term weights, for diagnostics.
    pub log_weight: f64,
    /// Outcomes by schedule step (0 while unmeasured).
    pub outcomes: Vec<i8>,
}

#[derive(Debug, Default)]
struct Counters {
    zero_radius: AtomicU64,
    identity: AtomicU64,
    linear_program: AtomicU64,
    negative: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SamplerStats {
    pub zero_radius_gates: u64,
    pub identity_gates: u64,
    pub lp_gates: u64,
    pub negative_probabilities: u64,
    pub cached_decompositions: usize,
    /// Conservative accumulation of decomposition residuals into the TV budget.
    pub tv_budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub outcomes: Vec<String>,
    pub ledger: LedgerReport,
    pub stats: SamplerStats,
}

impl SampleRun {
    pub fn histogram(&self) -> BTreeMap<String, u64> {
        histogram(&self.outcomes)
    }
}

pub fn histogram(outcomes: &[String]) -> BTreeMap<String, u64> {
    let mut h = BTreeMap::new();
    for o in outcomes {
        *h.entry(o.clone()).or_insert(0) += 1;
    }
    h
}

fn outcome_string(outcomes: &[i8]) -> String {
    outcomes.iter().map(|&o| if o >= 0 { '+' } else { '-' }).collect()
}

fn pick<'a>(terms: &'a [DecompositionTerm], rng: &mut ChaCha8Rng) -> &'a DecompositionTerm {
    let total: f64 = terms.iter().map(|t| t.weight).sum();
    let mut u = rng.random::<f64>() * total;
    for t in terms {
        u -= t.weight;
        if u < 0.0 {
            return t;
        }
    }
    &terms[terms.len() - 1]
}

fn check_radius(node: usize, v: &BlochVector, bound: f64) -> Result<(), SimError> {
    let radius = v.transverse_radius();
    if radius > bound + CYLINDER_SLACK {
        return Err(SimError::BranchRadiusExceeded { node, radius, bound });
    }
    Ok(())
}

fn sample_one(
    spec: &ExperimentSpec,
    plan: &[PlanStep],
    decomposer: &Decomposer,
    counters: &Counters,
    index: u64,
) -> Result<Branch, SimError> {
    let cfg = &spec.sampler;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let mut branch = Branch {
        vectors: Vec::with_capacity(spec.num_nodes()),
        log_weight: 0.0,
        outcomes: vec![0; spec.schedule.len()],
    };
    for inp in &spec.inputs {
        let v = inp.bloch();
        let split = extremal_split(&v, &CylinderSpace::new(v.transverse_radius())).map_err(|e| SimError::InvalidSpec(e.to_string()))?;
        let total: f64 = split.iter().map(|s| s.0).sum();
        let mut u = rng.random::<f64>() * total;
        let mut chosen = split[split.len() - 1];
        for s in &split {
            u -= s.0;
            if u < 0.0 {
                chosen = *s;
                break;
            }
        }
        branch.log_weight += chosen.0.ln();
        branch.vectors.push(chosen.1);
    }
    for step in plan {
        match *step {
            PlanStep::Gate { a, b, phi, ra_out, rb_out, .. } => {
                let req = DecompositionRequest::new(branch.vectors[a], branch.vectors[b], phi, ra_out, rb_out)
                    .with_discretization(cfg.discretization, cfg.tolerance);
                let (terms, path) = decomposer.decompose(&req)?;
                let counter = match path {
                    DecompositionPath::ZeroRadius => &counters.zero_radius,
                    DecompositionPath::Identity => &counters.identity,
                    DecompositionPath::LinearProgram => &counters.linear_program,
                };
                counter.fetch_add(1, Ordering::Relaxed);
                let t = pick(&terms, &mut rng);
                branch.log_weight += t.weight.ln();
                check_radius(a, &t.omega_a, ra_out)?;
                check_radius(b, &t.omega_b, rb_out)?;
                branch.vectors[a] = t.omega_a;
                branch.vectors[b] = t.omega_b;
            }
            PlanStep::Measure { step, node, radius } => {
                check_radius(node, &branch.vectors[node], radius)?;
                let m = spec.schedule[step].resolve(&branch.outcomes);
                let probs = measure_prob(&branch.vectors[node], &m);
                if probs.negative {
                    counters.negative.fetch_add(1, Ordering::Relaxed);
                    let p = probs.plus.min(probs.minus);
                    return Err(SimError::NegativeBranchProbability { sample: index, step, p });
                }
                let plus = probs.plus.clamp(0.0, 1.0);
                let outcome: i8 = if rng.random::<f64>() < plus { 1 } else { -1 };
                branch.outcomes[step] = outcome;
                branch.vectors[node] = post_measurement_state(&m, outcome);
                debug_assert!(probs.plus >= -NEGATIVE_PROBABILITY_TOL);
            }
        }
    }
    Ok(branch)
}

/// Draw `spec.sampler.num_samples` outcome strings (schedule order, `+`/`-`).
pub fn run_branches(spec: &ExperimentSpec, decomposer: &Decomposer) -> Result<SampleRun, SimError> {
    let ledger = radius_ledger(spec, spec.ledger_policy)?;
    if let LedgerVerdict::Infeasible { step, node, radius } = ledger.verdict {
        return Err(SimError::Infeasible { step, node, radius });
    }
    let counters = Counters::default();
    let outcomes: Result<Vec<String>, SimError> = (0..spec.sampler.num_samples)
        .into_par_iter()
        .map(|i| sample_one(spec, &ledger.plan, decomposer, &counters, i).map(|b| outcome_string(&b.outcomes)))
        .collect();
    let outcomes = outcomes?;
    let lp_gates = ledger.plan.iter().filter(|p| matches!(p, PlanStep::Gate { .. })).count();
    let stats = SamplerStats {
        zero_radius_gates: counters.zero_radius.load(Ordering::Relaxed),
        identity_gates: counters.identity.load(Ordering::Relaxed),
        lp_gates: counters.linear_program.load(Ordering::Relaxed),
        negative_probabilities: counters.negative.load(Ordering::Relaxed),
        cached_decompositions: decomposer.cached_entries(),
        tv_budget: lp_gates as f64 * spec.sampler.tolerance,
    };
    Ok(SampleRun { outcomes, ledger, stats })
}

/// Total variation distance between an empirical histogram and an exact distribution.
pub fn empirical_tv(samples: &BTreeMap<String, u64>, exact: &BTreeMap<String, f64>) -> Result<f64, SimError> {
    let len = exact.keys().next().map(|k| k.chars().count());
    let valid = |k: &str| k.chars().all(|c| c == '+' || c == '-');
    for k in samples.keys().chain(exact.keys()) {
        if !valid(k) || Some(k.chars().count()) != len {
            return Err(SimError::AlphabetMismatch(format!("outcome {k:?}")));
        }
    }
    let total: u64 = samples.values().sum();
    if total == 0 {
        return Err(SimError::AlphabetMismatch("no samples".into()));
    }
    let mut keys: Vec<&String> = samples.keys().chain(exact.keys()).collect();
    keys.sort();
    keys.dedup();
    let tv = keys
        .into_iter()
        .map(|k| {
            let p_hat = samples.get(k).copied().unwrap_or(0) as f64 / total as f64;
            (p_hat - exact.get(k).copied().unwrap_or(0.0)).abs()
        })
        .sum::<f64>();
    Ok(0.5 * tv)
}

// ---------------------------------------------------------------------------
// Spec builders

/// Open chain of `n` nodes, CZ-type gates of phase `phi`, every node measured
/// with `measurement`.
pub fn chain_spec(n: usize, theta: f64, phi: f64, measurement: MeasurementSpec) -> ExperimentSpec {
    let gates = (0..n.saturating_sub(1)).map(|k| GateOp { edge: [k, k + 1], phi, round: 0 }).collect();
    let schedule = (0..n).map(|k| ScheduleStep::new(k, measurement)).collect();
    ExperimentSpec::new(vec![InputState::pure(theta); n], gates, schedule)
}

/// Nearest-neighbour edges of a `rows × cols` grid with row-major ids.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<[usize; 2]> {
    let mut e = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let k = r * cols + c;
            if c + 1 < cols {
                e.push([k, k + 1]);
            }
            if r + 1 < rows {
                e.push([k, k + cols]);
            }
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::lambda_cz;
    use std::f64::consts::PI;

    #[test]
    fn chain_ledger_interior_node() {
        let theta = 10f64.to_radians();
        let spec = chain_spec(5, theta, PI, MeasurementSpec::xy(0.0));
        let rep = radius_ledger(&spec, LedgerPolicy::Static).unwrap();
        assert!((rep.final_radii[2] - theta.sin() * lambda_cz().powi(2)).abs() < 1e-12);
        assert!(rep.simulable());
        let limit = lambda_cz().powi(-2).asin();
        assert!((limit.to_degrees() - 13.65).abs() < 0.01);
        let over = chain_spec(5, limit + 1e-3, PI, MeasurementSpec::xy(0.0));
        assert!(!radius_ledger(&over, LedgerPolicy::Static).unwrap().simulable());
    }

    #[test]
    fn star_graph_center_reaches_one() {
        let r0 = lambda_cz().powi(-4);
        let gates = (1..5).map(|k| GateOp { edge: [0, k], phi: PI, round: 0 }).collect();
        let schedule = (0..5).map(|k| ScheduleStep::new(k, MeasurementSpec::xy(0.0))).collect();
        let spec = ExperimentSpec::new(vec![InputState::pure(r0.asin()); 5], gates, schedule);
        let rep = radius_ledger(&spec, LedgerPolicy::Static).unwrap();
        assert!((rep.final_radii[0] - 1.0).abs() < 1e-12);
        assert!(rep.simulable());
    }

    #[test]
    fn identity_gates_keep_radii() {
        let spec = chain_spec(3, 0.7, 0.0, MeasurementSpec::z());
        let rep = radius_ledger(&spec, LedgerPolicy::Static).unwrap();
        for r in rep.final_radii {
            assert!((r - 0.7f64.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn measurement_aware_resets_and_merges() {
        let mut spec = chain_spec(3, 0.3, PI, MeasurementSpec::z().with_mode(MeasurementMode::QuasiDestructive));
        spec.schedule = vec![ScheduleStep { round: 0, ..ScheduleStep::new(0, spec.schedule[0].measurement) }];
        if let GateList::Explicit(g) = &mut spec.gates {
            g.iter_mut().for_each(|g| g.round = 1);
            g.push(GateOp { edge: [0, 1], phi: PI, round: 1 });
        }
        let st = radius_ledger(&spec, LedgerPolicy::Static).unwrap();
        let aw = radius_ledger(&spec, LedgerPolicy::MeasurementAware).unwrap();
        for (a, s) in aw.final_radii.iter().zip(&st.final_radii) {
            assert!(a <= s);
        }
        assert_eq!(aw.final_radii[0], 0.0);
        // Node 1 only grows through the gate with node 2.
        assert!((aw.final_radii[1] - 0.3f64.sin() * lambda_cz()).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut spec = chain_spec(2, 0.1, PI, MeasurementSpec::xy(0.0));
        spec.schedule[0].round = 0;
        if let GateList::Explicit(g) = &mut spec.gates {
            g[0].round = 1;
        }
        assert!(matches!(spec.validate(), Err(SimError::InvalidSpec(_))));
        let mut adaptive = chain_spec(2, 0.1, PI, MeasurementSpec::xy(0.0));
        adaptive.schedule[0].adaptive = Some(AdaptiveRule { parity_of: vec![1], omega: [0.0, 1.0] });
        assert!(adaptive.validate().is_err());
        let mut unknown = chain_spec(2, 0.1, PI, MeasurementSpec::xy(0.0));
        unknown.schedule[1].node = 7;
        assert!(unknown.validate().is_err());
    }

    #[test]
    fn single_node_z_sampling() {
        let theta: f64 = 1.0;
        let mut spec = ExperimentSpec::new(vec![InputState::pure(theta)], vec![], vec![ScheduleStep::new(0, MeasurementSpec::z())]);
        spec.sampler.num_samples = 100_000;
        spec.sampler.seed = 7;
        let run = run_branches(&spec, &Decomposer::new()).unwrap();
        let minus = run.outcomes.iter().filter(|o| *o == "-").count() as f64 / 1e5;
        let p = (1.0 - theta.cos()) / 2.0;
        let sigma = (p * (1.0 - p) / 1e5).sqrt();
        assert!((minus - p).abs() < 3.0 * sigma, "{minus} vs {p}");
    }

    #[test]
    fn tv_examples() {
        let exact: BTreeMap<String, f64> = [("+".to_string(), 0.5), ("-".to_string(), 0.5)].into();
        let same: BTreeMap<String, u64> = [("+".to_string(), 5), ("-".to_string(), 5)].into();
        assert_eq!(empirical_tv(&same, &exact).unwrap(), 0.0);
        let point: BTreeMap<String, f64> = [("+".to_string(), 1.0)].into();
        let other: BTreeMap<String, u64> = [("-".to_string(), 3)].into();
        assert_eq!(empirical_tv(&other, &point).unwrap(), 1.0);
        let wrong: BTreeMap<String, u64> = [("++".to_string(), 3)].into();
        assert!(matches!(empirical_tv(&wrong, &exact), Err(SimError::AlphabetMismatch(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut coin: BTreeMap<String, u64> = BTreeMap::new();
        for _ in 0..100_000 {
            *coin.entry(if rng.random::<bool>() { "+" } else { "-" }.to_string()).or_insert(0) += 1;
        }
        assert!(empirical_tv(&coin, &exact).unwrap() < 0.01);
    }

    #[test]
    fn power_law_expansion() {
        let pl = PowerLawGates { dims: vec![3], alpha: 2.0, time: 0.0, nn_phase: Some(PI), cutoff: 2, round: 0 };
        let g = pl.expand();
        assert_eq!(g.len(), 3);
        assert!((g[1].phi - PI / 4.0).abs() < 1e-15);
        let json = r#"{"inputs":[{"theta":0.1},{"theta":0.1},{"theta":0.1}],
            "gates":{"power_law":{"dims":[3],"alpha":2.0,"nn_phase":3.141592653589793,"cutoff":2}}}"#;
        let spec: ExperimentSpec = serde_json::from_str(json).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.max_degree(), 2);
    }

    #[test]
    fn determinism_for_fixed_seed() {
        let mut spec = chain_spec(3, 0.2, PI, MeasurementSpec::xy(0.0));
        spec.sampler.num_samples = 2000;
        spec.sampler.seed = 11;
        let a = run_branches(&spec, &Decomposer::new()).unwrap();
        let b = run_branches(&spec, &Decomposer::new()).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        assert!(a.stats.lp_gates > 0);
    }
}
