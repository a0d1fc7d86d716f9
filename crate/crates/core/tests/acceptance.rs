//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cylmatter::bloch::{MeasurementSpec, PauliCoeffMatrix, BlochVector};
use cylmatter::decompose::{appendix_operator, determinant4, hull_membership, near_boundary, reduced_determinant, Decomposer};
use cylmatter::growth::{
    lambda_cz, lambda_phi, lemma1_feasible, lemma1_lhs, longrange_growth, telescoping_family, GrowthQuery, PowerLawSpec,
    Verdict,
};
use cylmatter::lattice::{
    chain_spec, empirical_tv, grid_edges, radius_ledger, run_branches, AdaptiveRule, ExperimentSpec, GateOp, InputState,
    LedgerPolicy, ScheduleStep, SimError,
};
use cylmatter::matter::{coarse_grain_threshold_1d, fixed_points, iterate_recursion, matter_bounds, steer_max, steer_max_numeric, RecursionVerdict};
use cylmatter::oracle::exact_distribution;
use cylmatter::statespace::max_input_radius_bspace;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let pass = out.pass && in_time;
    println!(
        "{} criterion {id} ({name}): {} [{:.3?} / limit {:?}{}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took,
        limit,
        if in_time { "" } else { ", too slow" }
    );
    pass
}

fn growth_exactness() -> Outcome {
    let l = lambda_phi(PI);
    let closed = (5f64.sqrt() - 2.0).powf(-0.5);
    let pass = (l - closed).abs() < 1e-12 && (l - 2.058).abs() < 5e-4 && (l - (2.0 + 5f64.sqrt()).sqrt()).abs() < 1e-12;
    Outcome { pass, detail: format!("lambda(pi) = {l:.15}, |diff| = {:.1e}", (l - closed).abs()) }
}

fn boundary_consistency() -> Outcome {
    let mut worst_lhs: f64 = 0.0;
    for k in 1..=100 {
        let phi = 2.0 * PI * k as f64 / 101.0;
        let f = 1.0 / lambda_phi(phi);
        worst_lhs = worst_lhs.max(lemma1_lhs(f, f, phi).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_det: f64 = 0.0;
    for _ in 0..1000 {
        let (fa, fb, phi) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>() * 2.0 * PI);
        let det = determinant4(&appendix_operator(fa, fb, phi));
        worst_det = worst_det.max((det.re - reduced_determinant(fa, fb, phi)).abs().max(det.im.abs()));
    }
    Outcome {
        pass: worst_lhs <= 1e-9 && worst_det <= 1e-9,
        detail: format!("max |lhs at 1/lambda| = {worst_lhs:.1e}, max |det - closed form| = {worst_det:.1e}"),
    }
}

fn lp_agreement() -> Outcome {
    let (mut mismatches, mut excused, mut false_feasible, mut total) = (0, 0, 0, 0);
    for i in 0..20 {
        for j in 0..20 {
            for m in 0..8 {
                let (fa, fb) = ((i as f64 + 0.5) / 20.0, (j as f64 + 0.5) / 20.0);
                let phi = (m + 1) as f64 * PI / 8.0;
                let target = cylmatter::bloch::apply_gate_pauli(phi, &BlochVector::new(fa, 0.0, 1.0), &BlochVector::new(fb, 0.0, 1.0));
                let lp = match hull_membership(&target, 1.0, 1.0, 80, 1e-7) {
                    Ok(r) => r.feasible,
                    Err(e) => return Outcome { pass: false, detail: format!("solver error {e}") },
                };
                let analytic = lemma1_feasible(&GrowthQuery::new(fa, fb, phi));
                total += 1;
                if lp && !analytic {
                    false_feasible += 1;
                }
                if lp != analytic {
                    if near_boundary(fa, fb, phi, 5e-3) {
                        excused += 1;
                    } else {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: mismatches == 0 && false_feasible == 0,
        detail: format!("{total} points, {mismatches} mismatches, {excused} within band, {false_feasible} false feasible"),
    }
}

fn grid_spec() -> ExperimentSpec {
    let theta = 3f64.to_radians();
    let gates: Vec<GateOp> = grid_edges(2, 3).into_iter().map(|edge| GateOp { edge, phi: PI, round: 0 }).collect();
    let mut schedule = vec![
        ScheduleStep::new(0, MeasurementSpec::z()),
        ScheduleStep::new(1, MeasurementSpec::xy(PI / 4.0)),
        ScheduleStep::new(2, MeasurementSpec::xy(0.0)),
        ScheduleStep::new(3, MeasurementSpec::xy(PI / 2.0)),
        ScheduleStep::new(4, MeasurementSpec::z()),
        ScheduleStep::new(5, MeasurementSpec::xy(0.0)),
    ];
    schedule[5].adaptive = Some(AdaptiveRule { parity_of: vec![1, 2], omega: [0.0, PI / 2.0] });
    ExperimentSpec::new(vec![InputState::pure(theta); 6], gates, schedule)
}

fn sampling_vs_oracle(negatives: &mut u64) -> Outcome {
    let cases = [
        ("2q", chain_spec(2, 20f64.to_radians(), PI, MeasurementSpec::xy(0.0))),
        ("chain5", chain_spec(5, 6f64.to_radians(), PI, MeasurementSpec::xy(0.0))),
        ("grid2x3", grid_spec()),
    ];
    let decomposer = Decomposer::new();
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, (name, mut spec)) in cases.into_iter().enumerate() {
        spec.sampler.num_samples = 100_000;
        spec.sampler.seed = 1000 + k as u64;
        let exact = match exact_distribution(&spec) {
            Ok(d) => d,
            Err(e) => return Outcome { pass: false, detail: format!("{name}: oracle error {e}") },
        };
        let run = match run_branches(&spec, &decomposer) {
            Ok(r) => r,
            Err(SimError::NegativeBranchProbability { .. }) => {
                *negatives += 1;
                return Outcome { pass: false, detail: format!("{name}: negative branch probability") };
            }
            Err(e) => return Outcome { pass: false, detail: format!("{name}: sampler error {e}") },
        };
        *negatives += run.stats.negative_probabilities;
        let tv = empirical_tv(&run.histogram(), &exact).unwrap_or(f64::INFINITY);
        pass &= tv <= 0.02;
        parts.push(format!("{name} TV = {tv:.4}"));
    }
    Outcome { pass, detail: parts.join(", ") }
}

fn bspace_reproduction() -> Outcome {
    let base = lambda_cz().powi(-3);
    match max_input_radius_bspace(3, PI, 40) {
        Ok(r) => Outcome {
            pass: (r - 0.1153).abs() <= 1e-3 && (base - 0.1147).abs() <= 1e-4 && r > base,
            detail: format!("B-space r = {r:.5}, cylinder baseline = {base:.5}"),
        },
        Err(e) => Outcome { pass: false, detail: format!("search error {e}") },
    }
}

fn matter_thresholds() -> Outcome {
    let chain = matter_bounds(1, None).map(|b| b.upper).unwrap_or(f64::NAN);
    let at_quarter = fixed_points(0.25) == vec![0.5] && fixed_points(0.25 + 1e-12).is_empty();
    let converges = matches!(iterate_recursion(0.25, 0.1, 2_000_000).verdict, RecursionVerdict::Converged { .. });
    let diverges = matches!(iterate_recursion(0.2501, 0.1, 1_000_000).verdict, RecursionVerdict::Diverged { .. });
    let cg = coarse_grain_threshold_1d();
    let f2 = matter_bounds(2, None).map(|b| b.upper).unwrap_or(f64::NAN);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (ra, rb) = (0.5 * rng.random::<f64>(), 0.5 * rng.random::<f64>());
        let closed = steer_max(ra, rb).unwrap_or(f64::NAN);
        worst = worst.max((closed - steer_max_numeric(ra, rb, 200)).abs());
    }
    Outcome {
        pass: chain == 0.25 && at_quarter && converges && diverges && (cg - 0.24980).abs() <= 1e-4 && f2 == 3.0 / 16.0 && worst <= 1e-3,
        detail: format!("F1 = {chain}, coarse grain = {cg:.6}, F2 upper = {f2}, steer audit max gap = {worst:.1e}"),
    }
}

fn longrange() -> Outcome {
    let cases = [(1.5, 1, Verdict::Diverges), (1.8, 1, Verdict::Converges), (3.0, 2, Verdict::Diverges), (3.2, 2, Verdict::Converges)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (alpha, dim, want) in cases {
        match longrange_growth(&PowerLawSpec::cz_pinned(alpha, dim, 2000)) {
            Ok(r) => {
                pass &= r.verdict == want;
                parts.push(format!("({alpha},{dim}) {:?}", r.verdict));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("({alpha},{dim}) error {e}"));
            }
        }
    }
    let r0 = telescoping_family(3.0).map(|t| t.r0).unwrap_or(f64::NAN);
    let gap = (r0 - lambda_cz().powi(-4)).abs();
    pass &= gap <= 1e-10;
    parts.push(format!("r0 gap {gap:.1e}"));
    Outcome { pass, detail: parts.join(", ") }
}

/// Fixed-seed spot checks of the module invariants; the full randomized
/// suites live in the `properties_*` test targets.
fn property_spot_checks(negatives: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    for _ in 0..200 {
        let phi = rng.random::<f64>() * 2.0 * PI;
        let l = lambda_phi(phi);
        if !(1.0..=lambda_cz() + 1e-12).contains(&l) || (l - lambda_phi(2.0 * PI - phi)).abs() > 1e-12 {
            failures.push(format!("lambda({phi})"));
        }
        let a = BlochVector::pure(rng.random::<f64>() * PI, rng.random::<f64>() * 2.0 * PI);
        let b = BlochVector::pure(rng.random::<f64>() * PI, rng.random::<f64>() * 2.0 * PI);
        let m: PauliCoeffMatrix = cylmatter::bloch::apply_gate_pauli(phi, &a, &b);
        if !m.is_normalized() {
            failures.push("normalization".into());
        }
        let r = 0.25 * rng.random::<f64>();
        if fixed_points(r).iter().any(|&f| (r / (1.0 - f) - f).abs() > 1e-12) {
            failures.push(format!("fixed point {r}"));
        }
    }
    for d in 1..=10 {
        let b = matter_bounds(d, None).unwrap();
        if !(0.0 < b.lower && b.lower <= b.upper && b.upper <= 0.5) {
            failures.push(format!("bounds D={d}"));
        }
    }
    let mut spec = chain_spec(6, 0.1, PI, MeasurementSpec::xy(0.0));
    for (k, s) in spec.schedule.iter_mut().enumerate() {
        s.round = 1 + (k % 3) as u32;
    }
    let st = radius_ledger(&spec, LedgerPolicy::Static).unwrap();
    let aw = radius_ledger(&spec, LedgerPolicy::MeasurementAware).unwrap();
    let (ms, ma) = (st.measurement_radii(), aw.measurement_radii());
    if ms.iter().any(|(k, r)| ma[k] > r + 1e-12) {
        failures.push("ledger policy order".into());
    }
    let mut hist = BTreeMap::new();
    hist.insert("+".to_string(), 1u64);
    if empirical_tv(&hist, &BTreeMap::from([("+".to_string(), 1.0)])).unwrap() != 0.0 {
        failures.push("tv".into());
    }
    if negatives > 0 {
        failures.push(format!("{negatives} negative branch probabilities"));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() { "spot checks green, no negative branch probabilities".into() } else { failures.join(", ") },
    }
}

fn main() {
    let mut negatives = 0;
    let results = [
        report(1, "growth-factor exactness", Duration::from_millis(1), growth_exactness),
        report(2, "boundary consistency", Duration::from_secs(1), boundary_consistency),
        report(3, "LP vs analytic", Duration::from_secs(300), lp_agreement),
        report(4, "sampling vs oracle", Duration::from_secs(600), || sampling_vs_oracle(&mut negatives)),
        report(5, "B-space reproduction", Duration::from_secs(600), bspace_reproduction),
        report(6, "matter thresholds", Duration::from_secs(120), matter_thresholds),
        report(7, "long-range criterion", Duration::from_secs(60), longrange),
        report(8, "property suites", Duration::from_secs(60), || property_spot_checks(negatives)),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
