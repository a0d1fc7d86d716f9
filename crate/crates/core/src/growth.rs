//! Growth factors of cylinder radii under diagonal gates, the separability
//! condition for a single gate, phase boundaries and long-range sums.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch::fold_angle;

/// Slack on the sign test of the separability polynomial.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// Phase below which the small-angle law for `ln λ` is trusted in tail bounds.
pub const ASYMPTOTIC_PHASE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("phase at the cutoff is {phi_at_cutoff}, outside the small-angle regime (< {ASYMPTOTIC_PHASE})")]
    CutoffTooSmall { phi_at_cutoff: f64 },
    #[error("domain error: {0}")]
    Domain(String),
}

/// `√(2 + √5)`, the growth factor of the CZ gate.
pub fn lambda_cz() -> f64 {
    (2.0 + 5f64.sqrt()).sqrt()
}

fn cubic(mu: f64, q: f64) -> f64 {
    q * q * q + mu * q + mu
}

/// Positive root of `q³ + μq + μ` for `μ < 0` by safeguarded Newton on
/// `[√−μ, √−μ + 4]`.
pub fn positive_root_bracketed(mu: f64) -> f64 {
    let mut lo = (-mu).sqrt();
    let mut hi = lo + 4.0;
    let mut q = hi;
    for _ in 0..200 {
        let f = cubic(mu, q);
        if f > 0.0 {
            hi = q;
        } else {
            lo = q;
        }
        let df = 3.0 * q * q + mu;
        let mut next = q - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - q).abs() <= 1e-16 * q.max(1.0) || hi - lo <= 1e-15 {
            return next;
        }
        q = next;
    }
    q
}

/// Cardano's expression for the positive root, valid for `|μ| < 27/4`.
/// The second cube root is written as `−μ/(3a)` to avoid cancellation.
pub fn positive_root_cardano(mu: f64) -> f64 {
    let s = (mu * mu / 4.0 + mu * mu * mu / 27.0).sqrt();
    let a = (-mu / 2.0 + s).cbrt();
    a - mu / (3.0 * a)
}

fn lambda_uncached(phi: f64) -> f64 {
    let phi = fold_angle(phi);
    if phi == 0.0 {
        return 1.0;
    }
    // 4(cos φ − 1) written as −8 sin²(φ/2) for accuracy near 0.
    let half = (phi / 2.0).sin();
    let mu = -8.0 * half * half;
    if mu == 0.0 {
        return 1.0;
    }
    let q = if mu.abs() < 27.0 / 4.0 {
        positive_root_cardano(mu)
    } else {
        positive_root_bracketed(mu)
    };
    (q + 1.0).sqrt()
}

const CACHE_LIMIT: usize = 1 << 16;

fn cache() -> &'static RwLock<HashMap<i64, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<i64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Growth factor `λ(φ)`: the minimal uniform scale-up of both cylinder radii
/// that keeps the output of `V_φ` cylinder separable.
pub fn lambda_phi(phi: f64) -> f64 {
    let folded = fold_angle(phi);
    let key = (folded * 1e12).round() as i64;
    if let Some(v) = cache().read().ok().and_then(|m| m.get(&key).copied()) {
        return v;
    }
    let v = lambda_uncached(folded);
    if let Ok(mut m) = cache().write() {
        if m.len() < CACHE_LIMIT {
            m.insert(key, v);
        }
    }
    v
}

/// A single-gate separability query with radius ratios `f = r/R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthQuery {
    pub fa: f64,
    pub fb: f64,
    pub phi: f64,
}

impl GrowthQuery {
    pub fn new(fa: f64, fb: f64, phi: f64) -> Self {
        Self { fa, fb, phi }
    }
}

/// `(1+fA⁴)(1+fB⁴) − 2(fA²+fB²) + 2(2−fA²−fB²)fA²fB² cos φ`.
pub fn lemma1_lhs(fa: f64, fb: f64, phi: f64) -> f64 {
    let (a2, b2) = (fa * fa, fb * fb);
    let (s, p) = (a2 + b2, a2 * b2);
    (1.0 + a2 * a2) * (1.0 + b2 * b2) - 2.0 * s + 2.0 * (2.0 - s) * p * phi.cos()
}

pub fn lemma1_feasible(q: &GrowthQuery) -> bool {
    let (fa, fb) = (q.fa, q.fb);
    if !(fa >= 0.0 && fb >= 0.0) {
        return false;
    }
    if fa == 0.0 || fb == 0.0 || fold_angle(q.phi) == 0.0 {
        return fa <= 1.0 && fb <= 1.0;
    }
    fa < 1.0 && fb < 1.0 && lemma1_lhs(fa, fb, q.phi) >= -BOUNDARY_SLACK
}

/// The CZ special case `1 ≥ (fA + fB)² + fA²fB²`.
pub fn cz_feasible(fa: f64, fb: f64) -> bool {
    if !(fa >= 0.0 && fb >= 0.0) {
        return false;
    }
    if fa == 0.0 || fb == 0.0 {
        return fa <= 1.0 && fb <= 1.0;
    }
    (fa + fb).powi(2) + fa * fa * fb * fb <= 1.0 + BOUNDARY_SLACK
}

/// Thermal excitation probability `e^{−1/T}/(1 + e^{−1/T})`.
pub fn thermal_excitation(temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let e = (-1.0 / temperature).exp();
    e / (1.0 + e)
}

/// Factor `1 − 2p_T` by which thermal noise shrinks an input Bloch vector.
pub fn thermal_shrink(temperature: f64) -> f64 {
    if temperature <= 0.0 {
        1.0
    } else {
        (0.5 / temperature).tanh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub theta: f64,
    pub phi: f64,
    pub delta: u32,
    pub temperature: f64,
}

impl PhasePoint {
    pub fn excitation(&self) -> f64 {
        thermal_excitation(self.temperature)
    }

    /// Whether the point lies below the efficiently simulable boundary.
    pub fn simulable(&self) -> bool {
        self.theta <= theta_max(self.phi, self.delta, self.temperature)
    }
}

/// Largest polar angle of the input pure states for which every site stays
/// within the unit cylinder after `delta` gates of phase `phi`.
pub fn theta_max(phi: f64, delta: u32, temperature: f64) -> f64 {
    let arg = lambda_phi(phi).powi(-(delta as i32)) / thermal_shrink(temperature);
    if arg >= 1.0 {
        FRAC_PI_2
    } else {
        arg.asin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    pub alpha: f64,
    pub dim: u32,
    pub time: f64,
    pub cutoff: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nn_phase: Option<f64>,
}

impl PowerLawSpec {
    /// Pinned so that neighbouring sites interact through a CZ gate.
    pub fn cz_pinned(alpha: f64, dim: u32, cutoff: u64) -> Self {
        Self { alpha, dim, time: PI, cutoff, nn_phase: Some(PI) }
    }

    /// Unreduced phase accumulated at distance `l`.
    pub fn raw_phase(&self, l: u64) -> f64 {
        let scale = self.nn_phase.unwrap_or(self.time);
        scale * (l as f64).powf(-self.alpha)
    }

    pub fn phase(&self, l: u64) -> f64 {
        fold_angle(self.raw_phase(l))
    }

    fn validate(&self) -> Result<(), GrowthError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(GrowthError::Domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.dim == 0 {
            return Err(GrowthError::Domain("dimension must be at least 1".into()));
        }
        if self.cutoff == 0 {
            return Err(GrowthError::Domain("cutoff must be at least 1".into()));
        }
        if !(self.time >= 0.0 && self.time.is_finite()) {
            return Err(GrowthError::Domain(format!("time must be finite and >= 0, got {}", self.time)));
        }
        Ok(())
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Number of lattice points at ℓ¹ distance exactly `l` from the origin of `Z^dim`.
pub fn shell_count(l: u64, dim: u32) -> f64 {
    if l == 0 {
        return 1.0;
    }
    let d = dim as u64;
    (1..=d.min(l))
        .map(|k| 2f64.powi(k as i32) * binomial(d, k) * binomial(l - 1, k - 1))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converges,
    Diverges,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRangeReport {
    pub ln_lambda_tot: f64,
    pub verdict: Verdict,
    pub tail_bound: f64,
}

/// Total log growth of one site under power-law interactions up to the cutoff,
/// the convergence verdict as the cutoff goes to infinity, and a bound on the
/// neglected tail.
pub fn longrange_growth(spec: &PowerLawSpec) -> Result<LongRangeReport, GrowthError> {
    spec.validate()?;
    let phi_at_cutoff = spec.raw_phase(spec.cutoff);
    if phi_at_cutoff >= ASYMPTOTIC_PHASE {
        return Err(GrowthError::CutoffTooSmall { phi_at_cutoff });
    }
    let ln_lambda_tot = (1..=spec.cutoff)
        .map(|l| shell_count(l, spec.dim) * lambda_phi(spec.phase(l)).ln())
        .sum();
    let d = spec.dim as f64;
    let verdict = if spec.alpha > 1.5 * d {
        Verdict::Converges
    } else {
        Verdict::Diverges
    };
    let tail_bound = match verdict {
        Verdict::Diverges => f64::INFINITY,
        Verdict::Converges => {
            let e = 2.0 * spec.alpha / 3.0;
            let scale = spec.nn_phase.unwrap_or(spec.time);
            2f64.powi(spec.dim as i32) * (scale / 2.0).powf(2.0 / 3.0) * (spec.cutoff as f64).powf(d - e) / (e - d)
        }
    };
    Ok(LongRangeReport { ln_lambda_tot, verdict, tail_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Telescoping {
    pub p: f64,
    pub c: f64,
    pub r0: f64,
}

impl Telescoping {
    /// Largest admissible input polar angle, in radians.
    pub fn theta(&self) -> f64 {
        self.r0.min(1.0).asin()
    }
}

/// One-dimensional family whose total growth telescopes: couplings are
/// chosen so that the nearest-neighbour gate is CZ and the product of all
/// growth factors equals `exp(2c)`.
pub fn telescoping_family(alpha: f64) -> Result<Telescoping, GrowthError> {
    if !(alpha > 1.5) {
        return Err(GrowthError::Domain(format!("telescoping family needs alpha > 3/2, got {alpha}")));
    }
    let p = 2.0 * alpha / 3.0 - 1.0;
    let two_p = 2f64.powf(p);
    let c = if two_p.is_infinite() {
        lambda_cz().ln()
    } else {
        two_p * lambda_cz().ln() / (two_p - 1.0)
    };
    Ok(Telescoping { p, c, r0: (-2.0 * c).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn lambda_examples() {
        assert_eq!(lambda_phi(0.0), 1.0);
        let cz = lambda_phi(PI);
        assert!((cz - (5f64.sqrt() - 2.0).powf(-0.5)).abs() < 1e-12);
        assert!((cz - 2.05817).abs() < 1e-5);
        // q³ − 4q − 4 = 0 has q ≈ 2.38298.
        let q = positive_root_bracketed(-4.0);
        assert!((q - 2.382_975_767_9).abs() < 1e-9);
        assert!((lambda_phi(FRAC_PI_2) - (q + 1.0).sqrt()).abs() < 1e-12);
        assert!((lambda_phi(FRAC_PI_2) - 1.8393).abs() < 1e-4);
    }

    #[test]
    fn cardano_matches_bracketed_root() {
        for k in 1..400 {
            let phi = k as f64 * PI / 400.0;
            let mu = 4.0 * (phi.cos() - 1.0);
            if mu.abs() < 27.0 / 4.0 {
                let (a, b) = (positive_root_cardano(mu), positive_root_bracketed(mu));
                assert!((a - b).abs() < 1e-12 * b.max(1.0), "phi={phi} {a} {b}");
            }
        }
    }

    #[test]
    fn lemma1_examples() {
        let f = (5f64.sqrt() - 2.0).sqrt();
        assert!(lemma1_feasible(&GrowthQuery::new(f, f, PI)));
        assert!(lemma1_lhs(f, f, PI).abs() < 1e-12);
        assert!(lemma1_feasible(&GrowthQuery::new(0.0, 0.9, 1.3)));
        assert!(!lemma1_feasible(&GrowthQuery::new(1.0, 1.0, FRAC_PI_2)));
        assert!(!lemma1_feasible(&GrowthQuery::new(0.5, 0.5, PI)));
        assert!(lemma1_feasible(&GrowthQuery::new(1.0, 1.0, 0.0)));
    }

    #[test]
    fn cz_examples() {
        let f = (5f64.sqrt() - 2.0).sqrt();
        assert!((f - 0.48587).abs() < 1e-5);
        assert!(cz_feasible(f, f));
        assert!(cz_feasible(0.0, 1.0));
        assert!(!cz_feasible(0.5, 0.5));
    }

    #[test]
    fn cz_matches_lemma1_on_grid() {
        for i in 0..100 {
            for j in 0..100 {
                let (a, b) = (i as f64 / 99.0, j as f64 / 99.0);
                assert_eq!(cz_feasible(a, b), lemma1_feasible(&GrowthQuery::new(a, b, PI)), "{a} {b}");
            }
        }
    }

    #[test]
    fn theta_max_examples() {
        let t3 = theta_max(PI, 3, 0.0);
        assert!((t3 - 0.11495).abs() < 1e-5);
        assert!((t3.to_degrees() - 6.587).abs() < 1e-3);
        let t4 = theta_max(PI, 4, 0.0);
        assert!((t4.sin() - 1.0 / (9.0 + 4.0 * 5f64.sqrt())).abs() < 1e-12);
        assert!((t4.to_degrees() - 3.195).abs() < 1e-3);
        assert_eq!(theta_max(0.0, 7, 0.0), FRAC_PI_2);
        assert!(theta_max(PI, 3, 0.5) > t3);
    }

    #[test]
    fn thermal_examples() {
        assert_eq!(thermal_excitation(0.0), 0.0);
        let t = 0.7;
        assert!((1.0 - 2.0 * thermal_excitation(t) - thermal_shrink(t)).abs() < 1e-15);
        assert!(thermal_excitation(1e6) < 0.5);
    }

    #[test]
    fn longrange_examples() {
        let verdict = |alpha, dim| longrange_growth(&PowerLawSpec::cz_pinned(alpha, dim, 2000)).unwrap().verdict;
        assert_eq!(verdict(1.5, 1), Verdict::Diverges);
        assert_eq!(verdict(1.8, 1), Verdict::Converges);
        assert_eq!(verdict(3.0, 2), Verdict::Diverges);
        assert_eq!(verdict(3.2, 2), Verdict::Converges);
        let short = PowerLawSpec::cz_pinned(1.8, 1, 2);
        assert!(matches!(longrange_growth(&short), Err(GrowthError::CutoffTooSmall { .. })));
        let r = longrange_growth(&PowerLawSpec::cz_pinned(3.0, 1, 500)).unwrap();
        assert!(r.tail_bound.is_finite() && r.tail_bound > 0.0);
        // The nearest-neighbour shell alone contributes 2 ln λ_CZ.
        assert!(r.ln_lambda_tot > 2.0 * lambda_cz().ln());
    }

    #[test]
    fn shell_counts() {
        assert_eq!(shell_count(5, 1), 2.0);
        assert_eq!(shell_count(3, 2), 12.0);
        assert_eq!(shell_count(1, 3), 6.0);
        assert_eq!(shell_count(2, 3), 18.0);
    }

    #[test]
    fn telescoping_examples() {
        let t = telescoping_family(3.0).unwrap();
        assert!((t.p - 1.0).abs() < 1e-15);
        assert!((t.c - 2.0 * lambda_cz().ln()).abs() < 1e-12);
        assert!((t.c - 1.44364).abs() < 1e-5);
        assert!((t.r0 - lambda_cz().powi(-4)).abs() < 1e-12);
        assert!((t.theta().to_degrees() - 3.195).abs() < 1e-3);
        let big = telescoping_family(400.0).unwrap();
        assert!((big.r0 - lambda_cz().powi(-2)).abs() < 1e-9);
        assert!(telescoping_family(1.5).is_err());
    }

    #[test]
    fn lambda_symmetric() {
        for k in 0..1000 {
            let phi = k as f64 * TAU / 1000.0;
            assert!((lambda_phi(phi) - lambda_phi(TAU - phi)).abs() < 1e-12);
        }
    }
}
