//! Cylinder-separable decompositions of diagonal-gate outputs.
//!
//! Gate outputs are first mapped to a canonical form (both inputs on the
//! positive x axis at `z = +1`, phase in `[0, π]`). The canonical output is
//! then written as a convex mixture of products of extremal points by a
//! phase-1 linear program over discretized extremal circles. Optionally,
//! continuous azimuths are priced in by column generation.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch::{
    apply_gate_pauli, normalize_angle, x_flip, z_rotate, BlochVector, Matrix4, PauliCoeffMatrix,
};
use crate::growth::{lemma1_feasible, lemma1_lhs, GrowthQuery, BOUNDARY_SLACK};
use crate::lp::{LpError, Phase1};

pub const DEFAULT_DISCRETIZATION: usize = 40;
pub const DEFAULT_TOLERANCE: f64 = 1e-7;
/// Slack for term vectors against their cylinder bound.
pub const CYLINDER_SLACK: f64 = 1e-9;

const MAX_SIMPLEX_ITERATIONS: usize = 200_000;
const MAX_GENERATION_ROUNDS: usize = 400;
const EXTREMAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error("input {0} is not extremal (need z = ±1)")]
    NonExtremalInput(BlochVector),
    #[error("no cylinder-separable form exists for fA = {fa}, fB = {fb}, phi = {phi}")]
    InfeasibleRequest { fa: f64, fb: f64, phi: f64 },
    #[error("decomposition residual {residual:e} exceeds tolerance {tolerance:e}; increase the discretization")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("linear program failed: {0}")]
    SolverFailure(#[from] LpError),
    #[error("no feasible output radius found up to {0}")]
    NoUpperBracket(f64),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTerm {
    #[serde(rename = "p")]
    pub weight: f64,
    #[serde(rename = "omegaA")]
    pub omega_a: BlochVector,
    #[serde(rename = "omegaB")]
    pub omega_b: BlochVector,
}

impl DecompositionTerm {
    pub fn new(weight: f64, omega_a: BlochVector, omega_b: BlochVector) -> Self {
        Self { weight, omega_a, omega_b }
    }
}

/// Weighted sum of the product operators of `terms`.
pub fn reconstruct(terms: &[DecompositionTerm]) -> PauliCoeffMatrix {
    let mut out = PauliCoeffMatrix::zeros();
    for t in terms {
        out.add_scaled(t.weight, &PauliCoeffMatrix::product(&t.omega_a, &t.omega_b));
    }
    out
}

/// Exportable decomposition record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub terms: Vec<DecompositionTerm>,
    pub residual: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

// ---------------------------------------------------------------------------
// Analytic criterion

/// Left side of the single-gate separability polynomial; equals the
/// determinant of the partially transposed rescaled output (up to a positive factor).
pub fn reduced_determinant(fa: f64, fb: f64, phi: f64) -> f64 {
    lemma1_lhs(fa, fb, phi)
}

/// `(I + fA X)⊗(I + fB X) + fA fB [(e^{−iφ} − 1)|00⟩⟨11| + h.c.]`.
pub fn appendix_operator(fa: f64, fb: f64, phi: f64) -> Matrix4 {
    let zero = Complex64::new(0.0, 0.0);
    let mut m = [[zero; 4]; 4];
    let a = [[1.0, fa], [fa, 1.0]];
    let b = [[1.0, fb], [fb, 1.0]];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[2 * i + j][2 * k + l] = Complex64::new(a[i][k] * b[j][l], 0.0);
                }
            }
        }
    }
    let e = fa * fb * (Complex64::from_polar(1.0, -phi) - 1.0);
    m[0][3] += e;
    m[3][0] += e.conj();
    m
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant4(m: &Matrix4) -> Complex64 {
    let mut a = *m;
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..4 {
        let p = (c..4).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap();
        if a[p][c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..4 {
            let f = a[r][c] / a[c][c];
            for k in c..4 {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
        }
    }
    det
}

// ---------------------------------------------------------------------------
// Generators of convex bodies

/// Circle of extremal points at height `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub z: f64,
    pub radius: f64,
}

/// A compact convex body given by its extremal points: either a union of
/// horizontal circles (continuous azimuth) or a finite point list.
#[derive(Debug, Clone, PartialEq)]
pub enum Generators {
    Rings(Vec<Ring>),
    Points(Vec<BlochVector>),
}

impl Generators {
    pub fn cylinder(r: f64) -> Self {
        Generators::Rings(vec![Ring { z: 1.0, radius: r }, Ring { z: -1.0, radius: r }])
    }

    /// Discretize rings at `n` equally spaced azimuths starting at 0.
    pub fn points(&self, n: usize) -> Vec<BlochVector> {
        match self {
            Generators::Points(p) => p.clone(),
            Generators::Rings(rings) => {
                let mut out = Vec::new();
                for ring in rings {
                    if ring.radius == 0.0 {
                        out.push(BlochVector::new(0.0, 0.0, ring.z));
                    } else {
                        for k in 0..n {
                            let nu = TAU * k as f64 / n as f64;
                            out.push(BlochVector::polar(ring.radius, nu, ring.z));
                        }
                    }
                }
                out
            }
        }
    }

    fn restrict_z(&self, z: f64) -> Self {
        let keep = |v: f64| (v - z).abs() <= EXTREMAL_TOL;
        match self {
            Generators::Points(p) => Generators::Points(p.iter().copied().filter(|v| keep(v.z)).collect()),
            Generators::Rings(r) => Generators::Rings(r.iter().copied().filter(|g| keep(g.z)).collect()),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Generators::Points(p) => p.is_empty(),
            Generators::Rings(r) => r.is_empty(),
        }
    }

    /// Maximize `c · (1, x, y, z)` over the generators (rings only).
    fn best_point(&self, c: &[f64; 4]) -> Option<(BlochVector, f64)> {
        let Generators::Rings(rings) = self else { return None };
        let mut best: Option<(BlochVector, f64)> = None;
        let nu = c[2].atan2(c[1]);
        let amp = c[1].hypot(c[2]);
        for ring in rings {
            let value = c[0] + ring.radius * amp + c[3] * ring.z;
            if best.map_or(true, |(_, b)| value > b) {
                best = Some((BlochVector::polar(ring.radius, nu, ring.z), value));
            }
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Convex hull membership

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullResult {
    pub feasible: bool,
    pub terms: Vec<DecompositionTerm>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullOptions {
    pub n: usize,
    pub tolerance: f64,
    /// Price continuous azimuths into the LP by column generation.
    pub refine: bool,
}

impl HullOptions {
    pub fn grid(n: usize, tolerance: f64) -> Self {
        Self { n, tolerance, refine: false }
    }

    pub fn refined(n: usize, tolerance: f64) -> Self {
        Self { n, tolerance, refine: true }
    }
}

fn fixed_sign(m: f64) -> Option<f64> {
    if m >= 1.0 - EXTREMAL_TOL {
        Some(1.0)
    } else if m <= -1.0 + EXTREMAL_TOL {
        Some(-1.0)
    } else {
        None
    }
}

fn max_residual(terms: &[DecompositionTerm], target: &PauliCoeffMatrix) -> f64 {
    reconstruct(terms).max_abs_diff(target)
}

/// Decide whether `target` lies in the convex hull of products of the two
/// generator sets, returning an explicit decomposition when it does.
pub fn hull_membership_general(
    target: &PauliCoeffMatrix,
    gen_a: &Generators,
    gen_b: &Generators,
    opts: &HullOptions,
) -> Result<HullResult, DecompError> {
    if !target.is_normalized() {
        return Err(DecompError::InvalidRequest("target must have unit trace coefficient".into()));
    }
    let tm = &target.m;
    // When a marginal z is ±1 all weight must sit on points with that z.
    let za = fixed_sign(tm[3][0]);
    let zb = fixed_sign(tm[0][3]);
    let gen_a = za.map_or_else(|| gen_a.clone(), |s| gen_a.restrict_z(s));
    let gen_b = zb.map_or_else(|| gen_b.clone(), |s| gen_b.restrict_z(s));
    let infeasible = |residual: f64| HullResult { feasible: false, terms: Vec::new(), residual };
    if gen_a.is_empty() || gen_b.is_empty() {
        return Ok(infeasible(f64::INFINITY));
    }

    // Rows implied by a fixed z sign are dropped; their consistency is checked directly.
    let mut rows: Vec<(usize, usize)> = Vec::with_capacity(16);
    let mut implied = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let (ri, si) = match (i, za) {
                (3, Some(s)) => (0, s),
                _ => (i, 1.0),
            };
            let (rj, sj) = match (j, zb) {
                (3, Some(s)) => (0, s),
                _ => (j, 1.0),
            };
            if (ri, rj) == (i, j) {
                rows.push((i, j));
            } else {
                implied = implied.max((tm[i][j] - si * sj * tm[ri][rj]).abs());
            }
        }
    }
    if implied > opts.tolerance {
        return Ok(infeasible(implied));
    }

    let entry = |a: &BlochVector, b: &BlochVector, (i, j): (usize, usize)| a.coefficients()[i] * b.coefficients()[j];
    let b: Vec<f64> = rows.iter().map(|&(i, j)| tm[i][j]).collect();
    let mut lp = Phase1::new(&b);
    let mut columns: Vec<(BlochVector, BlochVector)> = Vec::new();
    let pa = gen_a.points(opts.n);
    let pb = gen_b.points(opts.n);
    let mut col = vec![0.0; rows.len()];
    for a in &pa {
        for bv in &pb {
            for (k, &rc) in rows.iter().enumerate() {
                col[k] = entry(a, bv, rc);
            }
            lp.add_column(&col)?;
            columns.push((*a, *bv));
        }
    }
    let mut objective = lp.solve(MAX_SIMPLEX_ITERATIONS)?;

    let target_obj = 0.1 * opts.tolerance;
    if opts.refine && objective > target_obj {
        for _round in 0..MAX_GENERATION_ROUNDS {
            let y = lp.duals();
            let mut ymat = [[0.0; 4]; 4];
            for (k, &(i, j)) in rows.iter().enumerate() {
                ymat[i][j] = y[k];
            }
            let score = |a: &BlochVector, b: &BlochVector| {
                let (ca, cb) = (a.coefficients(), b.coefficients());
                let mut s = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        s += ymat[i][j] * ca[i] * cb[j];
                    }
                }
                s
            };
            // Seeds: best-scoring existing columns.
            let mut seeds: Vec<(f64, usize)> =
                columns.iter().enumerate().map(|(k, (a, b))| (score(a, b), k)).collect();
            seeds.sort_by(|x, y| y.0.total_cmp(&x.0));
            seeds.truncate(6);
            let mut added = 0usize;
            for &(_, k) in &seeds {
                let (mut a, mut bv) = columns[k];
                let mut value = score(&a, &bv);
                for _ in 0..50 {
                    let ca: [f64; 4] = std::array::from_fn(|i| (0..4).map(|j| ymat[i][j] * bv.coefficients()[j]).sum());
                    let Some((na, _)) = gen_a.best_point(&ca) else { break };
                    let cb: [f64; 4] = std::array::from_fn(|j| (0..4).map(|i| ymat[i][j] * na.coefficients()[i]).sum());
                    let Some((nb, nv)) = gen_b.best_point(&cb) else { break };
                    let done = (nv - value).abs() <= 1e-15 * nv.abs().max(1.0);
                    a = na;
                    bv = nb;
                    value = nv;
                    if done {
                        break;
                    }
                }
                if value > 1e-12 {
                    let dup = columns.iter().rev().take(64).any(|(ea, eb)| ea.max_abs_diff(&a) < 1e-13 && eb.max_abs_diff(&bv) < 1e-13);
                    if !dup {
                        for (k2, &rc) in rows.iter().enumerate() {
                            col[k2] = entry(&a, &bv, rc);
                        }
                        lp.add_column(&col)?;
                        columns.push((a, bv));
                        added += 1;
                    }
                }
            }
            if added == 0 {
                break;
            }
            objective = lp.solve(MAX_SIMPLEX_ITERATIONS)?;
            if objective <= target_obj {
                break;
            }
        }
    }

    let mut terms: Vec<DecompositionTerm> = lp
        .solution()
        .into_iter()
        .filter(|&(_, w)| w > 1e-15)
        .map(|(k, w)| DecompositionTerm::new(w, columns[k].0, columns[k].1))
        .collect();
    merge_duplicate_terms(&mut terms);
    let residual = if terms.is_empty() { f64::INFINITY } else { max_residual(&terms, target) };
    let feasible = residual <= opts.tolerance;
    Ok(HullResult { feasible, terms: if feasible { terms } else { Vec::new() }, residual })
}

fn merge_duplicate_terms(terms: &mut Vec<DecompositionTerm>) {
    let mut out: Vec<DecompositionTerm> = Vec::with_capacity(terms.len());
    for t in terms.drain(..) {
        if let Some(e) = out
            .iter_mut()
            .find(|e| e.omega_a.max_abs_diff(&t.omega_a) < 1e-15 && e.omega_b.max_abs_diff(&t.omega_b) < 1e-15)
        {
            e.weight += t.weight;
        } else {
            out.push(t);
        }
    }
    *terms = out;
}

/// Membership of `target` in the hull of products of `N`-point discretized
/// extremal circles of `Cyl(RA)` and `Cyl(RB)`.
pub fn hull_membership(
    target: &PauliCoeffMatrix,
    ra: f64,
    rb: f64,
    n: usize,
    tol: f64,
) -> Result<HullResult, DecompError> {
    if n < 1 {
        return Err(DecompError::InvalidRequest("discretization must be positive".into()));
    }
    hull_membership_general(target, &Generators::cylinder(ra), &Generators::cylinder(rb), &HullOptions::grid(n, tol))
}

// ---------------------------------------------------------------------------
// Canonicalization

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRequest {
    pub input_a: BlochVector,
    pub input_b: BlochVector,
    pub phi: f64,
    /// Output cylinder radius for particle A.
    pub ra: f64,
    /// Output cylinder radius for particle B.
    pub rb: f64,
    pub n: usize,
    pub tolerance: f64,
}

impl DecompositionRequest {
    pub fn new(input_a: BlochVector, input_b: BlochVector, phi: f64, ra: f64, rb: f64) -> Self {
        Self { input_a, input_b, phi, ra, rb, n: DEFAULT_DISCRETIZATION, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn with_discretization(mut self, n: usize, tolerance: f64) -> Self {
        self.n = n;
        self.tolerance = tolerance;
        self
    }

    pub fn target(&self) -> PauliCoeffMatrix {
        apply_gate_pauli(self.phi, &self.input_a, &self.input_b)
    }

    pub fn ratios(&self) -> (f64, f64) {
        let ratio = |r: f64, big: f64| if r == 0.0 { 0.0 } else if big == 0.0 { f64::INFINITY } else { r / big };
        (
            ratio(self.input_a.transverse_radius(), self.ra),
            ratio(self.input_b.transverse_radius(), self.rb),
        )
    }
}

/// Canonical gate: inputs `(ra_in, 0, 1)` and `(rb_in, 0, 1)`, phase in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalRequest {
    pub ra_in: f64,
    pub rb_in: f64,
    pub phi: f64,
    pub ra: f64,
    pub rb: f64,
}

impl CanonicalRequest {
    pub fn input_a(&self) -> BlochVector {
        BlochVector::new(self.ra_in, 0.0, 1.0)
    }

    pub fn input_b(&self) -> BlochVector {
        BlochVector::new(self.rb_in, 0.0, 1.0)
    }

    pub fn target(&self) -> PauliCoeffMatrix {
        apply_gate_pauli(self.phi, &self.input_a(), &self.input_b())
    }
}

/// Per-particle readback: optional X conjugation followed by a z rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteMap {
    pub flip: bool,
    pub rotation: f64,
}

impl SiteMap {
    pub fn apply(&self, v: &BlochVector) -> BlochVector {
        let v = if self.flip { x_flip(v) } else { *v };
        z_rotate(&v, self.rotation)
    }
}

/// Transformation taking canonical decompositions back to the original request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Symmetry {
    pub swap: bool,
    pub reflect: bool,
    pub site_a: SiteMap,
    pub site_b: SiteMap,
}

impl Symmetry {
    pub fn apply_term(&self, t: &DecompositionTerm) -> DecompositionTerm {
        let (mut a, mut b) = if self.swap { (t.omega_b, t.omega_a) } else { (t.omega_a, t.omega_b) };
        if self.reflect {
            a.y = -a.y;
            b.y = -b.y;
        }
        DecompositionTerm::new(t.weight, self.site_a.apply(&a), self.site_b.apply(&b))
    }

    pub fn apply(&self, terms: &[DecompositionTerm]) -> Vec<DecompositionTerm> {
        terms.iter().map(|t| self.apply_term(t)).collect()
    }
}

fn pole_sign(v: &BlochVector) -> Option<f64> {
    if (v.z - 1.0).abs() <= EXTREMAL_TOL {
        Some(1.0)
    } else if (v.z + 1.0).abs() <= EXTREMAL_TOL {
        Some(-1.0)
    } else {
        None
    }
}

/// Reduce a request with extremal inputs to canonical form using local z
/// rotations, the X⊗X and I⊗X commutation rules, complex conjugation and swap.
pub fn canonicalize_inputs(req: &DecompositionRequest) -> Result<(CanonicalRequest, Symmetry), DecompError> {
    let sa = pole_sign(&req.input_a).ok_or(DecompError::NonExtremalInput(req.input_a))?;
    let sb = pole_sign(&req.input_b).ok_or(DecompError::NonExtremalInput(req.input_b))?;
    let (ra_in, rb_in) = (req.input_a.transverse_radius(), req.input_b.transverse_radius());
    let azimuth = |v: &BlochVector| if v.transverse_radius() == 0.0 { 0.0 } else { v.azimuth() };
    let (az_a, az_b) = (azimuth(&req.input_a), azimuth(&req.input_b));
    let phi0 = normalize_angle(req.phi);
    let (flip_a, flip_b, extra_a, extra_b, phi1) = match (sa > 0.0, sb > 0.0) {
        (true, true) => (false, false, 0.0, 0.0, phi0),
        (false, false) => (true, true, phi0, phi0, phi0),
        (true, false) => (false, true, phi0, 0.0, normalize_angle(-phi0)),
        (false, true) => (true, false, 0.0, phi0, normalize_angle(-phi0)),
    };
    let reflect = phi1 > PI;
    let phi2 = if reflect { TAU - phi1 } else { phi1 };
    let swap = (ra_in, req.ra) > (rb_in, req.rb);
    let canonical = if swap {
        CanonicalRequest { ra_in: rb_in, rb_in: ra_in, phi: phi2, ra: req.rb, rb: req.ra }
    } else {
        CanonicalRequest { ra_in, rb_in, phi: phi2, ra: req.ra, rb: req.rb }
    };
    let symmetry = Symmetry {
        swap,
        reflect,
        site_a: SiteMap { flip: flip_a, rotation: extra_a + az_a },
        site_b: SiteMap { flip: flip_b, rotation: extra_b + az_b },
    };
    Ok((canonical, symmetry))
}

// ---------------------------------------------------------------------------
// Gate decompositions

/// Exact split when particle A has zero transverse radius:
/// `p|0⟩⟨0| ⊗ ρ_B + (1−p)|1⟩⟨1| ⊗ Z_φ ρ_B Z_φ†`.
fn zero_radius_split(za: f64, vb: &BlochVector, phi: f64) -> Vec<DecompositionTerm> {
    let p = 0.5 * (1.0 + za.clamp(-1.0, 1.0));
    let mut out = Vec::with_capacity(2);
    if p > 0.0 {
        out.push(DecompositionTerm::new(p, BlochVector::NORTH, *vb));
    }
    if p < 1.0 {
        out.push(DecompositionTerm::new(1.0 - p, BlochVector::SOUTH, z_rotate(vb, phi)));
    }
    out
}

/// How a gate decomposition was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionPath {
    ZeroRadius,
    Identity,
    LinearProgram,
}

fn key_of(c: &CanonicalRequest, n: usize, tol: f64) -> [i64; 7] {
    let q = |v: f64| (v * 1e9).round() as i64;
    [q(c.ra_in), q(c.rb_in), q(c.phi), q(c.ra), q(c.rb), n as i64, tol.to_bits() as i64]
}

/// Gate decomposer with a cache of canonical decompositions shared between threads.
#[derive(Debug, Default)]
pub struct Decomposer {
    cache: RwLock<HashMap<[i64; 7], Arc<Vec<DecompositionTerm>>>>,
}

impl Decomposer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.read().map(|m| m.len()).unwrap_or(0)
    }

    fn canonical_terms(&self, c: &CanonicalRequest, n: usize, tol: f64) -> Result<Arc<Vec<DecompositionTerm>>, DecompError> {
        let key = key_of(c, n, tol);
        if let Some(hit) = self.cache.read().ok().and_then(|m| m.get(&key).cloned()) {
            return Ok(hit);
        }
        let terms = Arc::new(solve_canonical(c, n, tol)?);
        if let Ok(mut m) = self.cache.write() {
            m.entry(key).or_insert_with(|| terms.clone());
        }
        Ok(terms)
    }

    /// Decompose `V_φ(ρ_A ⊗ ρ_B)V_φ†` into products of points of `Cyl(RA) × Cyl(RB)`.
    pub fn decompose(&self, req: &DecompositionRequest) -> Result<(Vec<DecompositionTerm>, DecompositionPath), DecompError> {
        if !(req.ra >= 0.0 && req.rb >= 0.0) {
            return Err(DecompError::InvalidRequest("output radii must be non-negative".into()));
        }
        // Radii recomputed from vector components can overshoot their cylinder by rounding.
        let settle = |f: f64| if f > 1.0 && f <= 1.0 + CYLINDER_SLACK { 1.0 } else { f };
        let (fa, fb) = req.ratios();
        let (fa, fb) = (settle(fa), settle(fb));
        let phi = normalize_angle(req.phi);
        if !lemma1_feasible(&GrowthQuery::new(fa, fb, phi)) {
            return Err(DecompError::InfeasibleRequest { fa, fb, phi });
        }
        let (ra_in, rb_in) = (req.input_a.transverse_radius(), req.input_b.transverse_radius());
        if ra_in == 0.0 {
            return Ok((zero_radius_split(req.input_a.z, &req.input_b, phi), DecompositionPath::ZeroRadius));
        }
        if rb_in == 0.0 {
            let swapped = zero_radius_split(req.input_b.z, &req.input_a, phi);
            let terms = swapped.into_iter().map(|t| DecompositionTerm::new(t.weight, t.omega_b, t.omega_a)).collect();
            return Ok((terms, DecompositionPath::ZeroRadius));
        }
        if phi == 0.0 {
            return Ok((vec![DecompositionTerm::new(1.0, req.input_a, req.input_b)], DecompositionPath::Identity));
        }
        let (canonical, symmetry) = canonicalize_inputs(req)?;
        let terms = symmetry.apply(&self.canonical_terms(&canonical, req.n, req.tolerance)?);
        let residual = max_residual(&terms, &req.target());
        if residual > req.tolerance {
            return Err(DecompError::ResidualTooLarge { residual, tolerance: req.tolerance });
        }
        Ok((terms, DecompositionPath::LinearProgram))
    }
}

fn solve_canonical(c: &CanonicalRequest, n: usize, tol: f64) -> Result<Vec<DecompositionTerm>, DecompError> {
    let result = hull_membership_general(
        &c.target(),
        &Generators::cylinder(c.ra),
        &Generators::cylinder(c.rb),
        &HullOptions::refined(n, tol),
    )?;
    if !result.feasible {
        return Err(DecompError::ResidualTooLarge { residual: result.residual, tolerance: tol });
    }
    Ok(result.terms)
}

/// Uncached single decomposition.
pub fn decompose_gate_output(req: &DecompositionRequest) -> Result<Vec<DecompositionTerm>, DecompError> {
    Decomposer::new().decompose(req).map(|(t, _)| t)
}

/// Whether `(fA, fB, φ)` lies within the relative band `width` of the analytic
/// boundary, i.e. scaling both ratios by `1 ± width` changes the verdict.
pub fn near_boundary(fa: f64, fb: f64, phi: f64, width: f64) -> bool {
    let at = |s: f64| lemma1_feasible(&GrowthQuery::new(fa * s, fb * s, phi));
    at(1.0 - width) != at(1.0 + width)
}

/// Extra slack used by [`lemma1_feasible`]; re-exported for diagnostics.
pub const ANALYTIC_SLACK: f64 = BOUNDARY_SLACK;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::lambda_cz;

    #[test]
    fn reduced_determinant_examples() {
        let f = (5f64.sqrt() - 2.0).sqrt();
        assert!(reduced_determinant(f, f, PI).abs() < 1e-12);
        assert!((reduced_determinant(0.1, 0.1, PI) - 0.959804).abs() < 1e-6);
        assert!((reduced_determinant(1.0, 0.5, PI) + 0.75).abs() < 1e-12);
    }

    #[test]
    fn determinant_matches_closed_form() {
        for &(a, b, p) in &[(0.3, 0.7, 1.1), (0.9, 0.2, 3.0), (0.5, 0.5, PI), (0.1, 0.95, 5.5)] {
            let d = determinant4(&appendix_operator(a, b, p));
            assert!(d.im.abs() < 1e-12);
            assert!((d.re - reduced_determinant(a, b, p)).abs() < 1e-12, "{a} {b} {p}: {d}");
        }
    }

    #[test]
    fn canonicalization_examples() {
        let (r1, r2) = (0.2, 0.3);
        let req = DecompositionRequest::new(BlochVector::polar(r1, 0.3, 1.0), BlochVector::polar(r2, 1.1, 1.0), 2.0, 0.5, 0.7);
        let (c, s) = canonicalize_inputs(&req).unwrap();
        assert!((c.phi - 2.0).abs() < 1e-15);
        assert!((s.site_a.rotation - 0.3).abs() < 1e-12 && (s.site_b.rotation - 1.1).abs() < 1e-12);
        assert!(!s.site_a.flip && !s.swap);

        let down = DecompositionRequest::new(BlochVector::new(r1, 0.0, -1.0), BlochVector::new(r2, 0.0, -1.0), 2.0, 0.5, 0.7);
        let (c, s) = canonicalize_inputs(&down).unwrap();
        assert!((c.phi - 2.0).abs() < 1e-15);
        assert!(s.site_a.flip && s.site_b.flip);
        assert!((s.site_a.rotation - 2.0).abs() < 1e-15);

        let mixed = DecompositionRequest::new(BlochVector::new(r1, 0.0, 1.0), BlochVector::new(r2, 0.0, -1.0), 2.0, 0.5, 0.7);
        let (c, s) = canonicalize_inputs(&mixed).unwrap();
        assert!(s.reflect);
        assert!((c.phi - 2.0).abs() < 1e-12);

        let bad = DecompositionRequest::new(BlochVector::new(0.1, 0.0, 0.5), BlochVector::NORTH, 1.0, 1.0, 1.0);
        assert!(matches!(canonicalize_inputs(&bad), Err(DecompError::NonExtremalInput(_))));
    }

    #[test]
    fn hull_of_product_is_single_term() {
        let a = BlochVector::new(0.3, 0.0, 1.0);
        let b = BlochVector::new(0.2, 0.0, -1.0);
        let res = hull_membership(&PauliCoeffMatrix::product(&a, &b), 0.3, 0.2, 40, 1e-9).unwrap();
        assert!(res.feasible);
        assert_eq!(res.terms.len(), 1);
        assert!(res.residual < 1e-12);
    }

    #[test]
    fn cz_output_hull_examples() {
        let lam = lambda_cz();
        let r = 0.2;
        let target = apply_gate_pauli(PI, &BlochVector::new(r, 0.0, 1.0), &BlochVector::new(r, 0.0, 1.0));
        let res = hull_membership(&target, 1.01 * lam * r, 1.01 * lam * r, 40, 1e-7).unwrap();
        assert!(res.feasible && res.residual < 1e-7);
        let tight = hull_membership(&target, 0.9 * lam * r, 0.9 * lam * r, 40, 1e-7).unwrap();
        assert!(!tight.feasible);
        assert!(!lemma1_feasible(&GrowthQuery::new(1.0 / (0.9 * lam), 1.0 / (0.9 * lam), PI)));
    }

    #[test]
    fn decompose_examples() {
        let lam = lambda_cz();
        let vb = BlochVector::new(0.3, 0.1, 1.0);
        let zero = DecompositionRequest::new(BlochVector::new(0.0, 0.0, 0.4), vb, 1.3, 0.0, vb.transverse_radius());
        let (terms, path) = Decomposer::new().decompose(&zero).unwrap();
        assert_eq!(path, DecompositionPath::ZeroRadius);
        assert_eq!(terms.len(), 2);
        assert!(max_residual(&terms, &zero.target()) < 1e-15);

        let id = DecompositionRequest::new(BlochVector::new(0.1, 0.0, 1.0), vb, 0.0, 0.1, 0.4);
        assert_eq!(decompose_gate_output(&id).unwrap().len(), 1);

        let r = 0.1;
        let req = DecompositionRequest::new(BlochVector::new(r, 0.0, 1.0), BlochVector::new(r, 0.0, 1.0), PI, lam * r, lam * r);
        let terms = decompose_gate_output(&req).unwrap();
        assert!(max_residual(&terms, &req.target()) < 1e-7);
        let wsum: f64 = terms.iter().map(|t| t.weight).sum();
        assert!((wsum - 1.0).abs() < 1e-7);
        for t in &terms {
            assert!(t.omega_a.transverse_radius() <= lam * r + CYLINDER_SLACK);
            assert!(t.omega_b.transverse_radius() <= lam * r + CYLINDER_SLACK);
            assert!(t.weight >= 0.0);
        }

        let infeasible = DecompositionRequest::new(BlochVector::new(r, 0.0, 1.0), BlochVector::new(r, 0.0, 1.0), PI, 1.5 * r, 1.5 * r);
        assert!(matches!(decompose_gate_output(&infeasible), Err(DecompError::InfeasibleRequest { .. })));
    }

    #[test]
    fn boundary_decomposition_in_all_symmetry_cases() {
        let lam = crate::growth::lambda_phi(2.2);
        let dec = Decomposer::new();
        for (za, zb) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let req = DecompositionRequest::new(
                BlochVector::polar(0.15, 0.4, za),
                BlochVector::polar(0.25, 2.0, zb),
                2.2,
                lam * 0.15,
                lam * 0.25,
            );
            let (terms, path) = dec.decompose(&req).unwrap();
            assert_eq!(path, DecompositionPath::LinearProgram);
            assert!(max_residual(&terms, &req.target()) < 1e-7, "{za} {zb}");
        }
    }
}
