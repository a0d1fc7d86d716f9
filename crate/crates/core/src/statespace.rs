//! Z-symmetric single-particle state spaces and the searches for the radial
//! growth needed to keep gate outputs separable with respect to them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch::{apply_gate_pauli, normalize_angle, phasing, BlochVector, CONTAINMENT_SLACK};
use crate::decompose::{
    hull_membership_general, DecompError, Generators, HullOptions, Ring, DEFAULT_DISCRETIZATION, DEFAULT_TOLERANCE,
};
use crate::growth::lambda_phi;

/// Largest output radius tried before giving up on an upper bracket.
pub const MAX_BRACKET: f64 = 64.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateSpaceError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition not met: {0}")]
    PreconditionNotMet(String),
    #[error(transparent)]
    Decomposition(#[from] DecompError),
}

/// Body of revolution about the z axis with a concave piecewise-linear
/// radius profile. The profile covers `[z_first, z_last]`; a single
/// breakpoint describes a horizontal disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct SymmetricStateSpace {
    profile: Vec<(f64, f64)>,
}

impl TryFrom<Vec<[f64; 2]>> for SymmetricStateSpace {
    type Error = StateSpaceError;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        Self::new(v.into_iter().map(|p| (p[0], p[1])).collect())
    }
}

impl From<SymmetricStateSpace> for Vec<[f64; 2]> {
    fn from(s: SymmetricStateSpace) -> Self {
        s.profile.into_iter().map(|(z, r)| [z, r]).collect()
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

impl SymmetricStateSpace {
    pub fn new(profile: Vec<(f64, f64)>) -> Result<Self, StateSpaceError> {
        if profile.is_empty() {
            return Err(StateSpaceError::InvalidProfile("empty profile".into()));
        }
        for &(z, r) in &profile {
            if !(z.abs() <= 1.0 && r >= 0.0 && r.is_finite()) {
                return Err(StateSpaceError::InvalidProfile(format!("breakpoint ({z}, {r}) out of range")));
            }
        }
        for w in profile.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(StateSpaceError::InvalidProfile("z must be strictly increasing".into()));
            }
        }
        for w in profile.windows(3) {
            // Concave: the middle point is on or above the chord.
            if cross(w[0], w[1], w[2]) > 1e-12 {
                return Err(StateSpaceError::InvalidProfile(format!("profile not concave at z = {}", w[1].0)));
            }
        }
        Ok(Self { profile })
    }

    pub fn cylinder(r: f64) -> Self {
        Self { profile: vec![(-1.0, r), (1.0, r)] }
    }

    pub fn profile(&self) -> &[(f64, f64)] {
        &self.profile
    }

    pub fn max_radius(&self) -> f64 {
        self.profile.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.profile[0].0, self.profile[self.profile.len() - 1].0)
    }

    /// Radius of the body at height `z`, or `None` outside its z range.
    pub fn radius_at(&self, z: f64) -> Option<f64> {
        let (lo, hi) = self.z_range();
        if z < lo - CONTAINMENT_SLACK || z > hi + CONTAINMENT_SLACK {
            return None;
        }
        if self.profile.len() == 1 {
            return Some(self.profile[0].1);
        }
        let z = z.clamp(lo, hi);
        for w in self.profile.windows(2) {
            let ((z0, r0), (z1, r1)) = (w[0], w[1]);
            if z <= z1 {
                let t = (z - z0) / (z1 - z0);
                return Some(r0 + t * (r1 - r0));
            }
        }
        Some(self.profile[self.profile.len() - 1].1)
    }

    pub fn contains(&self, v: &BlochVector) -> bool {
        self.radius_at(v.z).is_some_and(|r| v.transverse_radius() <= r + CONTAINMENT_SLACK)
    }

    pub fn rings(&self) -> Vec<Ring> {
        self.profile.iter().map(|&(z, radius)| Ring { z, radius }).collect()
    }

    /// Extremal circles represented by their azimuth-0 points.
    pub fn circle_points(&self) -> Vec<BlochVector> {
        self.profile.iter().map(|&(z, r)| BlochVector::new(r, 0.0, z)).collect()
    }

    pub fn is_z_symmetric(&self) -> bool {
        let n = self.profile.len();
        (0..n).all(|k| {
            let (a, b) = (self.profile[k], self.profile[n - 1 - k]);
            (a.0 + b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { profile: self.profile.iter().map(|&(z, r)| (z, r * factor)).collect() }
    }

    /// Whether some extremal circle with `|z| = 1` has positive radius.
    pub fn has_rim_at_pole(&self) -> bool {
        self.profile.iter().any(|&(z, r)| (z.abs() - 1.0).abs() <= 1e-12 && r > 0.0)
    }
}

/// Convex hull of two discs of radius `r` at `z = ±h` and the poles.
pub fn b_space(r: f64, h: f64) -> Result<SymmetricStateSpace, StateSpaceError> {
    if !(0.0..=1.0).contains(&h) || !(r >= 0.0 && r.is_finite()) {
        return Err(StateSpaceError::Domain(format!("b_space needs 0 <= h <= 1 and r >= 0, got r = {r}, h = {h}")));
    }
    let profile = if h == 1.0 {
        vec![(-1.0, r), (1.0, r)]
    } else if h == 0.0 {
        vec![(-1.0, 0.0), (0.0, r), (1.0, 0.0)]
    } else {
        vec![(-1.0, 0.0), (-h, r), (h, r), (1.0, 0.0)]
    };
    SymmetricStateSpace::new(profile)
}

/// Revolve points about the z axis and take the convex hull.
pub fn symmetrize(points: &[BlochVector]) -> Result<SymmetricStateSpace, StateSpaceError> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points {
        if p.z.abs() > 1.0 + CONTAINMENT_SLACK {
            return Err(StateSpaceError::Domain(format!("point {p} has |z| > 1")));
        }
        pts.push((p.z.clamp(-1.0, 1.0), p.transverse_radius()));
    }
    if pts.is_empty() {
        return Err(StateSpaceError::InvalidProfile("no points".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    // Keep the largest radius per height.
    pts.dedup_by(|next, kept| (next.0 - kept.0).abs() <= 1e-14);
    // Upper concave hull by the monotone chain.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) >= -1e-15 {
            hull.pop();
        }
        hull.push(p);
    }
    SymmetricStateSpace::new(hull)
}

/// Convex hull of two symmetric state spaces.
pub fn hull_of(a: &SymmetricStateSpace, b: &SymmetricStateSpace) -> Result<SymmetricStateSpace, StateSpaceError> {
    let mut pts = a.circle_points();
    pts.extend(b.circle_points());
    symmetrize(&pts)
}

/// A state space admitted to the growth searches.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpace {
    Symmetric(SymmetricStateSpace),
    /// Convex hull of a finite point set, not symmetrized.
    Points(Vec<BlochVector>),
}

impl From<SymmetricStateSpace> for StateSpace {
    fn from(s: SymmetricStateSpace) -> Self {
        StateSpace::Symmetric(s)
    }
}

impl StateSpace {
    /// Extremal inputs to test. For symmetric spaces one azimuth per circle
    /// suffices since local z rotations commute with the gate and fix the
    /// output hull.
    fn inputs(&self) -> Vec<BlochVector> {
        match self {
            StateSpace::Symmetric(s) => s.circle_points(),
            StateSpace::Points(p) => p.clone(),
        }
    }

    fn z_symmetric(&self) -> bool {
        matches!(self, StateSpace::Symmetric(s) if s.is_z_symmetric())
    }

    /// Generators of `T_R(S)`.
    fn phased(&self, factor: f64) -> Generators {
        match self {
            StateSpace::Symmetric(s) => Generators::Rings(s.scaled(factor).rings()),
            StateSpace::Points(p) => Generators::Points(p.iter().map(|v| phasing(v, factor)).collect()),
        }
    }

    fn max_radius(&self) -> f64 {
        match self {
            StateSpace::Symmetric(s) => s.max_radius(),
            StateSpace::Points(p) => p.iter().map(|v| v.transverse_radius()).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Azimuthal discretization of every extremal circle.
    pub n: usize,
    /// Bisection tolerance on the searched radius.
    pub tol: f64,
    /// Residual tolerance of each LP.
    pub lp_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { n: DEFAULT_DISCRETIZATION, tol: 1e-6, lp_tol: DEFAULT_TOLERANCE }
    }
}

impl SearchOptions {
    pub fn new(n: usize, tol: f64) -> Self {
        Self { n, tol, lp_tol: DEFAULT_TOLERANCE }
    }
}

/// Distinct input pairs after reductions: if a space is symmetric under
/// `z ↦ −z`, an X conjugation on that particle maps `z` to `|z|` at the cost of
/// `φ ↦ −φ`, which complex conjugation undoes since every generator set here
/// is symmetric under `y ↦ −y`.
fn input_pairs(sa: &StateSpace, sb: &StateSpace) -> Vec<(BlochVector, BlochVector)> {
    let fold = |v: BlochVector, sym: bool| if sym && v.z < 0.0 && v.y == 0.0 { BlochVector::new(v.x, 0.0, -v.z) } else { v };
    let (syma, symb) = (sa.z_symmetric(), sb.z_symmetric());
    let mut pairs: Vec<(BlochVector, BlochVector)> = Vec::new();
    for a in sa.inputs() {
        for b in sb.inputs() {
            let p = (fold(a, syma), fold(b, symb));
            if !pairs.iter().any(|q| q.0 == p.0 && q.1 == p.1) {
                pairs.push(p);
            }
        }
    }
    pairs
}

fn outputs_separable(
    pairs: &[(BlochVector, BlochVector)],
    phi: f64,
    gen_a: &Generators,
    gen_b: &Generators,
    opts: &SearchOptions,
) -> Result<bool, DecompError> {
    let hull = HullOptions::grid(opts.n, opts.lp_tol);
    for (a, b) in pairs {
        let target = apply_gate_pauli(phi, a, b);
        if !hull_membership_general(&target, gen_a, gen_b, &hull)?.feasible {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest `x` in `(0, MAX_BRACKET]` at which the monotone predicate holds, to within `tol`.
fn bisect_min<F>(start: f64, tol: f64, mut feasible: F) -> Result<f64, StateSpaceError>
where
    F: FnMut(f64) -> Result<bool, DecompError>,
{
    let start = start.clamp(1e-6, MAX_BRACKET);
    let (mut lo, mut hi);
    if feasible(start)? {
        hi = start;
        lo = start / 2.0;
        while feasible(lo)? {
            hi = lo;
            if lo < tol {
                return Ok(hi);
            }
            lo /= 2.0;
        }
    } else {
        lo = start;
        hi = (2.0 * start).min(MAX_BRACKET);
        while !feasible(hi)? {
            if hi >= MAX_BRACKET {
                return Err(DecompError::NoUpperBracket(MAX_BRACKET).into());
            }
            lo = hi;
            hi = (2.0 * hi).min(MAX_BRACKET);
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest radius `R` such that the gate output on every pair of extremal
/// inputs is separable with respect to `Cyl(R) × Cyl(R)`.
pub fn min_output_radius_with(
    space_a: &StateSpace,
    space_b: &StateSpace,
    phi: f64,
    opts: &SearchOptions,
) -> Result<f64, StateSpaceError> {
    let phi = normalize_angle(phi);
    let start = space_a.max_radius().max(space_b.max_radius());
    if phi == 0.0 {
        return Ok(start);
    }
    let pairs = input_pairs(space_a, space_b);
    bisect_min(start.max(opts.tol), opts.tol, |r| {
        let g = Generators::cylinder(r);
        outputs_separable(&pairs, phi, &g, &g, opts)
    })
}

pub fn min_output_radius(
    space_a: &SymmetricStateSpace,
    space_b: &SymmetricStateSpace,
    phi: f64,
    tol: f64,
) -> Result<f64, StateSpaceError> {
    min_output_radius_with(
        &space_a.clone().into(),
        &space_b.clone().into(),
        phi,
        &SearchOptions { tol, ..SearchOptions::default() },
    )
}

/// Smallest uniform phasing growth `R` with
/// `V(S_A ⊗ S_B) ⊆ Conv(T_R(S_A) ⊗ T_R(S_B))`.
pub fn r_star_with(
    space_a: &StateSpace,
    space_b: &StateSpace,
    phi: f64,
    opts: &SearchOptions,
) -> Result<f64, StateSpaceError> {
    let phi = normalize_angle(phi);
    if phi == 0.0 {
        return Ok(1.0);
    }
    let pairs = input_pairs(space_a, space_b);
    bisect_min(1.0, opts.tol, |r| outputs_separable(&pairs, phi, &space_a.phased(r), &space_b.phased(r), opts))
}

pub fn r_star(
    space_a: &SymmetricStateSpace,
    space_b: &SymmetricStateSpace,
    phi: f64,
    n: usize,
    tol: f64,
) -> Result<f64, StateSpaceError> {
    r_star_with(&space_a.clone().into(), &space_b.clone().into(), phi, &SearchOptions::new(n, tol))
}

/// One evaluation of the B-space accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BSpaceRow {
    pub r: f64,
    pub feasible: bool,
    pub r1: f64,
}

/// Output cylinder radius after the first gate on `B(r, √(1−r²))` inputs and
/// whether growth by `λ(φ)` for the remaining `delta − 1` gates stays within 1.
pub fn bspace_row(r: f64, delta: u32, phi: f64, opts: &SearchOptions) -> Result<BSpaceRow, StateSpaceError> {
    let space: StateSpace = b_space(r, (1.0 - r * r).max(0.0).sqrt())?.into();
    let r1 = min_output_radius_with(&space, &space, phi, opts)?;
    let grown = r1 * lambda_phi(phi).powi(delta as i32 - 1);
    Ok(BSpaceRow { r, feasible: grown <= 1.0, r1 })
}

/// Largest input radius simulable with `B(r, √(1−r²))` input spaces on
/// graphs of degree `delta`.
pub fn max_input_radius_bspace(delta: u32, phi: f64, n: usize) -> Result<f64, StateSpaceError> {
    let (value, _) = max_input_radius_bspace_with(delta, phi, &SearchOptions::new(n, 1e-7), 1e-5)?;
    Ok(value)
}

/// As [`max_input_radius_bspace`], also returning every row evaluated.
pub fn max_input_radius_bspace_with(
    delta: u32,
    phi: f64,
    opts: &SearchOptions,
    r_tol: f64,
) -> Result<(f64, Vec<BSpaceRow>), StateSpaceError> {
    if delta < 2 {
        return Err(StateSpaceError::Domain("delta must be at least 2".into()));
    }
    let mut rows = Vec::new();
    let phi = normalize_angle(phi);
    if phi == 0.0 {
        return Ok((1.0, rows));
    }
    // The cylinder value λ^{-Δ} brackets the search from below.
    let baseline = lambda_phi(phi).powi(-(delta as i32));
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut probe = baseline;
    for _ in 0..8 {
        let row = bspace_row(probe, delta, phi, opts)?;
        rows.push(row);
        if row.feasible {
            lo = probe;
            probe = (probe * 1.05).min(1.0);
            if lo >= 1.0 {
                return Ok((1.0, rows));
            }
        } else {
            hi = probe;
            break;
        }
    }
    while hi - lo > r_tol {
        let mid = 0.5 * (lo + hi);
        let row = bspace_row(mid, delta, phi, opts)?;
        rows.push(row);
        if row.feasible {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma8Report {
    pub r_star_space: f64,
    pub r_star_cylinder: f64,
    pub holds: bool,
}

/// Compare `R*` of a space containing a rim point `[x, y, ±1]` against the cylinder.
pub fn lemma8_audit(space: &SymmetricStateSpace, phi: f64, opts: &SearchOptions) -> Result<Lemma8Report, StateSpaceError> {
    if !space.has_rim_at_pole() {
        return Err(StateSpaceError::PreconditionNotMet(
            "no extremal circle of positive radius at |z| = 1".into(),
        ));
    }
    let s: StateSpace = space.clone().into();
    let r_star_space = r_star_with(&s, &s, phi, opts)?;
    let cyl: StateSpace = SymmetricStateSpace::cylinder(space.max_radius()).into();
    let r_star_cylinder = r_star_with(&cyl, &cyl, phi, opts)?;
    Ok(Lemma8Report { r_star_space, r_star_cylinder, holds: r_star_space >= r_star_cylinder - 2.0 * opts.tol })
}

/// Default phase for the state-space examples (the CZ gate).
pub const CZ_PHASE: f64 = PI;
