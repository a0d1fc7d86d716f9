//! Single-particle generalized states, cylinder state spaces, canonical
//! diagonal gates, cylindrical measurements and two-particle Pauli
//! coefficient matrices.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used when checking membership of a vector in a cylinder.
pub const CONTAINMENT_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlochError {
    #[error("z component {0} lies outside [-1, 1]")]
    RadiusDomain(f64),
    #[error("vector {vector} is not contained in Cyl({radius})")]
    NotContained { vector: BlochVector, radius: f64 },
}

/// Reduce an angle to `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Fold an angle onto `[0, π]` using the reflection `φ ↦ 2π − φ`.
pub fn fold_angle(angle: f64) -> f64 {
    let a = normalize_angle(angle);
    if a > std::f64::consts::PI {
        TAU - a
    } else {
        a
    }
}

/// Coefficients `(x, y, z)` of the normalized operator `(I + xX + yY + zZ)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for BlochVector {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        [v.x, v.y, v.z]
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// North pole `(0, 0, 1)`, i.e. `|0⟩⟨0|`.
    pub const NORTH: Self = Self::new(0.0, 0.0, 1.0);
    /// South pole `(0, 0, -1)`, i.e. `|1⟩⟨1|`.
    pub const SOUTH: Self = Self::new(0.0, 0.0, -1.0);

    /// Point with transverse radius `r` at azimuth `nu` and height `z`.
    pub fn polar(r: f64, nu: f64, z: f64) -> Self {
        Self::new(r * nu.cos(), r * nu.sin(), z)
    }

    /// Pure qubit state `cos(θ/2)|0⟩ + e^{ia} sin(θ/2)|1⟩`.
    pub fn pure(theta: f64, azimuth: f64) -> Self {
        Self::polar(theta.sin(), azimuth, theta.cos())
    }

    /// Transverse radius without the domain check.
    pub fn transverse_radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn azimuth(&self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }

    /// `(1, x, y, z)`, the row/column used in Pauli coefficient matrices.
    pub fn coefficients(&self) -> [f64; 4] {
        [1.0, self.x, self.y, self.z]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(s * self.x, s * self.y, s * self.z)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }
}

/// Radius of the smallest cylinder containing `v`.
pub fn radius(v: &BlochVector) -> Result<f64, BlochError> {
    if v.z.abs() > 1.0 + CONTAINMENT_SLACK || !v.z.is_finite() {
        return Err(BlochError::RadiusDomain(v.z));
    }
    Ok(v.transverse_radius())
}

/// Phasing operator: scales the transverse components by `r`.
pub fn phasing(v: &BlochVector, r: f64) -> BlochVector {
    BlochVector::new(r * v.x, r * v.y, v.z)
}

/// Action of a diagonal single-qubit unitary: rotation about the z axis.
pub fn z_rotate(v: &BlochVector, angle: f64) -> BlochVector {
    let (s, c) = angle.sin_cos();
    BlochVector::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

/// The Pauli X conjugation `(x, y, z) ↦ (x, -y, -z)`.
pub fn x_flip(v: &BlochVector) -> BlochVector {
    BlochVector::new(v.x, -v.y, -v.z)
}

/// The cylindrical state space `Cyl(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderSpace {
    pub r: f64,
}

impl CylinderSpace {
    pub fn new(r: f64) -> Self {
        assert!(r >= 0.0 && r.is_finite(), "cylinder radius must be finite and >= 0");
        Self { r }
    }

    pub fn contains(&self, v: &BlochVector) -> bool {
        self.contains_with_slack(v, CONTAINMENT_SLACK)
    }

    pub fn contains_with_slack(&self, v: &BlochVector, slack: f64) -> bool {
        v.z.abs() <= 1.0 + slack && v.transverse_radius() <= self.r + slack
    }

    pub fn is_extremal(&self, v: &BlochVector) -> bool {
        (v.z.abs() - 1.0).abs() <= CONTAINMENT_SLACK
            && (v.transverse_radius() - self.r).abs() <= CONTAINMENT_SLACK
    }
}

/// Split a cylinder point into at most two points at `z = ±1`, keeping the
/// transverse components fixed. The endpoints lie on the circle through the
/// point's own radius, which is extremal for the working cylinder `Cyl(radius(v))`.
pub fn extremal_split(
    v: &BlochVector,
    space: &CylinderSpace,
) -> Result<Vec<(f64, BlochVector)>, BlochError> {
    if !space.contains(v) {
        return Err(BlochError::NotContained { vector: *v, radius: space.r });
    }
    let z = v.z.clamp(-1.0, 1.0);
    let p_up = 0.5 * (1.0 + z);
    let up = BlochVector::new(v.x, v.y, 1.0);
    let down = BlochVector::new(v.x, v.y, -1.0);
    let mut terms = Vec::with_capacity(2);
    if p_up > 0.0 {
        terms.push((p_up, up));
    }
    if p_up < 1.0 {
        terms.push((1.0 - p_up, down));
    }
    Ok(terms)
}

/// A two-qubit diagonal unitary written as the canonical controlled phase
/// `diag(1, 1, 1, e^{iφ})` dressed with local z rotations and a global phase:
/// `diag(e^{iφ1}, e^{iφ2}, e^{iφ3}, e^{iφ4})` with basis order `|00⟩, |01⟩, |10⟩, |11⟩`
/// (first label belongs to particle A).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalGate {
    pub phi: f64,
    pub local_a: f64,
    pub local_b: f64,
    pub global_phase: f64,
}

impl DiagonalGate {
    /// The canonical controlled phase `V_φ`.
    pub fn controlled_phase(phi: f64) -> Self {
        Self { phi: normalize_angle(phi), local_a: 0.0, local_b: 0.0, global_phase: 0.0 }
    }

    /// Diagonal entries of the represented unitary.
    pub fn diagonal(&self) -> [Complex64; 4] {
        let g = self.global_phase;
        [
            Complex64::from_polar(1.0, g),
            Complex64::from_polar(1.0, g + self.local_b),
            Complex64::from_polar(1.0, g + self.local_a),
            Complex64::from_polar(1.0, g + self.local_a + self.local_b + self.phi),
        ]
    }
}

/// Write `diag(e^{iφ1}, …, e^{iφ4})` in canonical form.
pub fn canonicalize_gate(phi1: f64, phi2: f64, phi3: f64, phi4: f64) -> DiagonalGate {
    DiagonalGate {
        phi: normalize_angle(phi4 + phi1 - phi2 - phi3),
        local_a: phi3 - phi1,
        local_b: phi2 - phi1,
        global_phase: phi1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementKind {
    Z,
    XyPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementMode {
    #[default]
    Destructive,
    QuasiDestructive,
}

/// A cylindrical measurement: the Z eigenbasis or the eigenbasis of
/// `cos(ω)X + sin(ω)Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSpec {
    pub kind: MeasurementKind,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub mode: MeasurementMode,
}

impl MeasurementSpec {
    pub fn z() -> Self {
        Self { kind: MeasurementKind::Z, omega: 0.0, mode: MeasurementMode::Destructive }
    }

    pub fn xy(omega: f64) -> Self {
        Self {
            kind: MeasurementKind::XyPlane,
            omega: normalize_angle(omega),
            mode: MeasurementMode::Destructive,
        }
    }

    pub fn with_mode(mut self, mode: MeasurementMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = normalize_angle(omega);
        self
    }

    /// Bloch vector `n` of the observable `n·σ` being measured.
    pub fn axis(&self) -> BlochVector {
        match self.kind {
            MeasurementKind::Z => BlochVector::NORTH,
            MeasurementKind::XyPlane => BlochVector::polar(1.0, self.omega, 0.0),
        }
    }
}

/// Outcome "probabilities" of a cylindrical measurement on a single-particle
/// operator. They can be negative for operators outside the Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbs {
    pub plus: f64,
    pub minus: f64,
    pub negative: bool,
}

pub const NEGATIVE_PROBABILITY_TOL: f64 = 1e-12;

pub fn measure_prob(v: &BlochVector, m: &MeasurementSpec) -> OutcomeProbs {
    let expectation = match m.kind {
        MeasurementKind::Z => v.z,
        MeasurementKind::XyPlane => v.x * m.omega.cos() + v.y * m.omega.sin(),
    };
    let plus = 0.5 * (1.0 + expectation);
    let minus = 1.0 - plus;
    let negative = plus < -NEGATIVE_PROBABILITY_TOL || minus < -NEGATIVE_PROBABILITY_TOL;
    OutcomeProbs { plus, minus, negative }
}

/// State left on the measured particle after projection and total Z dephasing.
pub fn post_measurement_state(m: &MeasurementSpec, outcome: i8) -> BlochVector {
    match m.kind {
        MeasurementKind::Z if outcome >= 0 => BlochVector::NORTH,
        MeasurementKind::Z => BlochVector::SOUTH,
        MeasurementKind::XyPlane => BlochVector::default(),
    }
}

/// Two-particle operator `(1/4) Σ m[i][j] σ_i ⊗ σ_j` with `σ = (I, X, Y, Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct PauliCoeffMatrix {
    pub m: [[f64; 4]; 4],
}

impl From<PauliCoeffMatrix> for Vec<f64> {
    fn from(p: PauliCoeffMatrix) -> Self {
        p.m.iter().flatten().copied().collect()
    }
}

impl TryFrom<Vec<f64>> for PauliCoeffMatrix {
    type Error = String;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        if v.len() != 16 {
            return Err(format!("expected 16 coefficients, found {}", v.len()));
        }
        let mut m = [[0.0; 4]; 4];
        for (k, value) in v.into_iter().enumerate() {
            m[k / 4][k % 4] = value;
        }
        Ok(Self { m })
    }
}

fn pauli(i: usize) -> [[Complex64; 2]; 2] {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let im = Complex64::new(0.0, 1.0);
    match i {
        0 => [[l, o], [o, l]],
        1 => [[o, l], [l, o]],
        2 => [[o, -im], [im, o]],
        3 => [[l, o], [o, -l]],
        _ => unreachable!("Pauli index out of range"),
    }
}

/// Dense 4×4 complex matrix in the computational basis `|00⟩, |01⟩, |10⟩, |11⟩`.
pub type Matrix4 = [[Complex64; 4]; 4];

impl PauliCoeffMatrix {
    pub fn zeros() -> Self {
        Self { m: [[0.0; 4]; 4] }
    }

    /// `[1, x_A, y_A, z_A] ⊗ [1, x_B, y_B, z_B]`.
    pub fn product(a: &BlochVector, b: &BlochVector) -> Self {
        let (ca, cb) = (a.coefficients(), b.coefficients());
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = ca[i] * cb[j];
            }
        }
        Self { m }
    }

    pub fn is_normalized(&self) -> bool {
        (self.m[0][0] - 1.0).abs() <= 1e-12
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }

    pub fn add_scaled(&mut self, weight: f64, other: &Self) {
        for i in 0..4 {
            for j in 0..4 {
                self.m[i][j] += weight * other.m[i][j];
            }
        }
    }

    /// Swap the roles of the two particles.
    pub fn transposed(&self) -> Self {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = self.m[j][i];
            }
        }
        Self { m }
    }

    pub fn to_hermitian(&self) -> Matrix4 {
        let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            let si = pauli(i);
            for j in 0..4 {
                let c = self.m[i][j];
                if c == 0.0 {
                    continue;
                }
                let sj = pauli(j);
                for a in 0..2 {
                    for b in 0..2 {
                        for ap in 0..2 {
                            for bp in 0..2 {
                                out[2 * a + b][2 * ap + bp] += 0.25 * c * si[a][ap] * sj[b][bp];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Inverse of [`to_hermitian`](Self::to_hermitian): `m[i][j] = tr(ρ σ_i ⊗ σ_j)`.
    pub fn from_hermitian(rho: &Matrix4) -> Self {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            let si = pauli(i);
            for j in 0..4 {
                let sj = pauli(j);
                let mut tr = Complex64::new(0.0, 0.0);
                for a in 0..2 {
                    for b in 0..2 {
                        for ap in 0..2 {
                            for bp in 0..2 {
                                tr += rho[2 * a + b][2 * ap + bp] * si[ap][a] * sj[bp][b];
                            }
                        }
                    }
                }
                m[i][j] = tr.re;
            }
        }
        Self { m }
    }

    /// Conjugation by the canonical controlled phase `V_φ`.
    ///
    /// With particle B in `|1⟩⟨1|` the transverse part of A is rotated by `φ`
    /// (and vice versa); the `σ+⊗σ+` component of the doubly transverse block
    /// picks up `e^{-iφ}` while `σ+⊗σ-` is invariant.
    pub fn conjugate_by_phase(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let m = &self.m;
        let mut out = *self;

        // A transverse, B in {I, Z}: rotate the component conditioned on B = |1⟩.
        let (a0x, a0y) = ((m[1][0] + m[1][3]) * 0.5, (m[2][0] + m[2][3]) * 0.5);
        let (a1x, a1y) = ((m[1][0] - m[1][3]) * 0.5, (m[2][0] - m[2][3]) * 0.5);
        let (r1x, r1y) = (c * a1x - s * a1y, s * a1x + c * a1y);
        out.m[1][0] = a0x + r1x;
        out.m[1][3] = a0x - r1x;
        out.m[2][0] = a0y + r1y;
        out.m[2][3] = a0y - r1y;

        // B transverse, A in {I, Z}.
        let (b0x, b0y) = ((m[0][1] + m[3][1]) * 0.5, (m[0][2] + m[3][2]) * 0.5);
        let (b1x, b1y) = ((m[0][1] - m[3][1]) * 0.5, (m[0][2] - m[3][2]) * 0.5);
        let (q1x, q1y) = (c * b1x - s * b1y, s * b1x + c * b1y);
        out.m[0][1] = b0x + q1x;
        out.m[3][1] = b0x - q1x;
        out.m[0][2] = b0y + q1y;
        out.m[3][2] = b0y - q1y;

        // Doubly transverse block through the ladder components.
        let (txx, txy, tyx, tyy) = (m[1][1], m[1][2], m[2][1], m[2][2]);
        let cpp = Complex64::new(txx - tyy, -(txy + tyx));
        let cpm = Complex64::new(txx + tyy, txy - tyx);
        let cpp = cpp * Complex64::from_polar(1.0, -phi);
        let sum = cpp + cpm;
        let diff = cpm - cpp;
        out.m[1][1] = 0.5 * sum.re;
        out.m[2][2] = 0.5 * diff.re;
        out.m[1][2] = 0.5 * diff.im;
        out.m[2][1] = -0.5 * sum.im;
        out
    }
}

/// Pauli coefficients of `V_φ (ρ_A ⊗ ρ_B) V_φ†`.
pub fn apply_gate_pauli(phi: f64, a: &BlochVector, b: &BlochVector) -> PauliCoeffMatrix {
    PauliCoeffMatrix::product(a, b).conjugate_by_phase(phi)
}
