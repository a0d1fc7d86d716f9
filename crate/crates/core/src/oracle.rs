//! Exact density-matrix reference for small experiments.
//!
//! Basis index bit `m − 1 − p` holds the qubit at position `p`, so for two
//! qubits `(a, b)` the index is `2a + b`, matching [`crate::bloch::Matrix4`].
//! Z outcome `+1` is `|0⟩`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::bloch::{BlochVector, DiagonalGate, Matrix4, MeasurementKind, MeasurementMode, MeasurementSpec};
use crate::lattice::{Event, ExperimentSpec, SimError};

pub const MAX_ORACLE_QUBITS: usize = 10;
/// Branches lighter than this are dropped from the outcome tree.
pub const PRUNE_PROBABILITY: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle supports at most {MAX_ORACLE_QUBITS} qubits, got {0}")]
    TooManyQubits(usize),
    #[error("qubit {0} is not present")]
    MissingQubit(usize),
    #[error(transparent)]
    Spec(#[from] SimError),
}

fn single_qubit(v: &BlochVector) -> [[Complex64; 2]; 2] {
    let h = Complex64::new(0.5, 0.0);
    [
        [h * (1.0 + v.z), Complex64::new(0.5 * v.x, -0.5 * v.y)],
        [Complex64::new(0.5 * v.x, 0.5 * v.y), h * (1.0 - v.z)],
    ]
}

/// Dense (possibly unnormalized) density matrix over a set of labelled qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    qubits: Vec<usize>,
    rho: Vec<Complex64>,
}

impl DenseState {
    /// Product state of the given Bloch vectors, labelled `0..n`.
    pub fn product(vectors: &[BlochVector]) -> Result<Self, OracleError> {
        if vectors.len() > MAX_ORACLE_QUBITS {
            return Err(OracleError::TooManyQubits(vectors.len()));
        }
        let mut rho = vec![Complex64::new(1.0, 0.0)];
        let mut dim = 1usize;
        for v in vectors {
            let s = single_qubit(v);
            let nd = dim * 2;
            let mut next = vec![Complex64::default(); nd * nd];
            for r in 0..dim {
                for c in 0..dim {
                    let x = rho[r * dim + c];
                    for (i, row) in s.iter().enumerate() {
                        for (j, y) in row.iter().enumerate() {
                            next[(2 * r + i) * nd + 2 * c + j] = x * y;
                        }
                    }
                }
            }
            rho = next;
            dim = nd;
        }
        Ok(Self { qubits: (0..vectors.len()).collect(), rho })
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    fn dim(&self) -> usize {
        1 << self.qubits.len()
    }

    fn bit(&self, label: usize) -> Result<usize, OracleError> {
        let p = self.qubits.iter().position(|&q| q == label).ok_or(OracleError::MissingQubit(label))?;
        Ok(self.qubits.len() - 1 - p)
    }

    pub fn trace(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|k| self.rho[k * d + k].re).sum()
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.rho[r * self.dim() + c]
    }

    /// Apply a diagonal gate with `a` as the first label of its basis.
    pub fn evolve(&mut self, gate: &DiagonalGate, a: usize, b: usize) -> Result<(), OracleError> {
        let (ba, bb) = (self.bit(a)?, self.bit(b)?);
        let diag = gate.diagonal();
        let d = self.dim();
        let phase: Vec<Complex64> = (0..d).map(|k| diag[2 * ((k >> ba) & 1) + ((k >> bb) & 1)]).collect();
        for r in 0..d {
            for c in 0..d {
                self.rho[r * d + c] *= phase[r] * phase[c].conj();
            }
        }
        Ok(())
    }

    /// Project qubit `label` onto outcome `outcome` of `m`, leaving the
    /// branch weight in the trace.
    pub fn project(&mut self, label: usize, m: &MeasurementSpec, outcome: i8) -> Result<(), OracleError> {
        let bit = self.bit(label)?;
        let n = m.axis();
        let s = if outcome >= 0 { 1.0 } else { -1.0 };
        // P = (I + s n·σ)/2 in the single-qubit basis.
        let p = [
            [Complex64::new(0.5 * (1.0 + s * n.z), 0.0), Complex64::new(0.5 * s * n.x, -0.5 * s * n.y)],
            [Complex64::new(0.5 * s * n.x, 0.5 * s * n.y), Complex64::new(0.5 * (1.0 - s * n.z), 0.0)],
        ];
        let d = self.dim();
        let mask = 1 << bit;
        let mut tmp = vec![Complex64::default(); d * d];
        // tmp = P ρ
        for r in 0..d {
            let i = (r >> bit) & 1;
            let r0 = r & !mask;
            for c in 0..d {
                tmp[r * d + c] = p[i][0] * self.rho[r0 * d + c] + p[i][1] * self.rho[(r0 | mask) * d + c];
            }
        }
        // ρ' = tmp P
        for r in 0..d {
            for c in 0..d {
                let j = (c >> bit) & 1;
                let c0 = c & !mask;
                self.rho[r * d + c] = tmp[r * d + c0] * p[0][j] + tmp[r * d + (c0 | mask)] * p[1][j];
            }
        }
        Ok(())
    }

    /// Remove coherences of qubit `label` in the Z basis.
    pub fn dephase(&mut self, label: usize) -> Result<(), OracleError> {
        let bit = self.bit(label)?;
        let d = self.dim();
        for r in 0..d {
            for c in 0..d {
                if ((r ^ c) >> bit) & 1 == 1 {
                    self.rho[r * d + c] = Complex64::default();
                }
            }
        }
        Ok(())
    }

    /// Trace out qubit `label`.
    pub fn discard(&mut self, label: usize) -> Result<(), OracleError> {
        let bit = self.bit(label)?;
        let d = self.dim();
        let nd = d / 2;
        let low = (1 << bit) - 1;
        let expand = |k: usize, v: usize| ((k & !low) << 1) | (v << bit) | (k & low);
        let mut next = vec![Complex64::default(); nd * nd];
        for r in 0..nd {
            for c in 0..nd {
                next[r * nd + c] = self.rho[expand(r, 0) * d + expand(c, 0)] + self.rho[expand(r, 1) * d + expand(c, 1)];
            }
        }
        self.rho = next;
        self.qubits.retain(|&q| q != label);
        Ok(())
    }

    /// Reduced two-qubit matrix of `(a, b)`, normalized to unit trace.
    pub fn reduced_pair(&self, a: usize, b: usize) -> Result<Matrix4, OracleError> {
        let mut s = self.clone();
        let others: Vec<usize> = self.qubits.iter().copied().filter(|&q| q != a && q != b).collect();
        for q in others {
            s.discard(q)?;
        }
        let tr = s.trace();
        let flip = s.qubits[0] != a;
        let mut out = [[Complex64::default(); 4]; 4];
        let swap = |k: usize| if flip { ((k & 1) << 1) | (k >> 1) } else { k };
        for (r, row) in out.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = s.entry(swap(r), swap(c)) / tr;
            }
        }
        Ok(out)
    }

    /// Bloch vector of qubit `label`, normalized to unit trace.
    pub fn bloch(&self, label: usize) -> Result<BlochVector, OracleError> {
        let bit = self.bit(label)?;
        let d = self.dim();
        let (mut z, mut off) = (0.0, Complex64::default());
        for r in 0..d {
            if (r >> bit) & 1 == 0 {
                z += self.rho[r * d + r].re - self.rho[(r | 1 << bit) * d + (r | 1 << bit)].re;
                off += self.rho[(r | 1 << bit) * d + r];
            }
        }
        let tr = self.trace();
        Ok(BlochVector::new(2.0 * off.re / tr, 2.0 * off.im / tr, z / tr))
    }
}

/// Exact outcome distribution of `spec`, keyed by `+`/`-` strings in schedule order.
///
/// Follows the chronological event order, independent of any ledger plan.
pub fn exact_distribution(spec: &ExperimentSpec) -> Result<BTreeMap<String, f64>, OracleError> {
    spec.validate()?;
    if spec.num_nodes() > MAX_ORACLE_QUBITS {
        return Err(OracleError::TooManyQubits(spec.num_nodes()));
    }
    let vectors: Vec<BlochVector> = spec.inputs.iter().map(|i| i.bloch()).collect();
    let state = DenseState::product(&vectors)?;
    let gates = spec.gate_list();
    let events = spec.events();
    let mut out = BTreeMap::new();
    let mut outcomes = vec![0i8; spec.schedule.len()];
    explore(spec, &gates, &events, 0, state, &mut outcomes, &mut out)?;
    Ok(out)
}

fn explore(
    spec: &ExperimentSpec,
    gates: &[crate::lattice::GateOp],
    events: &[Event],
    mut at: usize,
    mut state: DenseState,
    outcomes: &mut Vec<i8>,
    out: &mut BTreeMap<String, f64>,
) -> Result<(), OracleError> {
    while at < events.len() {
        match events[at] {
            Event::Gate(k) => {
                let g = gates[k];
                state.evolve(&DiagonalGate::controlled_phase(g.phi), g.edge[0], g.edge[1])?;
                at += 1;
            }
            Event::Measure(k) => {
                let step = &spec.schedule[k];
                let m = step.resolve(outcomes);
                for outcome in [1i8, -1] {
                    let mut branch = state.clone();
                    branch.project(step.node, &m, outcome)?;
                    if branch.trace() < PRUNE_PROBABILITY {
                        continue;
                    }
                    match m.mode {
                        MeasurementMode::Destructive => branch.discard(step.node)?,
                        MeasurementMode::QuasiDestructive => {
                            if m.kind == MeasurementKind::XyPlane {
                                branch.dephase(step.node)?;
                            }
                        }
                    }
                    outcomes[k] = outcome;
                    explore(spec, gates, events, at + 1, branch, outcomes, out)?;
                }
                outcomes[k] = 0;
                return Ok(());
            }
        }
    }
    let key: String = outcomes.iter().map(|&o| if o >= 0 { '+' } else { '-' }).collect();
    *out.entry(key).or_insert(0.0) += state.trace();
    Ok(())
}
