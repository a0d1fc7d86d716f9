//! Existence thresholds for cylindrical matter: steering, the open-chain
//! recursion, coarse graining and dimension-recursive bounds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch::{MeasurementMode, MeasurementSpec};
use crate::growth::lambda_cz;
use crate::lattice::{grid_edges, ExperimentSpec, GateOp, InputState, ScheduleStep};
use crate::oracle::MAX_ORACLE_QUBITS;

/// Step size below which the recursion counts as converged.
pub const RECURSION_CONVERGENCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatterError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("oracle verification needs at most {MAX_ORACLE_QUBITS} qubits, construction has {0}")]
    TooLargeForOracle(usize),
}

/// Largest radius particle B can be steered to by measuring A after a diagonal gate.
pub fn steer_max(ra: f64, rb: f64) -> Result<f64, MatterError> {
    if !(0.0..=0.5).contains(&ra) || !(0.0..=0.5).contains(&rb) {
        return Err(MatterError::Domain(format!("steering needs radii in [0, 1/2], got ({ra}, {rb})")));
    }
    Ok(rb / (1.0 - ra))
}

/// Steered radius of B for relative measurement angle `a = ω − θ_A` and gate phase `phi`.
pub fn steered_radius(ra: f64, rb: f64, a: f64, phi: f64) -> f64 {
    let num = Complex64::new(1.0, 0.0) + 0.5 * ra * (Complex64::from_polar(1.0, -a) + Complex64::from_polar(1.0, a - phi));
    rb * num.norm() / (1.0 + ra * a.cos())
}

/// Brute-force maximum of [`steered_radius`] over a `grid × grid` mesh of `(a, φ) ∈ [0, 2π]²`.
///
/// The measurement angle enters only through `a`, so the mesh covers every `(a, φ, ω)`.
pub fn steer_max_numeric(ra: f64, rb: f64, grid: usize) -> f64 {
    let step = std::f64::consts::TAU / grid as f64;
    let mut best: f64 = 0.0;
    for i in 0..=grid {
        let a = i as f64 * step;
        for j in 0..=grid {
            best = best.max(steered_radius(ra, rb, a, j as f64 * step));
        }
    }
    best
}

/// Fixed points of `R ↦ r / (1 − R)`, ascending.
pub fn fixed_points(r: f64) -> Vec<f64> {
    let disc = 1.0 - 4.0 * r;
    if disc < 0.0 {
        Vec::new()
    } else if disc == 0.0 {
        vec![0.5]
    } else {
        let s = disc.sqrt();
        // Lower root via the product of roots to avoid cancellation for small r.
        let upper = 0.5 * (1.0 + s);
        vec![r / upper, upper]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionState {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum RecursionVerdict {
    Converged { value: f64, step: usize },
    Diverged { step: usize },
    /// Neither criterion met within the step budget.
    Unresolved { last: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionReport {
    /// `R_1, R_2, …` as visited.
    pub trajectory: Vec<f64>,
    pub verdict: RecursionVerdict,
}

impl RecursionReport {
    pub fn states(&self, r: f64) -> impl Iterator<Item = RecursionState> + '_ {
        self.trajectory.iter().enumerate().map(move |(k, &big_r)| RecursionState { r, big_r, n: k + 1 })
    }
}

/// Iterate `R_{n+1} = r / (1 − R_n)` from `R_1` for at most `steps` updates.
pub fn iterate_recursion(r: f64, r1: f64, steps: usize) -> RecursionReport {
    let mut trajectory = vec![r1];
    let mut cur = r1;
    if cur >= 1.0 {
        return RecursionReport { trajectory, verdict: RecursionVerdict::Diverged { step: 1 } };
    }
    for k in 1..=steps {
        let next = r / (1.0 - cur);
        trajectory.push(next);
        if next >= 1.0 || !next.is_finite() {
            return RecursionReport { trajectory, verdict: RecursionVerdict::Diverged { step: k + 1 } };
        }
        if (next - cur).abs() < RECURSION_CONVERGENCE {
            return RecursionReport { trajectory, verdict: RecursionVerdict::Converged { value: next, step: k + 1 } };
        }
        cur = next;
    }
    RecursionReport { trajectory, verdict: RecursionVerdict::Unresolved { last: cur } }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatterBounds {
    pub dim: u32,
    pub lower: f64,
    pub upper: f64,
    /// Lower bound with exponent `2D + 1`, as literally stated for regular lattices.
    pub lower_literal: f64,
}

/// Logistic upper bound `F_D`: `F_1 = 1/4`, `F_{D+1} = F_D (1 − F_D)`.
pub fn logistic_upper(dim: u32) -> f64 {
    (1..dim.max(1)).fold(0.25, |f, _| f * (1.0 - f))
}

/// Bounds on the largest input radius at which matter exists on the `dim`-dimensional
/// square lattice. The lower bound is `λ_CZ^{−(Δ−1)}/2` with `Δ = 2·dim` unless overridden.
pub fn matter_bounds(dim: u32, delta_override: Option<u32>) -> Result<MatterBounds, MatterError> {
    if dim == 0 {
        return Err(MatterError::Domain("dimension must be at least 1".into()));
    }
    let delta = delta_override.unwrap_or(2 * dim);
    if delta == 0 {
        return Err(MatterError::Domain("degree must be at least 1".into()));
    }
    let l = lambda_cz();
    Ok(MatterBounds {
        dim,
        lower: 0.5 * l.powi(1 - delta as i32),
        upper: logistic_upper(dim),
        lower_literal: 0.5 * l.powi(-(2 * dim as i32) - 1),
    })
}

/// Threshold below which a long open chain admits a coarse-grained separable
/// description when boundary cylinders grow by `lambda`.
///
/// For `lambda ≤ 2` the boundary condition never binds and the chain threshold 1/4 is returned.
pub fn coarse_grain_threshold(lambda: f64) -> f64 {
    if lambda <= 2.0 {
        return 0.25;
    }
    let t = 1.0 - 2.0 / lambda;
    (1.0 - t * t) / 4.0
}

pub fn coarse_grain_threshold_1d() -> f64 {
    coarse_grain_threshold(lambda_cz())
}

/// The two coarse-graining constraints for input radius `r` (`r < 1/4`):
/// lower fixed point below `1/λ`, and `λ r` below the upper fixed point.
pub fn coarse_grain_constraints(r: f64, lambda: f64) -> (bool, bool) {
    let s = (1.0 - 4.0 * r).max(0.0).sqrt();
    ((1.0 - s) / 2.0 < 1.0 / lambda, lambda * r < (1.0 + s) / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombConstruction {
    pub dim: u32,
    pub grid: usize,
    /// Runnable spec; only built for `dim ≤ 2`.
    pub spec: Option<ExperimentSpec>,
    pub description: String,
}

/// Measurement pattern that reduces a square lattice to non-adjacent chains
/// ending on the central row: columns alternate between removing the sites
/// above or below the centre with Z projections; the remaining chain sites
/// are measured in the XY plane from the far end inward, the centre last.
pub fn comb_construction(dim: u32, grid: usize, radius: f64, oracle: bool) -> Result<CombConstruction, MatterError> {
    if grid == 0 || !(0.0..=1.0).contains(&radius) {
        return Err(MatterError::Domain("grid must be non-empty and radius in [0, 1]".into()));
    }
    let theta = radius.asin();
    let xy = MeasurementSpec::xy(0.0).with_mode(MeasurementMode::Destructive);
    match dim {
        0 => Err(MatterError::Domain("dimension must be at least 1".into())),
        1 => {
            if oracle && grid > MAX_ORACLE_QUBITS {
                return Err(MatterError::TooLargeForOracle(grid));
            }
            let gates = (0..grid.saturating_sub(1)).map(|k| GateOp { edge: [k, k + 1], phi: std::f64::consts::PI, round: 0 }).collect();
            let schedule = (0..grid).map(|k| ScheduleStep { round: 1, ..ScheduleStep::new(k, xy) }).collect();
            Ok(CombConstruction {
                dim,
                grid,
                spec: Some(ExperimentSpec::new(vec![InputState::pure(theta); grid], gates, schedule)),
                description: format!("open chain of {grid} sites measured in order"),
            })
        }
        2 => {
            let n = grid * grid;
            if oracle && n > MAX_ORACLE_QUBITS {
                return Err(MatterError::TooLargeForOracle(n));
            }
            let mid = grid / 2;
            let gates: Vec<GateOp> =
                grid_edges(grid, grid).into_iter().map(|edge| GateOp { edge, phi: std::f64::consts::PI, round: 0 }).collect();
            let mut schedule = Vec::with_capacity(n);
            for col in 0..grid {
                let removed_above = col % 2 == 0;
                for row in 0..grid {
                    let gray = if removed_above { row < mid } else { row > mid };
                    if gray {
                        schedule.push(ScheduleStep { round: 1, ..ScheduleStep::new(row * grid + col, MeasurementSpec::z()) });
                    }
                }
            }
            // Chains: distance from the centre row sets the round, farthest first.
            for dist in (1..grid).rev() {
                for col in 0..grid {
                    let row = if col % 2 == 0 { mid + dist } else { mid.wrapping_sub(dist) };
                    if row < grid {
                        schedule.push(ScheduleStep { round: 1 + (grid - dist) as u32, ..ScheduleStep::new(row * grid + col, xy) });
                    }
                }
            }
            for col in 0..grid {
                schedule.push(ScheduleStep { round: 1 + grid as u32, ..ScheduleStep::new(mid * grid + col, xy) });
            }
            Ok(CombConstruction {
                dim,
                grid,
                spec: Some(ExperimentSpec::new(vec![InputState::pure(theta); n], gates, schedule)),
                description: format!("{grid}x{grid} comb with steering targets on row {mid}"),
            })
        }
        _ => {
            let n = grid.checked_pow(dim).unwrap_or(usize::MAX);
            if oracle && n > MAX_ORACLE_QUBITS {
                return Err(MatterError::TooLargeForOracle(n));
            }
            Ok(CombConstruction {
                dim,
                grid,
                spec: None,
                description: format!(
                    "{dim}-dimensional lattice of side {grid}: 2-colour the slice with last coordinate {mid}; \
                     Z-project the sites above the first colour and below the second; measure the remaining \
                     chains in the XY plane from the far end inward, slice sites last",
                    mid = grid / 2
                ),
            })
        }
    }
}
