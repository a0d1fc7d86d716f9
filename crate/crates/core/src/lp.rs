//! Dense revised simplex for feasibility problems `A w = b, w ≥ 0`.
//!
//! Only a phase-1 problem is solved: artificial variables are attached to
//! every row and their sum is minimized. The problem is feasible when that
//! minimum vanishes. Columns may be appended between solves, which is how
//! column generation warm-starts.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("basis matrix became singular during refactorization")]
    Singular,
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
    #[error("column has {found} entries, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

const PRICE_TOL: f64 = 1e-11;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 50;
const STALL_LIMIT: usize = 40;

/// Phase-1 feasibility problem.
#[derive(Debug, Clone)]
pub struct Phase1 {
    m: usize,
    /// Row signs applied so that the right-hand side is non-negative.
    sign: Vec<f64>,
    b: Vec<f64>,
    cols: Vec<f64>,
    n: usize,
    /// Basis variables; indices `>= ARTIFICIAL` are artificials of row `i - ARTIFICIAL`.
    basis: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    since_refactor: usize,
    pub iterations: usize,
}

const ARTIFICIAL: usize = usize::MAX / 2;

impl Phase1 {
    pub fn new(b: &[f64]) -> Self {
        let m = b.len();
        let sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let bb: Vec<f64> = b.iter().zip(&sign).map(|(v, s)| v * s).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Self {
            m,
            xb: bb.clone(),
            sign,
            b: bb,
            cols: Vec::new(),
            n: 0,
            basis: (0..m).map(|i| ARTIFICIAL + i).collect(),
            binv,
            since_refactor: 0,
            iterations: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn columns(&self) -> usize {
        self.n
    }

    pub fn add_column(&mut self, col: &[f64]) -> Result<usize, LpError> {
        if col.len() != self.m {
            return Err(LpError::Dimension { expected: self.m, found: col.len() });
        }
        self.cols.extend(col.iter().zip(&self.sign).map(|(v, s)| v * s));
        self.n += 1;
        Ok(self.n - 1)
    }

    fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    /// Sum of artificial variables in the current basis.
    pub fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&v, _)| v >= ARTIFICIAL)
            .map(|(_, &x)| x.max(0.0))
            .sum()
    }

    /// Simplex multipliers for the original (unflipped) rows.
    pub fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &v) in self.basis.iter().enumerate() {
            if v >= ARTIFICIAL {
                for (j, yj) in y.iter_mut().enumerate() {
                    *yj += self.binv[k * m + j];
                }
            }
        }
        y.iter().zip(&self.sign).map(|(v, s)| v * s).collect()
    }

    /// Structural variables with positive value, as `(column, weight)`.
    pub fn solution(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&v, &x)| v < ARTIFICIAL && x > 0.0)
            .map(|(&v, &x)| (v, x))
            .collect();
        out.sort_by_key(|&(j, _)| j);
        out
    }

    fn basis_column(&self, v: usize) -> Vec<f64> {
        if v >= ARTIFICIAL {
            let mut e = vec![0.0; self.m];
            e[v - ARTIFICIAL] = 1.0;
            e
        } else {
            self.column(v).to_vec()
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut a = vec![0.0; m * m];
        for (k, &v) in self.basis.iter().enumerate() {
            let c = self.basis_column(v);
            for i in 0..m {
                a[i * m + k] = c[i];
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let (piv, best) = (col..m)
                .map(|r| (r, a[r * m + col].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best < 1e-13 {
                return Err(LpError::Singular);
            }
            if piv != col {
                for j in 0..m {
                    a.swap(piv * m + j, col * m + j);
                    inv.swap(piv * m + j, col * m + j);
                }
            }
            let d = a[col * m + col];
            for j in 0..m {
                a[col * m + j] /= d;
                inv[col * m + j] /= d;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f != 0.0 {
                    for j in 0..m {
                        a[r * m + j] -= f * a[col * m + j];
                        inv[r * m + j] -= f * inv[col * m + j];
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let mut s = 0.0;
            for j in 0..m {
                s += self.binv[i * m + j] * self.b[j];
            }
            self.xb[i] = if s.abs() < 1e-14 { 0.0 } else { s };
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn price(&self, y: &[f64], bland: bool) -> Option<(usize, f64)> {
        let m = self.m;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            let c = &self.cols[j * m..(j + 1) * m];
            let d = -c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
            if d < -PRICE_TOL {
                if bland {
                    return Some((j, d));
                }
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best
    }

    fn phase_duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (k, &v) in self.basis.iter().enumerate() {
            if v >= ARTIFICIAL {
                for (j, yj) in y.iter_mut().enumerate() {
                    *yj += self.binv[k * m + j];
                }
            }
        }
        y
    }

    /// Run simplex iterations until no column prices out.
    pub fn solve(&mut self, max_iterations: usize) -> Result<f64, LpError> {
        let m = self.m;
        let mut best_obj = self.objective();
        let mut stall = 0usize;
        let mut local = 0usize;
        loop {
            if local >= max_iterations {
                return Err(LpError::IterationLimit(max_iterations));
            }
            if self.objective() <= 0.0 {
                return Ok(0.0);
            }
            let y = self.phase_duals();
            let bland = stall >= STALL_LIMIT;
            let Some((enter, _)) = self.price(&y, bland) else {
                return Ok(self.objective());
            };
            let a = self.column(enter).to_vec();
            let mut u = vec![0.0; m];
            for i in 0..m {
                let row = &self.binv[i * m..(i + 1) * m];
                u[i] = row.iter().zip(&a).map(|(p, q)| p * q).sum();
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if u[i] > PIVOT_TOL {
                    let t = self.xb[i].max(0.0) / u[i];
                    leave = match leave {
                        None => Some((i, t)),
                        Some((li, lt)) => {
                            let better = if t < lt - 1e-14 {
                                true
                            } else if t <= lt + 1e-14 {
                                let (vi, vl) = (self.basis[i], self.basis[li]);
                                if bland {
                                    vi < vl
                                } else {
                                    let (ai, al) = (vi >= ARTIFICIAL, vl >= ARTIFICIAL);
                                    (ai && !al) || (ai == al && u[i] > u[li])
                                }
                            } else {
                                false
                            };
                            if better {
                                Some((i, t))
                            } else {
                                Some((li, lt))
                            }
                        }
                    };
                }
            }
            let Some((r, t)) = leave else {
                // Unbounded direction cannot occur in phase 1 with x ≥ 0 bounded objective,
                // but a numerically tiny column does: drop it from consideration.
                self.cols[enter * m..(enter + 1) * m].iter_mut().for_each(|v| *v = 0.0);
                continue;
            };
            // Update basic values and the inverse with an eta transformation.
            for i in 0..m {
                if i != r {
                    self.xb[i] -= t * u[i];
                    if self.xb[i] < 0.0 && self.xb[i] > -1e-13 {
                        self.xb[i] = 0.0;
                    }
                }
            }
            self.xb[r] = t;
            let pr = u[r];
            for j in 0..m {
                self.binv[r * m + j] /= pr;
            }
            for i in 0..m {
                if i != r && u[i] != 0.0 {
                    let f = u[i];
                    for j in 0..m {
                        self.binv[i * m + j] -= f * self.binv[r * m + j];
                    }
                }
            }
            self.basis[r] = enter;
            self.iterations += 1;
            local += 1;
            self.since_refactor += 1;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let obj = self.objective();
            if obj < best_obj - 1e-13 {
                best_obj = obj;
                stall = 0;
            } else {
                stall += 1;
            }
        }
    }

    /// Recompute the inverse and basic values from scratch.
    pub fn refresh(&mut self) -> Result<(), LpError> {
        self.refactor()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_convex_combination() {
        // Express (0.5, 0.25) as a convex combination of square corners.
        let mut lp = Phase1::new(&[1.0, 0.5, 0.25]);
        for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            lp.add_column(&[1.0, x, y]).unwrap();
        }
        let obj = lp.solve(100).unwrap();
        assert!(obj < 1e-12);
        let sol = lp.solution();
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        for (j, w) in sol {
            sw += w;
            sx += w * pts[j].0;
            sy += w * pts[j].1;
        }
        assert!((sw - 1.0).abs() < 1e-12 && (sx - 0.5).abs() < 1e-12 && (sy - 0.25).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_point() {
        let mut lp = Phase1::new(&[1.0, 1.5, -0.2]);
        for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] {
            lp.add_column(&[1.0, x, y]).unwrap();
        }
        let obj = lp.solve(100).unwrap();
        assert!(obj > 0.1);
        // The duals separate the target from every column.
        let y = lp.duals();
        let target = [1.0, 1.5, -0.2];
        let score: f64 = y.iter().zip(target).map(|(a, b)| a * b).sum();
        for (x, yy) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] {
            let c = y[0] + y[1] * x + y[2] * yy;
            assert!(c <= score + 1e-9);
        }
    }

    #[test]
    fn warm_start_after_adding_columns() {
        let mut lp = Phase1::new(&[1.0, 2.0]);
        lp.add_column(&[1.0, 0.0]).unwrap();
        lp.add_column(&[1.0, 1.0]).unwrap();
        assert!(lp.solve(100).unwrap() > 0.5);
        lp.add_column(&[1.0, 3.0]).unwrap();
        assert!(lp.solve(100).unwrap() < 1e-12);
        assert_eq!(lp.add_column(&[1.0]), Err(LpError::Dimension { expected: 2, found: 1 }));
    }

    #[test]
    fn degenerate_duplicate_rows() {
        let mut lp = Phase1::new(&[1.0, 1.0, 0.3, 0.3]);
        for x in [0.0, 0.5, 1.0] {
            lp.add_column(&[1.0, 1.0, x, x]).unwrap();
        }
        assert!(lp.solve(100).unwrap() < 1e-12);
        lp.refresh().unwrap_or(());
    }
}
