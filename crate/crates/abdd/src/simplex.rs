//! Dense two-phase simplex with Bland's rule.
//!
//! Small by design: the margin programs solved here have a few dozen rows
//! (one per lifted hypothesis plus the two class-mass equalities), so a full
//! dense tableau with anti-cycling pivoting is both simple and fast. The
//! solver reports the optimal point *and* the row duals, which the margin
//! certificate needs to recover the primal weight vector from the dual
//! program.
//!
//! Conventions: variables are nonnegative, the objective is minimized, and
//! for a `≤` row at optimum the reported dual is ≤ 0 so that
//! `objective = Σ_i dual_i · rhs_i` holds.

use std::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    GreaterEq,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpConstraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min c·x` subject to the rows and `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<LpConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpFailure {
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for LpFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpFailure::Infeasible => write!(f, "infeasible"),
            LpFailure::Unbounded => write!(f, "unbounded"),
            LpFailure::IterationLimit => write!(f, "pivot limit exceeded"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub variables: Vec<f64>,
    /// One multiplier per input row, in input order.
    pub row_duals: Vec<f64>,
    pub pivots: usize,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with_tolerance(lp, DEFAULT_TOLERANCE)
}

pub fn solve_with_tolerance(lp: &LinearProgram, tol: f64) -> Result<LpSolution> {
    Tableau::build(lp, tol)?.solve()
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    /// Phase-2 cost per column.
    cost: Vec<f64>,
    /// Columns allowed to enter in phase 2 (artificials are not).
    allowed: Vec<bool>,
    basis: Vec<usize>,
    /// Unit column of each row (slack or artificial) for dual recovery.
    unit_col: Vec<usize>,
    /// +1/-1 per row: sign applied while normalizing the rhs.
    row_sign: Vec<f64>,
    num_structural: usize,
    artificial_start: usize,
    tol: f64,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram, tol: f64) -> Result<Self> {
        let n = lp.objective.len();
        for (i, c) in lp.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: c.coeffs.len(),
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid {
                    what: "linear program",
                    detail: format!("row {i} has a non-finite entry"),
                });
            }
        }
        let m = lp.constraints.len();

        // Normalize to nonnegative rhs, count extra columns.
        let mut normalized = Vec::with_capacity(m);
        let mut row_sign = vec![1.0; m];
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut coeffs = c.coeffs.clone();
            let mut relation = c.relation;
            let mut rhs = c.rhs;
            if rhs < 0.0 {
                for v in &mut coeffs {
                    *v = -*v;
                }
                rhs = -rhs;
                row_sign[i] = -1.0;
                relation = match relation {
                    Relation::LessEq => Relation::GreaterEq,
                    Relation::GreaterEq => Relation::LessEq,
                    Relation::Eq => Relation::Eq,
                };
            }
            normalized.push((coeffs, relation, rhs));
        }

        let num_slack = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Eq)
            .count();
        let num_artificial = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::LessEq)
            .count();
        let total = n + num_slack + num_artificial;
        let artificial_start = n + num_slack;

        let mut rows = vec![vec![0.0; total]; m];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![usize::MAX; m];
        let mut unit_col = vec![usize::MAX; m];
        let mut next_slack = n;
        let mut next_artificial = artificial_start;
        for (i, (coeffs, relation, b)) in normalized.into_iter().enumerate() {
            rows[i][..n].copy_from_slice(&coeffs);
            rhs[i] = b;
            match relation {
                Relation::LessEq => {
                    rows[i][next_slack] = 1.0;
                    basis[i] = next_slack;
                    unit_col[i] = next_slack;
                    next_slack += 1;
                }
                Relation::GreaterEq => {
                    rows[i][next_slack] = -1.0;
                    next_slack += 1;
                    rows[i][next_artificial] = 1.0;
                    basis[i] = next_artificial;
                    unit_col[i] = next_artificial;
                    next_artificial += 1;
                }
                Relation::Eq => {
                    rows[i][next_artificial] = 1.0;
                    basis[i] = next_artificial;
                    unit_col[i] = next_artificial;
                    next_artificial += 1;
                }
            }
        }

        let mut cost = vec![0.0; total];
        cost[..n].copy_from_slice(&lp.objective);
        let mut allowed = vec![true; total];
        for a in allowed.iter_mut().skip(artificial_start) {
            *a = false;
        }

        Ok(Self {
            rows,
            rhs,
            cost,
            allowed,
            basis,
            unit_col,
            row_sign,
            num_structural: n,
            artificial_start,
            tol,
            pivots: 0,
        })
    }

    fn solve(mut self) -> Result<LpSolution> {
        // Phase 1: minimize the artificial mass.
        if self.artificial_start < self.rows.first().map_or(0, Vec::len) {
            let phase1_cost: Vec<f64> = (0..self.cost.len())
                .map(|j| if j >= self.artificial_start { 1.0 } else { 0.0 })
                .collect();
            let value = self.run_phase(&phase1_cost, true)?;
            if value > self.tol {
                return Err(Error::Lp(LpFailure::Infeasible));
            }
            self.evict_basic_artificials();
        }

        // Phase 2: the real objective, artificials blocked.
        let cost = self.cost.clone();
        let objective = self.run_phase(&cost, false)?;

        let mut variables = vec![0.0; self.num_structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_structural {
                variables[b] = self.rhs[i];
            }
        }
        let reduced = self.reduced_costs(&cost);
        let row_duals = (0..self.rows.len())
            .map(|i| self.row_sign[i] * -reduced[self.unit_col[i]])
            .collect();
        Ok(LpSolution {
            objective,
            variables,
            row_duals,
            pivots: self.pivots,
        })
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut reduced = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, r) in reduced.iter_mut().enumerate() {
                    *r -= cb * self.rows[i][j];
                }
            }
        }
        reduced
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, &v)| cost[b] * v)
            .sum()
    }

    /// Run Bland-rule simplex to optimality for the given costs; in phase 1
    /// artificial columns may participate.
    fn run_phase(&mut self, cost: &[f64], phase1: bool) -> Result<f64> {
        let mut reduced = self.reduced_costs(cost);
        loop {
            // Entering: lowest-index admissible column with negative
            // reduced cost (Bland's rule, anti-cycling).
            let entering = (0..reduced.len()).find(|&j| {
                (phase1 || self.allowed[j]) && reduced[j] < -self.tol
            });
            let Some(col) = entering else {
                return Ok(self.objective_value(cost));
            };

            // Leaving: minimum ratio; ties break to the row whose basic
            // variable has the lowest index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > self.tol {
                    let ratio = self.rhs[i] / a;
                    let better = match leave {
                        None => true,
                        Some((best_row, best_ratio)) => {
                            ratio < best_ratio - self.tol
                                || (ratio < best_ratio + self.tol
                                    && self.basis[i] < self.basis[best_row])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Lp(LpFailure::Unbounded));
            };

            self.pivot(row, col, &mut reduced);
            self.pivots += 1;
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Lp(LpFailure::IterationLimit));
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize, reduced: &mut [f64]) {
        let pivot = self.rows[row][col];
        let inv = 1.0 / pivot;
        for v in &mut self.rows[row] {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        self.rows[row][col] = 1.0;
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for j in 0..self.rows[i].len() {
                    self.rows[i][j] -= factor * self.rows[row][j];
                }
                self.rows[i][col] = 0.0;
                self.rhs[i] -= factor * self.rhs[row];
            }
        }
        let factor = reduced[col];
        if factor != 0.0 {
            for j in 0..reduced.len() {
                reduced[j] -= factor * self.rows[row][j];
            }
            reduced[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// After phase 1, swap any artificial still in the basis for a real
    /// column on its (degenerate) row. Rows with no real coefficient are
    /// redundant and keep their artificial pinned at zero.
    fn evict_basic_artificials(&mut self) {
        for row in 0..self.rows.len() {
            if self.basis[row] < self.artificial_start {
                continue;
            }
            let col = (0..self.artificial_start)
                .find(|&j| self.rows[row][j].abs() > self.tol);
            if let Some(col) = col {
                let mut dummy = vec![0.0; self.rows[row].len()];
                self.pivot(row, col, &mut dummy);
                self.pivots += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(objective: &[f64], rows: &[(&[f64], Relation, f64)]) -> LinearProgram {
        LinearProgram {
            objective: objective.to_vec(),
            constraints: rows
                .iter()
                .map(|(c, r, b)| LpConstraint {
                    coeffs: c.to_vec(),
                    relation: *r,
                    rhs: *b,
                })
                .collect(),
        }
    }

    #[test]
    fn maximizes_over_a_box() {
        // max x + y (as min -x - y) with x+y ≤ 1, x ≤ 0.6.
        let p = lp(
            &[-1.0, -1.0],
            &[
                (&[1.0, 1.0], Relation::LessEq, 1.0),
                (&[1.0, 0.0], Relation::LessEq, 0.6),
            ],
        );
        let sol = solve(&p).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-9);
        assert!((sol.variables[0] + sol.variables[1] - 1.0).abs() < 1e-9);
        // Strong duality: objective = Σ dual_i·rhs_i.
        let recon: f64 = sol.row_duals[0] * 1.0 + sol.row_duals[1] * 0.6;
        assert!((recon - sol.objective).abs() < 1e-9);
        assert!(sol.row_duals[0] <= 1e-9);
    }

    #[test]
    fn handles_equalities() {
        // min x + 2y with x + y = 2, y ≥ 0.5.
        let p = lp(
            &[1.0, 2.0],
            &[
                (&[1.0, 1.0], Relation::Eq, 2.0),
                (&[0.0, 1.0], Relation::GreaterEq, 0.5),
            ],
        );
        let sol = solve(&p).unwrap();
        assert!((sol.objective - 2.5).abs() < 1e-9);
        assert!((sol.variables[0] - 1.5).abs() < 1e-9);
        assert!((sol.variables[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn reports_infeasible() {
        let p = lp(
            &[1.0],
            &[
                (&[1.0], Relation::LessEq, 1.0),
                (&[1.0], Relation::GreaterEq, 2.0),
            ],
        );
        assert!(matches!(
            solve(&p),
            Err(Error::Lp(LpFailure::Infeasible))
        ));
    }

    #[test]
    fn reports_unbounded() {
        // min -x with x ≥ 1: x can grow forever.
        let p = lp(&[-1.0], &[(&[1.0], Relation::GreaterEq, 1.0)]);
        assert!(matches!(solve(&p), Err(Error::Lp(LpFailure::Unbounded))));
    }

    #[test]
    fn normalizes_negative_rhs() {
        // x ≤ -1 is x ≥ 1 after normalization... stated directly:
        // min x with -x ≤ -1 (i.e. x ≥ 1).
        let p = lp(&[1.0], &[(&[-1.0], Relation::LessEq, -1.0)]);
        let sol = solve(&p).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        // objective = dual · rhs with the original row orientation.
        assert!((sol.row_duals[0] * -1.0 - sol.objective).abs() < 1e-9);
    }

    #[test]
    fn degenerate_rows_terminate() {
        // Several redundant rows through the origin exercise degenerate
        // pivots; Bland's rule must still terminate.
        let p = lp(
            &[-1.0, -1.0, -1.0],
            &[
                (&[1.0, -1.0, 0.0], Relation::LessEq, 0.0),
                (&[0.0, 1.0, -1.0], Relation::LessEq, 0.0),
                (&[-1.0, 0.0, 1.0], Relation::LessEq, 0.0),
                (&[1.0, 1.0, 1.0], Relation::LessEq, 3.0),
            ],
        );
        let sol = solve(&p).unwrap();
        assert!((sol.objective + 3.0).abs() < 1e-9);
    }
}
