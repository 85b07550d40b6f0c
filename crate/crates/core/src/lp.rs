//! Dense bounded-variable two-phase simplex for small linear programs.
//!
//! Problems have the form
//!
//! ```text
//! maximize    c . x
//! subject to  A x <= b
//!             lo <= x <= hi       (lo finite, hi may be +inf)
//! ```
//!
//! Variable bounds are handled natively: nonbasic variables sit at either
//! bound, so box constraints never become tableau rows. Pivoting follows
//! Bland's rule, which rules out cycling.

use std::fmt;

/// Primal feasibility tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost optimality tolerance.
pub const OPTIMALITY_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    RowLength { row: usize, expected: usize, got: usize },
    #[error("{rows} constraint rows but {rhs} right-hand sides")]
    RhsLength { rows: usize, rhs: usize },
    #[error("{vars} objective coefficients but {bounds} bounds")]
    BoundsLength { vars: usize, bounds: usize },
    #[error("variable {var} has invalid bounds [{lo}, {hi}]")]
    InvalidBounds { var: usize, lo: f64, hi: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("simplex did not terminate within {0} iterations")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless `status` is `Optimal`.
    pub x: Vec<f64>,
    /// `c . x` when optimal, `-inf` when infeasible, `+inf` when unbounded.
    pub objective_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(
        objective: Vec<f64>,
        rows: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        if bounds.len() != n {
            return Err(LpError::BoundsLength { vars: n, bounds: bounds.len() });
        }
        if rows.len() != rhs.len() {
            return Err(LpError::RhsLength { rows: rows.len(), rhs: rhs.len() });
        }
        for (row, coeffs) in rows.iter().enumerate() {
            if coeffs.len() != n {
                return Err(LpError::RowLength { row, expected: n, got: coeffs.len() });
            }
            if coeffs.iter().any(|v| !v.is_finite()) {
                return Err(LpError::NonFinite("constraint matrix"));
            }
        }
        if objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("right-hand side"));
        }
        for (var, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || hi.is_nan() || hi == f64::NEG_INFINITY || lo > hi {
                return Err(LpError::InvalidBounds { var, lo, hi });
            }
        }
        Ok(LinearProgram { objective, rows, rhs, bounds })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Replaces the objective, keeping the feasible region.
    pub fn set_objective(&mut self, objective: Vec<f64>) -> Result<(), LpError> {
        if objective.len() != self.num_vars() {
            return Err(LpError::BoundsLength { vars: objective.len(), bounds: self.bounds.len() });
        }
        if objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        self.objective = objective;
        Ok(())
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().zip(&self.rhs).map(|(row, b)| dot(row, x) - b);
        let bounds = self.bounds.iter().zip(x).map(|(&(lo, hi), &v)| (lo - v).max(v - hi));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let mut tableau = Tableau::new(self);
        if tableau.num_artificial > 0 {
            let phase_one: Vec<f64> =
                (0..tableau.cols).map(|col| if tableau.is_artificial(col) { -1.0 } else { 0.0 }).collect();
            match tableau.optimize(&phase_one)? {
                Outcome::Optimal => {}
                // the phase-one objective is bounded above by zero
                Outcome::Unbounded => unreachable!("phase one cannot be unbounded"),
            }
            let infeasibility: f64 =
                (0..tableau.cols).filter(|&col| tableau.is_artificial(col)).map(|col| tableau.x[col]).sum();
            if infeasibility > FEASIBILITY_TOL {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    x: Vec::new(),
                    objective_value: f64::NEG_INFINITY,
                });
            }
            tableau.retire_artificials();
        }
        let mut phase_two = vec![0.0; tableau.cols];
        phase_two[..self.num_vars()].copy_from_slice(&self.objective);
        if tableau.optimize(&phase_two)? == Outcome::Unbounded {
            return Ok(LpSolution { status: LpStatus::Unbounded, x: Vec::new(), objective_value: f64::INFINITY });
        }
        let x: Vec<f64> =
            self.bounds.iter().enumerate().map(|(j, &(lo, hi))| (lo + tableau.x[j]).clamp(lo, hi)).collect();
        let objective_value = dot(&self.objective, &x);
        Ok(LpSolution { status: LpStatus::Optimal, x, objective_value })
    }
}

/// Convenience wrapper around [`LinearProgram::solve`].
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.solve()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

/// Simplex state over shifted variables `y = x - lo`, with columns ordered
/// structural, slack, artificial.
struct Tableau {
    rows: usize,
    cols: usize,
    num_structural: usize,
    num_artificial: usize,
    /// `B^-1 [A | I | art]`, row-major, plus the transformed right-hand side.
    body: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let shifted_rhs: Vec<f64> = lp
            .rows
            .iter()
            .zip(&lp.rhs)
            .map(|(row, b)| b - row.iter().zip(&lp.bounds).map(|(a, (lo, _))| a * lo).sum::<f64>())
            .collect();
        let needs_artificial: Vec<bool> = shifted_rhs.iter().map(|&b| b < 0.0).collect();
        let num_artificial = needs_artificial.iter().filter(|&&x| x).count();
        let cols = n + m + num_artificial;

        let mut upper = Vec::with_capacity(cols);
        upper.extend(lp.bounds.iter().map(|(lo, hi)| hi - lo));
        upper.extend(std::iter::repeat_n(f64::INFINITY, m + num_artificial));

        let mut body = vec![vec![0.0; cols]; m];
        let mut rhs = vec![0.0; m];
        let mut x = vec![0.0; cols];
        let mut basis = Vec::with_capacity(m);
        let mut next_artificial = n + m;
        for r in 0..m {
            let sign = if needs_artificial[r] { -1.0 } else { 1.0 };
            for (j, a) in lp.rows[r].iter().enumerate() {
                body[r][j] = sign * a;
            }
            body[r][n + r] = sign;
            rhs[r] = sign * shifted_rhs[r];
            let basic = if needs_artificial[r] {
                body[r][next_artificial] = 1.0;
                next_artificial += 1;
                next_artificial - 1
            } else {
                n + r
            };
            x[basic] = rhs[r];
            basis.push(basic);
        }
        let mut is_basic = vec![false; cols];
        for &b in &basis {
            is_basic[b] = true;
        }
        Tableau {
            rows: m,
            cols,
            num_structural: n,
            num_artificial,
            body,
            rhs,
            upper,
            x,
            basis,
            is_basic,
            at_upper: vec![false; cols],
        }
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.num_structural + self.rows
    }

    /// Pins artificial variables to zero for phase two.
    fn retire_artificials(&mut self) {
        for col in self.num_structural + self.rows..self.cols {
            self.upper[col] = 0.0;
            if !self.is_basic[col] {
                self.x[col] = 0.0;
                self.at_upper[col] = false;
            }
        }
    }

    fn reduced_cost(&self, cost: &[f64], col: usize) -> f64 {
        let priced: f64 = (0..self.rows).map(|r| cost[self.basis[r]] * self.body[r][col]).sum();
        cost[col] - priced
    }

    /// Bland's rule: the lowest-index nonbasic column that improves the objective.
    fn entering(&self, cost: &[f64]) -> Option<(usize, f64)> {
        (0..self.cols).filter(|&j| !self.is_basic[j] && self.upper[j] > 0.0).find_map(|j| {
            let d = self.reduced_cost(cost, j);
            if !self.at_upper[j] && d > OPTIMALITY_TOL {
                Some((j, 1.0))
            } else if self.at_upper[j] && d < -OPTIMALITY_TOL {
                Some((j, -1.0))
            } else {
                None
            }
        })
    }

    fn optimize(&mut self, cost: &[f64]) -> Result<Outcome, LpError> {
        for _ in 0..MAX_ITERATIONS {
            let Some((enter, dir)) = self.entering(cost) else {
                return Ok(Outcome::Optimal);
            };
            // step length limited by the entering variable's own bound ...
            let mut step = self.upper[enter];
            let mut leaving: Option<(usize, bool)> = None;
            // ... and by every basic variable reaching one of its bounds
            for r in 0..self.rows {
                let delta = -dir * self.body[r][enter];
                let b = self.basis[r];
                let (limit, to_upper) = if delta < -PIVOT_TOL {
                    ((self.x[b] / -delta).max(0.0), false)
                } else if delta > PIVOT_TOL && self.upper[b].is_finite() {
                    (((self.upper[b] - self.x[b]) / delta).max(0.0), true)
                } else {
                    continue;
                };
                let better = match leaving {
                    _ if limit < step => true,
                    Some((cur, _)) => limit == step && b < self.basis[cur],
                    None => false,
                };
                if better {
                    step = limit;
                    leaving = Some((r, to_upper));
                }
            }
            if step.is_infinite() {
                return Ok(Outcome::Unbounded);
            }
            match leaving {
                None => {
                    // bound flip, the basis is unchanged
                    self.at_upper[enter] = !self.at_upper[enter];
                    self.x[enter] = if self.at_upper[enter] { self.upper[enter] } else { 0.0 };
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.pivot(r, enter);
                    self.is_basic[out] = false;
                    self.at_upper[out] = to_upper;
                    self.x[out] = if to_upper { self.upper[out] } else { 0.0 };
                    self.at_upper[enter] = false;
                    self.x[enter] += dir * step;
                }
            }
            self.refresh_basic_values();
        }
        Err(LpError::IterationLimit(MAX_ITERATIONS))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = 1.0 / self.body[row][col];
        for v in &mut self.body[row] {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        self.body[row][col] = 1.0;
        let pivot_row = self.body[row].clone();
        let pivot_rhs = self.rhs[row];
        for r in 0..self.rows {
            if r == row {
                continue;
            }
            let factor = self.body[r][col];
            if factor == 0.0 {
                continue;
            }
            for (v, p) in self.body[r].iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            self.body[r][col] = 0.0;
            self.rhs[r] -= factor * pivot_rhs;
        }
        self.basis[row] = col;
        self.is_basic[col] = true;
    }

    /// `x_B = B^-1 b - sum over nonbasic of (B^-1 A)_j x_j`.
    fn refresh_basic_values(&mut self) {
        for r in 0..self.rows {
            let mut value = self.rhs[r];
            for j in 0..self.cols {
                if !self.is_basic[j] && self.x[j] != 0.0 {
                    value -= self.body[r][j] * self.x[j];
                }
            }
            self.x[self.basis[r]] = value;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: &[f64], rows: &[&[f64]], rhs: &[f64], bounds: &[(f64, f64)]) -> LinearProgram {
        LinearProgram::new(c.to_vec(), rows.iter().map(|r| r.to_vec()).collect(), rhs.to_vec(), bounds.to_vec())
            .unwrap()
    }

    #[test]
    fn tight_row() {
        let s = lp(&[1.0, 1.0], &[&[1.0, 1.0]], &[1.0], &[(0.0, 1.0), (0.0, 1.0)]).solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_feasible_set() {
        let s = lp(&[1.0], &[&[1.0]], &[-1.0], &[(0.0, 1.0)]).solve().unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(s.x.is_empty());
    }

    #[test]
    fn two_dimensional_vertex() {
        // vertices of {x + y <= 4, x + 3y <= 6, 0 <= x, y <= 4}:
        // (0,0) 0, (4,0) 12, (3,1) 11, (0,2) 4
        let s = lp(&[3.0, 2.0], &[&[1.0, 1.0], &[1.0, 3.0]], &[4.0, 6.0], &[(0.0, 4.0), (0.0, 4.0)]).solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 4.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
        assert!((s.objective_value - 12.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_direction() {
        let s =
            lp(&[1.0, 1.0], &[&[1.0, -1.0]], &[1.0], &[(0.0, f64::INFINITY), (0.0, f64::INFINITY)]).solve().unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn nonzero_lower_bounds_and_negative_rhs() {
        // max -x - y  s.t. -x - y <= -3, x in [1, 5], y in [0.5, 5]
        let s = lp(&[-1.0, -1.0], &[&[-1.0, -1.0]], &[-3.0], &[(1.0, 5.0), (0.5, 5.0)]).solve().unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value + 3.0).abs() < 1e-12);
        assert!(lp(&[0.0], &[], &[], &[(2.0, 2.0)]).solve().unwrap().x == vec![2.0]);
    }

    #[test]
    fn zero_variables() {
        let ok = lp(&[], &[&[]], &[0.5], &[]).solve().unwrap();
        assert_eq!(ok.status, LpStatus::Optimal);
        assert_eq!(ok.objective_value, 0.0);
        let bad = lp(&[], &[&[]], &[-0.5], &[]).solve().unwrap();
        assert_eq!(bad.status, LpStatus::Infeasible);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling example for the largest-coefficient rule
        let s = lp(
            &[10.0, -57.0, -9.0, -24.0],
            &[&[0.5, -5.5, -2.5, 9.0], &[0.5, -1.5, -0.5, 1.0], &[1.0, 0.0, 0.0, 0.0]],
            &[0.0, 0.0, 1.0],
            &[(0.0, f64::INFINITY); 4],
        )
        .solve()
        .unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            LinearProgram::new(vec![1.0], vec![vec![1.0, 2.0]], vec![1.0], vec![(0.0, 1.0)]),
            Err(LpError::RowLength { .. })
        ));
        assert!(matches!(
            LinearProgram::new(vec![1.0], vec![], vec![1.0], vec![(0.0, 1.0)]),
            Err(LpError::RhsLength { .. })
        ));
        assert!(matches!(
            LinearProgram::new(vec![1.0], vec![], vec![], vec![(1.0, 0.0)]),
            Err(LpError::InvalidBounds { .. })
        ));
        assert!(matches!(
            LinearProgram::new(vec![1.0], vec![], vec![], vec![(f64::NEG_INFINITY, 0.0)]),
            Err(LpError::InvalidBounds { .. })
        ));
        assert!(matches!(
            LinearProgram::new(vec![f64::NAN], vec![], vec![], vec![(0.0, 1.0)]),
            Err(LpError::NonFinite(_))
        ));
    }
}
