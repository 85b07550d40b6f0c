//! Linear-fractional maximization over a polytope by Dinkelbach iteration.
//!
//! Maximizing `X(x) / Y(x)` with affine `X`, `Y` and `Y > 0` on the region is
//! done by solving the parametric LP `max X - eta * Y` for a sequence of
//! `eta` values starting at zero, each next `eta` being the ratio at the
//! previous maximizer. The iteration stops once the parametric optimum drops
//! to the tolerance `o`.

mod builder;

pub use builder::{build_fractional_lp, build_node, BinaryVar, NodeProblem, VariableLayout};

use crate::lp::{LinearProgram, LpError, LpStatus};
use crate::model::ModelError;

/// Default convergence tolerance `o` on `X - eta * Y`.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Hard cap on parametric LP solves; reaching it indicates a bug.
pub const MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{form} has {got} coefficients, region has {expected} variables")]
    FormLength { form: &'static str, expected: usize, got: usize },
    #[error("denominator is not positive on the feasible region (reaches {0})")]
    NonPositiveDenominator(f64),
    #[error("parametric LP is unbounded; the region must be bounded")]
    UnboundedRegion,
    #[error("Dinkelbach iteration did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("extraction ratio {xi} is below the accuracy floor {xi_th}")]
    BelowAccuracyFloor { xi: f64, xi_th: f64 },
}

/// `constant + coeffs . x`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineForm {
    pub constant: f64,
    pub coeffs: Vec<f64>,
}

impl AffineForm {
    pub fn new(constant: f64, coeffs: Vec<f64>) -> Self {
        AffineForm { constant, coeffs }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionalLp {
    pub numerator: AffineForm,
    pub denominator: AffineForm,
    /// Feasible region; its objective is ignored.
    pub region: LinearProgram,
}

impl FractionalLp {
    pub fn new(numerator: AffineForm, denominator: AffineForm, region: LinearProgram) -> Result<Self, FpError> {
        let n = region.num_vars();
        for (form, f) in [("numerator", &numerator), ("denominator", &denominator)] {
            if f.coeffs.len() != n {
                return Err(FpError::FormLength { form, expected: n, got: f.coeffs.len() });
            }
        }
        Ok(FractionalLp { numerator, denominator, region })
    }

    pub fn num_vars(&self) -> usize {
        self.region.num_vars()
    }

    pub fn ratio_at(&self, x: &[f64]) -> f64 {
        self.numerator.eval(x) / self.denominator.eval(x)
    }

    /// `F(eta) = max over the region of X - eta * Y`, with its maximizer.
    /// `None` when the region is empty.
    pub fn parametric_max(&self, eta: f64) -> Result<Option<(f64, Vec<f64>)>, FpError> {
        let objective = self.numerator.coeffs.iter().zip(&self.denominator.coeffs).map(|(x, y)| x - eta * y).collect();
        let mut lp = self.region.clone();
        lp.set_objective(objective)?;
        let sol = lp.solve()?;
        match sol.status {
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(FpError::UnboundedRegion),
            LpStatus::Optimal => {
                let value = self.numerator.eval(&sol.x) - eta * self.denominator.eval(&sol.x);
                Ok(Some((value, sol.x)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DinkelbachOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Solve one extra LP to report `F(eta*)`.
    pub check_root: bool,
}

impl Default for DinkelbachOptions {
    fn default() -> Self {
        DinkelbachOptions { tolerance: DEFAULT_TOLERANCE, max_iterations: MAX_ITERATIONS, check_root: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DinkelbachResult {
    pub eta_star: f64,
    pub x_star: Vec<f64>,
    /// Parametric LPs solved (excluding the optional root check).
    pub iterations: usize,
    pub converged: bool,
    /// `eta` used for each parametric solve, starting with 0.
    pub eta_history: Vec<f64>,
    /// `X - eta * Y` at the last maximizer, for the last `eta` used.
    pub final_gap: f64,
    /// `F(eta*)`, present when requested.
    pub root_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DinkelbachOutcome {
    Infeasible,
    Solved(DinkelbachResult),
}

pub fn dinkelbach_solve(fp: &FractionalLp, opts: &DinkelbachOptions) -> Result<DinkelbachOutcome, FpError> {
    let mut eta = 0.0;
    let mut history = Vec::new();
    for q in 1..=opts.max_iterations {
        history.push(eta);
        // the first solve doubles as the feasibility check
        let Some((gap, x)) = fp.parametric_max(eta)? else {
            return Ok(DinkelbachOutcome::Infeasible);
        };
        let y = fp.denominator.eval(&x);
        if !(y > 0.0) {
            return Err(FpError::NonPositiveDenominator(y));
        }
        let ratio = fp.numerator.eval(&x) / y;
        if gap <= opts.tolerance {
            let root_residual = if opts.check_root { fp.parametric_max(ratio)?.map(|(f, _)| f) } else { None };
            return Ok(DinkelbachOutcome::Solved(DinkelbachResult {
                eta_star: ratio,
                x_star: x,
                iterations: q,
                converged: true,
                eta_history: history,
                final_gap: gap,
                root_residual,
            }));
        }
        eta = ratio;
    }
    Err(FpError::NonConvergence(opts.max_iterations))
}
