//! Exhaustive reference solver for the per-link joint subproblem.
//!
//! Enumerates every `(a, b, xi)` on the same extraction-ratio grid the
//! optimizer uses and evaluates the closed-form model directly. Independent
//! of the LP, Dinkelbach and branch-and-bound code, so it serves as a check
//! on them. Exponential in the number of mismatched classes.

use std::collections::BTreeMap;

use crate::joint::{JointDecision, SolveError, SolverMode};
use crate::model::{extraction_grid, meets_delay, Link, LinkContext, ModelError, Scenario};

/// Upper bound on binaries enumerated, `2^20` points per grid value.
pub const MAX_ORACLE_BINARIES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub best: JointDecision,
    pub evaluated_points: usize,
    pub feasible_points: usize,
    /// Best GESTR among feasible points whose mode vector or grid index
    /// differs from `best`.
    pub runner_up: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("{0} binaries are too many to enumerate")]
    TooLarge(usize),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

impl From<ModelError> for OracleError {
    fn from(e: ModelError) -> Self {
        OracleError::Solve(e.into())
    }
}

fn bits(mask: usize, n: usize) -> Vec<bool> {
    (0..n).map(|p| mask >> p & 1 == 1).collect()
}

pub fn brute_force_joint(
    scenario: &Scenario,
    link: Link,
    grid_segments: usize,
    mode: SolverMode,
) -> Result<OracleReport, OracleError> {
    if grid_segments == 0 {
        return Err(SolveError::EmptyGrid.into());
    }
    let ctx = LinkContext::new(scenario, link)?;
    let n = ctx.num_mismatched();
    if 2 * n > MAX_ORACLE_BINARIES {
        return Err(OracleError::TooLarge(2 * n));
    }
    let mut report = OracleReport {
        best: JointDecision::infeasible(&ctx),
        evaluated_points: 0,
        feasible_points: 0,
        runner_up: None,
    };
    // best GESTR per (a, grid index)
    let mut per_mode: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let xi_th = match ctx.accuracy.min_extraction_ratio(ctx.eps_th) {
        Ok(xi) => xi,
        Err(ModelError::AccuracyUnattainable { .. }) => return Ok(report),
        Err(e) => return Err(e.into()),
    };
    // classes whose knowledge the MBS cannot supply are upload-only
    let downloadable: Vec<usize> = (0..n).filter(|&p| ctx.mismatched[p].via_mbs).collect();
    let a_masks: Vec<usize> = match mode {
        SolverMode::NoKnowledgeSharing => vec![0],
        _ => (0..1usize << n).collect(),
    };
    let b_masks: Vec<usize> = match mode {
        SolverMode::Joint => (0..1usize << downloadable.len()).collect(),
        _ => vec![0],
    };
    for (m, xi) in extraction_grid(xi_th, grid_segments).into_iter().enumerate() {
        for &am in &a_masks {
            let a = bits(am, n);
            for &bm in &b_masks {
                report.evaluated_points += 1;
                // bit set means download from the MBS
                let mut b = vec![true; n];
                for (q, &p) in downloadable.iter().enumerate() {
                    b[p] = bm >> q & 1 == 0;
                }
                let (gamma, timing) = match ctx.gestr(&a, &b, xi) {
                    Ok(v) => v,
                    Err(ModelError::Degenerate) => continue,
                    Err(e) => return Err(e.into()),
                };
                if !meets_delay(timing.t_total, ctx.t_max) {
                    continue;
                }
                report.feasible_points += 1;
                let slot = per_mode.entry((am, m)).or_insert(f64::NEG_INFINITY);
                *slot = slot.max(gamma);
                if gamma > report.best.objective() {
                    // b only matters where a = 1
                    let b = b.iter().zip(&a).map(|(&b, &a)| b || !a).collect();
                    report.best = JointDecision {
                        link,
                        mismatched: ctx.mismatched.iter().map(|c| c.class).collect(),
                        a: a.clone(),
                        b,
                        xi,
                        xi_index: Some(m),
                        gamma,
                        timing: Some(timing),
                        feasible: true,
                    };
                }
            }
        }
    }
    if let (Some(m), true) = (report.best.xi_index, report.best.feasible) {
        let am = report.best.a.iter().enumerate().filter(|(_, &on)| on).map(|(p, _)| 1usize << p).sum::<usize>();
        report.runner_up = per_mode
            .iter()
            .filter(|(key, _)| **key != (am, m))
            .map(|(_, &g)| g)
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))));
    }
    Ok(report)
}
