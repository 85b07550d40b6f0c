//! Device-to-subchannel matching with per-pair best base station.
//!
//! Each device gets at most one subchannel and each subchannel serves at most
//! one device. The weight of a pair is the best feasible GESTR over base
//! stations. The matching is solved with the Hungarian method on a square
//! matrix padded with zero-weight dummy rows and columns, so any device or
//! subchannel may stay unmatched.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::joint::JointDecision;
use crate::model::{Link, Scenario};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssignmentError {
    #[error("no joint decision for link {0:?}")]
    MissingDecision(Link),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentProblem {
    /// `weights[i][k]`, `None` when no base station can serve the pair.
    pub weights: Vec<Vec<Option<f64>>>,
    /// Base station attaining `weights[i][k]`.
    pub best_bs: Vec<Vec<Option<usize>>>,
}

impl AssignmentProblem {
    /// Problem with every pair served by BS 0.
    pub fn from_weights(weights: Vec<Vec<Option<f64>>>) -> Self {
        let best_bs = weights.iter().map(|row| row.iter().map(|w| w.map(|_| 0)).collect()).collect();
        AssignmentProblem { weights, best_bs }
    }

    pub fn num_mds(&self) -> usize {
        self.weights.len()
    }

    pub fn num_subchannels(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assignment {
    /// Selected links, sorted by device.
    pub delta: Vec<Link>,
    /// Sum of selected weights, added in `delta` order.
    pub total: f64,
}

impl Assignment {
    pub fn matched_mds(&self) -> usize {
        self.delta.len()
    }
}

pub fn build_assignment_problem(
    scenario: &Scenario,
    decisions: &BTreeMap<Link, JointDecision>,
) -> Result<AssignmentProblem, AssignmentError> {
    let (ni, nk) = (scenario.num_mds(), scenario.num_subchannels());
    let mut problem = AssignmentProblem { weights: vec![vec![None; nk]; ni], best_bs: vec![vec![None; nk]; ni] };
    for link in scenario.links() {
        let d = decisions.get(&link).ok_or(AssignmentError::MissingDecision(link))?;
        if !d.feasible {
            continue;
        }
        let slot = &mut problem.weights[link.md][link.subchannel];
        // first BS wins ties, so the result does not depend on map order
        if slot.is_none_or(|w| d.gamma > w) {
            *slot = Some(d.gamma);
            problem.best_bs[link.md][link.subchannel] = Some(link.bs);
        }
    }
    Ok(problem)
}

/// Minimum-cost perfect matching on a square matrix; `None` entries are
/// never used. Returns the column matched to each row.
fn hungarian(cost: &[Vec<Option<f64>>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based potentials with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                if let Some(c) = cost[i0 - 1][j - 1] {
                    let cur = c - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            assert!(j1 != 0, "padded matrix always has a perfect matching");
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

pub fn solve_assignment(problem: &AssignmentProblem) -> Assignment {
    let (ni, nk) = (problem.num_mds(), problem.num_subchannels());
    if ni == 0 || nk == 0 {
        return Assignment::default();
    }
    // rows: devices then one dummy per subchannel; columns: subchannels then one dummy per device
    let n = ni + nk;
    let mut cost = vec![vec![Some(0.0); n]; n];
    for (i, row) in problem.weights.iter().enumerate() {
        for (k, w) in row.iter().enumerate() {
            cost[i][k] = w.map(|w| -w);
        }
    }
    let col_of = hungarian(&cost);

    let mut chosen: Vec<Option<usize>> =
        (0..ni).map(|i| Some(col_of[i]).filter(|&k| k < nk && problem.weights[i][k].is_some())).collect();
    let mut sub_used = vec![false; nk];
    for k in chosen.iter().flatten() {
        sub_used[*k] = true;
    }
    // zero-weight real edges tie with dummies; prefer the real edge
    for (i, slot) in chosen.iter_mut().enumerate() {
        if slot.is_none() {
            *slot = (0..nk).find(|&k| !sub_used[k] && problem.weights[i][k] == Some(0.0));
            if let Some(k) = *slot {
                sub_used[k] = true;
            }
        }
    }
    let mut out = Assignment::default();
    for (i, k) in chosen.into_iter().enumerate() {
        let Some(k) = k else { continue };
        let bs = problem.best_bs[i][k].expect("weight implies a base station");
        out.delta.push(Link::new(i, bs, k));
        out.total += problem.weights[i][k].expect("matched pair has a weight");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_dominance() {
        let p = AssignmentProblem::from_weights(vec![vec![Some(3.0), Some(1.0)], vec![Some(1.0), Some(3.0)]]);
        let a = solve_assignment(&p);
        assert_eq!(a.total, 6.0);
        assert_eq!(a.delta, vec![Link::new(0, 0, 0), Link::new(1, 0, 1)]);
    }

    #[test]
    fn all_forbidden_is_empty() {
        let a = solve_assignment(&AssignmentProblem::from_weights(vec![vec![None; 3]; 2]));
        assert!(a.delta.is_empty());
        assert_eq!(a.total, 0.0);
    }

    #[test]
    fn partial_matching_beats_forced_cardinality() {
        // matching both rows would give 6, leaving row 1 unmatched gives 100
        let p = AssignmentProblem::from_weights(vec![vec![Some(1.0), Some(100.0)], vec![None, Some(5.0)]]);
        let a = solve_assignment(&p);
        assert_eq!(a.total, 100.0);
        assert_eq!(a.delta, vec![Link::new(0, 0, 1)]);
    }

    #[test]
    fn zero_weight_edges_are_taken() {
        let p = AssignmentProblem::from_weights(vec![vec![Some(0.0), None], vec![None, Some(2.0)]]);
        let a = solve_assignment(&p);
        assert_eq!(a.matched_mds(), 2);
        assert_eq!(a.total, 2.0);
    }

    #[test]
    fn rectangular_more_devices_than_subchannels() {
        let p = AssignmentProblem::from_weights(vec![vec![Some(2.0)], vec![Some(5.0)], vec![Some(4.0)]]);
        let a = solve_assignment(&p);
        assert_eq!(a.delta, vec![Link::new(1, 0, 0)]);
    }

    #[test]
    fn best_bs_is_reported() {
        let mut p = AssignmentProblem::from_weights(vec![vec![Some(7.0)]]);
        p.best_bs[0][0] = Some(1);
        assert_eq!(solve_assignment(&p).delta, vec![Link::new(0, 1, 0)]);
    }
}
