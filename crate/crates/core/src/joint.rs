//! Per-link joint subproblem: extraction-ratio grid search outside,
//! Dinkelbach-relaxed branch and bound over the sharing binaries inside.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fractional::{
    build_node, dinkelbach_solve, DinkelbachOptions, DinkelbachOutcome, DinkelbachResult, FpError, NodeProblem,
    VariableLayout,
};
use crate::model::{extraction_grid, meets_delay, ClassId, Link, LinkContext, ModelError, Scenario, TimingBreakdown};

/// Default number of extraction-ratio grid segments.
pub const DEFAULT_GRID_SEGMENTS: usize = 50;

const INTEGRALITY_TOL: f64 = 1e-9;
const ROUNDED_FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolverMode {
    #[serde(rename = "joint")]
    Joint,
    /// Knowledge may only be uploaded by the device (`b = 1`).
    #[serde(rename = "nocollab")]
    NoCollaboration,
    /// Mismatched classes always go in bit mode (`a = 0`).
    #[serde(rename = "noshare")]
    NoKnowledgeSharing,
}

impl SolverMode {
    pub const ALL: [SolverMode; 3] = [SolverMode::Joint, SolverMode::NoCollaboration, SolverMode::NoKnowledgeSharing];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverMode::Joint => "joint",
            SolverMode::NoCollaboration => "nocollab",
            SolverMode::NoKnowledgeSharing => "noshare",
        }
    }
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown solver mode `{s}` (expected joint, nocollab or noshare)"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("grid must have at least one segment")]
    EmptyGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("link {link:?}: {source}")]
    Fp { link: Link, source: FpError },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbOptions {
    /// Discard nodes whose relaxation cannot beat the incumbent.
    pub prune: bool,
    pub dinkelbach: DinkelbachOptions,
    /// Keep every Dinkelbach run for inspection.
    pub record_trace: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions { prune: true, dinkelbach: DinkelbachOptions::default(), record_trace: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BnbStats {
    pub nodes_explored: usize,
    pub pruned_by_bound: usize,
    pub pruned_infeasible: usize,
    pub branched: usize,
    pub fp_iterations: usize,
}

impl BnbStats {
    pub fn absorb(&mut self, other: &BnbStats) {
        self.nodes_explored += other.nodes_explored;
        self.pruned_by_bound += other.pruned_by_bound;
        self.pruned_infeasible += other.pruned_infeasible;
        self.branched += other.branched;
        self.fp_iterations += other.fp_iterations;
    }
}

/// A search node: binaries fixed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub fixings: Vec<Option<bool>>,
    /// Relaxation value of the parent (`+inf` at the root).
    pub relaxation_bound: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbOutcome {
    /// Best binary point strictly above the starting floor, and its ratio.
    pub best: Option<(Vec<bool>, f64)>,
    pub root_bound: Option<f64>,
    pub stats: BnbStats,
    pub trace: Vec<DinkelbachResult>,
}

fn integral(v: f64) -> bool {
    v.min(1.0 - v).abs() <= INTEGRALITY_TOL
}

/// Depth-first branch and bound over `num_binaries` binaries.
///
/// `build` returns the relaxation for a set of fixings, or `None` if the
/// fixings are contradictory. Only points strictly better than `floor`
/// are reported.
pub fn branch_and_bound<F>(
    mut build: F,
    num_binaries: usize,
    floor: Option<f64>,
    opts: &BnbOptions,
) -> Result<BnbOutcome, FpError>
where
    F: FnMut(&[Option<bool>]) -> Result<Option<NodeProblem>, FpError>,
{
    let mut out = BnbOutcome { best: None, root_bound: None, stats: BnbStats::default(), trace: Vec::new() };
    let mut incumbent = floor;
    let mut stack = vec![BnbNode { fixings: vec![None; num_binaries], relaxation_bound: f64::INFINITY, depth: 0 }];
    while let Some(node) = stack.pop() {
        out.stats.nodes_explored += 1;
        let Some(problem) = build(&node.fixings)? else {
            out.stats.pruned_infeasible += 1;
            continue;
        };
        let result = match dinkelbach_solve(&problem.fp, &opts.dinkelbach)? {
            DinkelbachOutcome::Infeasible => {
                out.stats.pruned_infeasible += 1;
                continue;
            }
            DinkelbachOutcome::Solved(r) => r,
        };
        out.stats.fp_iterations += result.iterations;
        let bound = result.eta_star;
        if node.depth == 0 {
            out.root_bound = Some(bound);
        }
        let x = result.x_star.clone();
        if opts.record_trace {
            out.trace.push(result);
        }
        if opts.prune {
            if let Some(inc) = incumbent {
                if bound <= inc + 1e-12 * inc.abs().max(1.0) {
                    out.stats.pruned_by_bound += 1;
                    continue;
                }
            }
        }

        let rounded: Vec<f64> = x.iter().map(|v| v.round()).collect();
        let fractional =
            problem.free.iter().zip(&x).filter(|(_, v)| !integral(**v)).map(|(&b, &v)| (b, v.min(1.0 - v))).fold(
                None,
                |acc: Option<(usize, f64)>, (b, d)| match acc {
                    Some((_, best)) if best >= d => acc,
                    _ => Some((b, d)),
                },
            );
        let branch_on = match fractional {
            Some((b, _)) => Some(b),
            None if problem.fp.region.max_violation(&rounded) <= ROUNDED_FEASIBILITY_TOL => {
                let value = problem.fp.ratio_at(&rounded);
                if incumbent.is_none_or(|inc| value > inc) {
                    incumbent = Some(value);
                    let mut point: Vec<bool> = node.fixings.iter().map(|f| f.unwrap_or(false)).collect();
                    for (&b, &v) in problem.free.iter().zip(&rounded) {
                        point[b] = v == 1.0;
                    }
                    out.best = Some((point, value));
                }
                None
            }
            // rounding broke feasibility: branch on the least integral column
            None => problem
                .free
                .iter()
                .zip(&x)
                .map(|(&b, &v)| (b, v.min(1.0 - v).abs()))
                .fold(None, |acc: Option<(usize, f64)>, (b, d)| match acc {
                    Some((_, best)) if best >= d => acc,
                    _ => Some((b, d)),
                })
                .map(|(b, _)| b),
        };
        if let Some(b) = branch_on {
            out.stats.branched += 1;
            // depth first, the 1-branch is popped first
            for value in [false, true] {
                let mut fixings = node.fixings.clone();
                fixings[b] = Some(value);
                stack.push(BnbNode { fixings, relaxation_bound: bound, depth: node.depth + 1 });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDecision {
    pub link: Link,
    /// Mismatched classes, in the order used by `a` and `b`.
    pub mismatched: Vec<ClassId>,
    /// Semantic mode per mismatched class.
    pub a: Vec<bool>,
    /// Upload by the device (`true`) or download from the MBS (`false`).
    pub b: Vec<bool>,
    pub xi: f64,
    /// Position of `xi` in the extraction-ratio grid.
    pub xi_index: Option<usize>,
    /// GESTR in suts/s; 0 when infeasible.
    pub gamma: f64,
    pub timing: Option<TimingBreakdown>,
    pub feasible: bool,
}

impl JointDecision {
    pub fn infeasible(ctx: &LinkContext) -> Self {
        JointDecision {
            link: ctx.link,
            mismatched: ctx.mismatched.iter().map(|m| m.class).collect(),
            a: Vec::new(),
            b: Vec::new(),
            xi: 0.0,
            xi_index: None,
            gamma: 0.0,
            timing: None,
            feasible: false,
        }
    }

    /// GESTR as an objective value: `-inf` when infeasible.
    pub fn objective(&self) -> f64 {
        if self.feasible {
            self.gamma
        } else {
            f64::NEG_INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOptions {
    pub grid_segments: usize,
    pub mode: SolverMode,
    pub bnb: BnbOptions,
    /// Seed each grid point's search with the best value found so far.
    pub carry_incumbent: bool,
}

impl JointOptions {
    pub fn new(grid_segments: usize, mode: SolverMode) -> Self {
        JointOptions { grid_segments, mode, bnb: BnbOptions::default(), carry_incumbent: true }
    }

    /// Exhaustive configuration: no bound-based pruning anywhere.
    pub fn unpruned(grid_segments: usize, mode: SolverMode) -> Self {
        JointOptions {
            grid_segments,
            mode,
            bnb: BnbOptions { prune: false, ..BnbOptions::default() },
            carry_incumbent: false,
        }
    }
}

/// One branch-and-bound run at a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRun {
    pub xi_index: usize,
    pub xi: f64,
    pub root_bound: Option<f64>,
    pub best: Option<f64>,
    pub scale: f64,
    pub trace: Vec<DinkelbachResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSolve {
    pub decision: JointDecision,
    pub stats: BnbStats,
    /// Present when `bnb.record_trace` is set.
    pub runs: Vec<GridRun>,
}

pub fn solve_joint(
    scenario: &Scenario,
    link: Link,
    grid_segments: usize,
    mode: SolverMode,
) -> Result<JointDecision, SolveError> {
    Ok(solve_joint_with(scenario, link, &JointOptions::new(grid_segments, mode))?.decision)
}

pub fn solve_joint_with(scenario: &Scenario, link: Link, opts: &JointOptions) -> Result<JointSolve, SolveError> {
    let ctx = LinkContext::new(scenario, link)?;
    solve_link(&ctx, opts)
}

/// Solves the joint subproblem on a prepared link context.
pub fn solve_link(ctx: &LinkContext, opts: &JointOptions) -> Result<JointSolve, SolveError> {
    if opts.grid_segments == 0 {
        return Err(SolveError::EmptyGrid);
    }
    let mut solve =
        JointSolve { decision: JointDecision::infeasible(ctx), stats: BnbStats::default(), runs: Vec::new() };
    let xi_th = match ctx.accuracy.min_extraction_ratio(ctx.eps_th) {
        Ok(xi) => xi,
        Err(ModelError::AccuracyUnattainable { .. }) => return Ok(solve),
        Err(e) => return Err(e.into()),
    };
    let layout = VariableLayout::new(ctx, opts.mode);
    let fp_err = |source| SolveError::Fp { link: ctx.link, source };
    let mut best: Option<(f64, f64)> = None; // (gamma, normalized value)
    for (m, xi) in extraction_grid(xi_th, opts.grid_segments).into_iter().enumerate() {
        let floor = if opts.carry_incumbent && opts.bnb.prune { best.map(|b| b.1) } else { None };
        let mut scale = 0.0;
        let outcome = branch_and_bound(
            |fixings| {
                let node = build_node(ctx, &layout, xi, fixings)?;
                if let Some(n) = &node {
                    scale = n.scale;
                }
                Ok(node)
            },
            layout.len(),
            floor,
            &opts.bnb,
        );
        let outcome = match outcome {
            Ok(o) => o,
            Err(FpError::Model(ModelError::Degenerate)) => continue,
            Err(e) => return Err(fp_err(e)),
        };
        solve.stats.absorb(&outcome.stats);
        if opts.bnb.record_trace {
            solve.runs.push(GridRun {
                xi_index: m,
                xi,
                root_bound: outcome.root_bound,
                best: outcome.best.as_ref().map(|b| b.1),
                scale,
                trace: outcome.trace,
            });
        }
        let Some((point, _)) = outcome.best else { continue };
        let (a, b) = layout.decode(&point);
        let (gamma, timing) = match ctx.gestr(&a, &b, xi) {
            Ok(v) => v,
            Err(ModelError::Degenerate) => continue,
            Err(e) => return Err(e.into()),
        };
        if !meets_delay(timing.t_total, ctx.t_max) {
            continue;
        }
        if best.is_none_or(|(g, _)| gamma > g) {
            best = Some((gamma, gamma / scale));
            solve.decision = JointDecision {
                link: ctx.link,
                mismatched: ctx.mismatched.iter().map(|m| m.class).collect(),
                a,
                b,
                xi,
                xi_index: Some(m),
                gamma,
                timing: Some(timing),
                feasible: true,
            };
        }
    }
    Ok(solve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{AffineForm, FractionalLp};
    use crate::lp::LinearProgram;
    use proptest::prelude::*;

    /// `(1 + v.x) / (1 + w.x)` subject to `t.x <= cap` over binaries.
    #[derive(Debug)]
    struct Knapsack {
        v: Vec<f64>,
        w: Vec<f64>,
        t: Vec<f64>,
        cap: f64,
    }

    impl Knapsack {
        fn node(&self, fixings: &[Option<bool>]) -> Option<NodeProblem> {
            let free: Vec<usize> = (0..self.v.len()).filter(|&n| fixings[n].is_none()).collect();
            let fixed_sum =
                |c: &[f64]| -> f64 { fixings.iter().zip(c).filter(|(f, _)| **f == Some(true)).map(|(_, c)| c).sum() };
            let pick = |c: &[f64]| free.iter().map(|&n| c[n]).collect::<Vec<_>>();
            let region = LinearProgram::new(
                vec![0.0; free.len()],
                vec![pick(&self.t)],
                vec![self.cap - fixed_sum(&self.t)],
                vec![(0.0, 1.0); free.len()],
            )
            .unwrap();
            let fp = FractionalLp::new(
                AffineForm::new(1.0 + fixed_sum(&self.v), pick(&self.v)),
                AffineForm::new(1.0 + fixed_sum(&self.w), pick(&self.w)),
                region,
            )
            .unwrap();
            Some(NodeProblem { fp, free, scale: 1.0 })
        }

        fn brute_force(&self) -> Option<f64> {
            let n = self.v.len();
            (0..1usize << n)
                .filter_map(|mask| {
                    let on = |c: &[f64]| (0..n).filter(|p| mask >> p & 1 == 1).map(|p| c[p]).sum::<f64>();
                    (on(&self.t) <= self.cap + 1e-9).then(|| (1.0 + on(&self.v)) / (1.0 + on(&self.w)))
                })
                .reduce(f64::max)
        }
    }

    fn knapsack() -> impl Strategy<Value = Knapsack> {
        (1usize..=7).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..10.0, n),
                prop::collection::vec(0.1f64..5.0, n),
                prop::collection::vec(0.1f64..3.0, n),
                0.0f64..6.0,
            )
                .prop_map(|(v, w, t, cap)| Knapsack { v, w, t, cap })
        })
    }

    proptest! {
        #[test]
        fn finds_the_best_binary_point(k in knapsack()) {
            let n = k.v.len();
            let want = k.brute_force().unwrap();
            for prune in [true, false] {
                let opts = BnbOptions { prune, ..BnbOptions::default() };
                let out = branch_and_bound(|f| Ok(k.node(f)), n, None, &opts).unwrap();
                let (point, got) = out.best.unwrap();
                prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
                let used: f64 = point.iter().zip(&k.t).filter(|(on, _)| **on).map(|(_, t)| t).sum();
                prop_assert!(used <= k.cap + 1e-9);
                prop_assert!(got <= out.root_bound.unwrap() + 1e-9);
            }
        }

        #[test]
        fn floor_hides_worse_points(k in knapsack()) {
            let want = k.brute_force().unwrap();
            let opts = BnbOptions::default();
            let out = branch_and_bound(|f| Ok(k.node(f)), k.v.len(), Some(want + 1.0), &opts).unwrap();
            prop_assert!(out.best.is_none());
        }
    }

    #[test]
    fn branches_when_the_relaxation_is_fractional() {
        // item 0 alone scores 5; the relaxation adds half of item 1 for 5.4
        let k = Knapsack { v: vec![9.0, 7.0], w: vec![1.0, 1.0], t: vec![2.0, 1.0], cap: 2.5 };
        let out = branch_and_bound(|f| Ok(k.node(f)), 2, None, &BnbOptions::default()).unwrap();
        assert!(out.stats.branched > 0);
        assert_eq!(out.best.unwrap().0, vec![true, false]);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in SolverMode::ALL {
            assert_eq!(m.to_string().parse::<SolverMode>(), Ok(m));
        }
        assert!("both".parse::<SolverMode>().is_err());
    }
}
