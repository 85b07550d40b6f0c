//! Two-tier semantic-bit network model and the joint optimizer for
//! knowledge sharing, extraction ratio and BS/subchannel allocation.
//!
//! Per link, [`solve_joint`] searches the extraction-ratio grid and runs a
//! Dinkelbach-relaxed branch and bound over the sharing binaries. The
//! per-link optima feed [`solve_assignment`], which matches devices to
//! subchannels. [`run_sweep`] drives both over generated scenarios.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod experiment;
pub mod fractional;
pub mod joint;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod scenario;

pub use assignment::{build_assignment_problem, solve_assignment, Assignment, AssignmentProblem};
pub use experiment::{run_sweep, ExperimentResult, SweepOptions, SweepParameter, SweepSpec};
pub use joint::{solve_joint, JointDecision, SolverMode};
pub use model::{Link, Scenario, TimingBreakdown};
pub use oracle::brute_force_joint;
pub use scenario::{generate, GenerationConfig};
