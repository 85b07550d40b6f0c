//! Fixtures shared by the benchmarks.

use gestr_core::assignment::AssignmentProblem;
use gestr_core::model::{Link, LinkContext, Scenario};
use gestr_core::scenario::{generate, GenerationConfig};

pub fn default_scenario(seed: u64) -> Scenario {
    generate(&GenerationConfig::default().with_seed(seed)).expect("default config is valid")
}

/// A link with the most mismatched classes.
pub fn hardest_link(scenario: &Scenario) -> Link {
    scenario
        .links()
        .max_by_key(|&l| LinkContext::new(scenario, l).map_or(0, |c| c.num_mismatched()))
        .expect("scenario has links")
}

/// Dense `n x k` assignment problem with deterministic pseudo-random weights.
pub fn assignment_problem(n: usize, k: usize) -> AssignmentProblem {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let weights = (0..n)
        .map(|_| {
            (0..k)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (!state.is_multiple_of(5)).then(|| (state >> 11) as f64 / (1u64 << 53) as f64 * 1e8)
                })
                .collect()
        })
        .collect();
    AssignmentProblem::from_weights(weights)
}
