use gestr_core::joint::{solve_joint, SolverMode};
use gestr_core::model::LinkContext;
use gestr_core::oracle::brute_force_joint;
use gestr_core::scenario::{generate, GenerationConfig};

#[test]
fn matches_exhaustive_search_with_four_mismatched_classes() {
    let mut compared = 0;
    for seed in 0..10u64 {
        let s = generate(&GenerationConfig::default().with_seed(seed)).unwrap();
        for link in s.links().filter(|l| l.subchannel < 2) {
            if LinkContext::new(&s, link).unwrap().num_mismatched() > 4 {
                continue;
            }
            for mode in SolverMode::ALL {
                let got = solve_joint(&s, link, 10, mode).unwrap();
                let want = brute_force_joint(&s, link, 10, mode).unwrap().best;
                assert_eq!(got.feasible, want.feasible, "{seed} {link:?} {mode}");
                let rel = (got.gamma - want.gamma).abs() / want.gamma.max(1.0);
                assert!(rel <= 1e-9, "{seed} {link:?} {mode}: {} vs {}", got.gamma, want.gamma);
                compared += 1;
            }
        }
    }
    assert!(compared > 100);
}

#[test]
fn tight_deadlines_make_links_infeasible() {
    let config = GenerationConfig { t_max: gestr_core::scenario::ParamRange::fixed(1e-3), ..Default::default() };
    let s = generate(&config.with_seed(3)).unwrap();
    for link in s.links() {
        assert!(!solve_joint(&s, link, 5, SolverMode::Joint).unwrap().feasible);
    }
}

#[test]
fn binding_deadlines_force_branching_and_still_match() {
    use gestr_core::joint::{solve_joint_with, JointOptions};
    use gestr_core::scenario::ParamRange;

    let config =
        GenerationConfig { t_max: ParamRange::new(1.8, 2.8), md_required_size: 8, ..GenerationConfig::default() };
    let (mut branched, mut feasible) = (0, 0);
    for seed in 0..15u64 {
        let s = generate(&config.with_seed(seed)).unwrap();
        for link in s.links().filter(|l| l.subchannel == (seed % 5) as usize) {
            if LinkContext::new(&s, link).unwrap().num_mismatched() > 5 {
                continue;
            }
            for mode in SolverMode::ALL {
                let solve = solve_joint_with(&s, link, &JointOptions::new(8, mode)).unwrap();
                let want = brute_force_joint(&s, link, 8, mode).unwrap().best;
                let got = solve.decision;
                assert_eq!(got.feasible, want.feasible, "{seed} {link:?} {mode}");
                if got.feasible {
                    feasible += 1;
                    let rel = (got.gamma - want.gamma).abs() / want.gamma;
                    assert!(rel <= 1e-9, "{seed} {link:?} {mode}: {} vs {}", got.gamma, want.gamma);
                }
                branched += solve.stats.branched;
            }
        }
    }
    assert!(feasible > 100, "only {feasible} feasible links");
    assert!(branched > 0, "no branching happened");
}
