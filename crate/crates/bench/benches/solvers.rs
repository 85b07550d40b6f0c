use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use gestr_bench::{assignment_problem, default_scenario, hardest_link};
use gestr_core::assignment::solve_assignment;
use gestr_core::experiment::solve_scenario;
use gestr_core::joint::{solve_joint, JointOptions, SolverMode};
use gestr_core::lp::LinearProgram;

fn lp(c: &mut Criterion) {
    let lp = LinearProgram::new(
        vec![3.0, 2.0, -1.0, 4.0],
        vec![vec![1.0, 1.0, 1.0, 1.0], vec![2.0, -1.0, 0.5, 3.0], vec![-1.0, 2.0, 1.0, 0.0]],
        vec![4.0, 5.0, 3.0],
        vec![(0.0, 1.0), (0.0, 2.0), (-1.0, f64::INFINITY), (0.0, 1.0)],
    )
    .unwrap();
    c.bench_function("lp/4x3", |b| b.iter(|| black_box(&lp).solve().unwrap()));
}

fn joint(c: &mut Criterion) {
    let s = default_scenario(7);
    let link = hardest_link(&s);
    for mode in SolverMode::ALL {
        c.bench_function(&format!("solve_joint/{mode}/M=50"), |b| {
            b.iter(|| solve_joint(black_box(&s), link, 50, mode).unwrap())
        });
    }
}

fn scenario(c: &mut Criterion) {
    let s = default_scenario(11);
    c.bench_function("solve_scenario/joint/M=20", |b| {
        b.iter(|| solve_scenario(black_box(&s), &JointOptions::new(20, SolverMode::Joint)).unwrap())
    });
}

fn assignment(c: &mut Criterion) {
    for (n, k) in [(3, 5), (20, 30)] {
        let p = assignment_problem(n, k);
        c.bench_function(&format!("assignment/{n}x{k}"), |b| b.iter(|| solve_assignment(black_box(&p))));
    }
}

criterion_group!(benches, lp, joint, scenario, assignment);
criterion_main!(benches);
