//! Reference computations shared by the integration tests. Deliberately
//! naive and independent of the library's solvers.
#![allow(dead_code)]

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VertexOutcome {
    Infeasible,
    Unbounded,
    Optimal(f64),
}

/// Solves an `n x n` system by Gaussian elimination; `None` if singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot_row = a[col].clone();
                for (x, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                    *x -= f * p;
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if m < k {
        return vec![];
    }
    let mut out = subsets(m - 1, k);
    for mut s in subsets(m - 1, k - 1) {
        s.push(m - 1);
        out.push(s);
    }
    out
}

/// Direction spanning the null space of `rows` (n-1 rows in n dimensions).
fn null_direction(rows: &[&Vec<f64>], n: usize) -> Option<Vec<f64>> {
    let d = match n {
        1 => vec![1.0],
        2 => vec![-rows[0][1], rows[0][0]],
        3 => {
            let (u, v) = (rows[0], rows[1]);
            vec![u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
        }
        _ => unimplemented!("oracle handles at most three variables"),
    };
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm > 1e-10).then(|| d.iter().map(|v| v / norm).collect())
}

/// `max c.x` s.t. `A x <= b`, `lo <= x <= hi` by enumerating vertices and
/// extreme rays of the constraint polyhedron. Up to three variables.
pub fn lp_by_vertices(c: &[f64], a: &[Vec<f64>], b: &[f64], bounds: &[(f64, f64)]) -> VertexOutcome {
    let n = c.len();
    let mut g: Vec<Vec<f64>> = a.to_vec();
    let mut h: Vec<f64> = b.to_vec();
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[i] = -1.0;
        g.push(e.clone());
        h.push(-lo);
        if hi.is_finite() {
            e[i] = 1.0;
            g.push(e);
            h.push(hi);
        }
    }
    let feasible = |x: &[f64]| {
        g.iter()
            .zip(&h)
            .all(|(row, &rhs)| row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() <= rhs + 1e-9 * (1.0 + rhs.abs()))
    };
    let mut best: Option<f64> = None;
    for s in subsets(g.len(), n) {
        let sys: Vec<Vec<f64>> = s.iter().map(|&r| g[r].clone()).collect();
        let rhs: Vec<f64> = s.iter().map(|&r| h[r]).collect();
        if let Some(x) = solve_square(sys, rhs) {
            if feasible(&x) {
                let v: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        }
    }
    // lo is finite, so the polyhedron is pointed: nonempty iff it has a vertex
    let Some(best) = best else { return VertexOutcome::Infeasible };
    for s in subsets(g.len(), n - 1) {
        let rows: Vec<&Vec<f64>> = s.iter().map(|&r| &g[r]).collect();
        let Some(d) = null_direction(&rows, n) else { continue };
        for sign in [1.0, -1.0] {
            let d: Vec<f64> = d.iter().map(|v| v * sign).collect();
            let in_cone = g.iter().all(|row| row.iter().zip(&d).map(|(r, v)| r * v).sum::<f64>() <= 1e-9);
            let gain: f64 = c.iter().zip(&d).map(|(ci, di)| ci * di).sum();
            if in_cone && gain > 1e-9 {
                return VertexOutcome::Unbounded;
            }
        }
    }
    VertexOutcome::Optimal(best)
}

/// Random LP with up to three variables and four rows.
pub struct RandomLp {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

pub fn random_lp<R: Rng>(rng: &mut R) -> RandomLp {
    let n = rng.random_range(1..=3);
    let m = rng.random_range(0..=4);
    // integer data exercises degeneracy, continuous data the general case
    let integral = rng.random_bool(0.5);
    let coef = |lo: f64, hi: f64, rng: &mut R| {
        let v = rng.random_range(lo..hi);
        if integral {
            v.round()
        } else {
            v
        }
    };
    let c = (0..n).map(|_| coef(-5.0, 5.0, rng)).collect();
    let a = (0..m).map(|_| (0..n).map(|_| coef(-5.0, 5.0, rng)).collect()).collect();
    let b = (0..m).map(|_| coef(-4.0, 10.0, rng)).collect();
    let bounds = (0..n)
        .map(|_| {
            let lo = coef(-3.0, 1.0, rng);
            let hi = if rng.random_bool(0.3) { f64::INFINITY } else { lo + coef(0.0, 5.0, rng) };
            (lo, hi)
        })
        .collect();
    RandomLp { c, a, b, bounds }
}

/// Best total over every partial injective map rows -> columns.
pub fn exhaustive_matching(weights: &[Vec<Option<f64>>]) -> f64 {
    fn go(i: usize, used: &mut Vec<bool>, w: &[Vec<Option<f64>>], acc: f64, best: &mut f64) {
        if i == w.len() {
            *best = best.max(acc);
            return;
        }
        go(i + 1, used, w, acc, best);
        for k in 0..used.len() {
            if let (false, Some(v)) = (used[k], w[i][k]) {
                used[k] = true;
                go(i + 1, used, w, acc + v, best);
                used[k] = false;
            }
        }
    }
    let cols = weights.first().map_or(0, Vec::len);
    let mut best = 0.0;
    go(0, &mut vec![false; cols], weights, 0.0, &mut best);
    best
}

/// `-t1 exp(t2 (1 - x)) + t3 exp(-t4 (1 - x))`.
pub fn accuracy_curve(theta: [f64; 4], xi: f64) -> f64 {
    -theta[0] * (theta[1] * (1.0 - xi)).exp() + theta[2] * (-theta[3] * (1.0 - xi)).exp()
}

/// Smallest `xi` with `accuracy_curve >= target`, by plain bisection.
pub fn bisect_threshold(theta: [f64; 4], target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if accuracy_curve(theta, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
