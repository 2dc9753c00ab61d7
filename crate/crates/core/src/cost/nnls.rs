//! Lawson-Hanson non-negative least squares.

use nalgebra::{DMatrix, DVector};

const MAX_OUTER: usize = 200;

/// Minimizes `|Ax - b|` subject to `x >= 0`.
///
/// Each passive-set subproblem is solved by SVD, so rank-deficient and
/// under-determined systems are handled (one of the optimal points is
/// returned, not necessarily the minimum-norm one).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let scale = a.iter().chain(b.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale * scale * (a.nrows().max(n) as f64);

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];

    for _ in 0..MAX_OUTER {
        let w = a.transpose() * (b - a * &x);
        let next = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = next else { break };
        passive[j] = true;

        loop {
            let z = solve_passive(a, b, &passive);
            let blocking: Vec<usize> = (0..n).filter(|&i| passive[i] && z[i] <= 0.0).collect();
            if blocking.is_empty() {
                x = z;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&i| x[i] / (x[i] - z[i]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    x
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub = DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])]);
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-10)
        .expect("SVD computed with both factors");
    let mut z = DVector::zeros(passive.len());
    for (k, &i) in cols.iter().enumerate() {
        z[i] = sol[k];
    }
    z
}
