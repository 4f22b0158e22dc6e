//! Nonnegative least squares (Lawson–Hanson active set).

use nalgebra::{DMatrix, DVector};

/// argmin ‖Ax − b‖ over x ≥ 0.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = a.amax().max(1e-300) * b.amax().max(1e-300);
    let tol = 1e-12 * scale * (a.nrows().max(n) as f64);
    for _ in 0..3 * n + 10 {
        let grad = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && grad[j] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = candidate else {
            break;
        };
        passive[j] = true;
        for _ in 0..=n {
            let z = solve_passive(a, b, &passive);
            if (0..n).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                x = z;
                break;
            }
            // step back to the boundary of the feasible set
            let mut alpha = f64::INFINITY;
            for i in (0..n).filter(|&i| passive[i] && z[i] <= 0.0) {
                alpha = alpha.min(x[i] / (x[i] - z[i]));
            }
            x += (&z - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= 1e-15 * scale {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    x
}

/// Least squares over the passive columns, zero elsewhere.
fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub = DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])]);
    let svd = sub.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max();
    let y = svd.solve(b, eps).expect("both factors were computed");
    let mut z = DVector::zeros(passive.len());
    for (c, &i) in cols.iter().enumerate() {
        z[i] = y[c];
    }
    z
}
