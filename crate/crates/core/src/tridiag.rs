//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Solves `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
/// `sub[0]` and `sup[n-1]` are ignored. No pivoting: intended for
/// diagonally dominant (M-matrix) systems.
pub fn solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::Invalid("tridiagonal bands must have equal length".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::Invalid("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Invalid(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        c[i] = sup[i] / beta;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn apply(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn laplacian_system() {
        let n = 5;
        let x = solve(&vec![-1.0; n], &vec![2.0; n], &vec![-1.0; n], &vec![1.0; n]).unwrap();
        // discrete solution of -x'' = 1 with zero ends: i (n + 1 - i) / 2
        for (i, v) in x.iter().enumerate() {
            let k = (i + 1) as f64;
            assert!((v - k * (6.0 - k) / 2.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn residual_small(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..40)) {
            let n = vals.len();
            let sub: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let sup: Vec<f64> = vals.iter().map(|v| v.1).collect();
            let diag: Vec<f64> = (0..n).map(|i| 2.5 + sub[i].abs() + sup[i].abs()).collect();
            let rhs: Vec<f64> = vals.iter().map(|v| v.2).collect();
            let x = solve(&sub, &diag, &sup, &rhs).unwrap();
            let back = apply(&sub, &diag, &sup, &x);
            for i in 0..n {
                prop_assert!((back[i] - rhs[i]).abs() < 1e-12);
            }
        }
    }
}
