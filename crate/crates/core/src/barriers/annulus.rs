use crate::error::{Error, Result};

/// `Q(x) = (l^2 - (m + 1 + l - |x|)^2) W(x)`, `l = (m - 1) / 2`, on the
/// annulus `m + 1 <= |x| <= 2m`.
pub fn annulus_barrier_q<W: Fn(f64) -> f64 + ?Sized>(m: usize, w: &W, x: f64) -> Result<f64> {
    if m < 4 {
        return Err(Error::Invalid(format!("annulus barrier needs m >= 4, got {m}")));
    }
    let mf = m as f64;
    let r = x.abs();
    if r < mf + 1.0 || r > 2.0 * mf {
        return Err(Error::Domain(format!("|x| = {r} outside the annulus [{}, {}]", mf + 1.0, 2.0 * mf)));
    }
    let l = 0.5 * (mf - 1.0);
    let c = mf + 1.0 + l - r;
    Ok((l * l - c * c) * w(x))
}

/// `Q(u) = -u (log u)^(2+eps)` for `u >= 1`.
pub fn q_model(eps: f64, u: f64) -> f64 {
    -u * u.ln().powf(2.0 + eps)
}

/// `Q(a) - (Q(b + a) - Q(b))` for `1 <= a <= b`, written as the sum of two
/// nonnegative parts to avoid cancellation.
pub fn subadditivity_gap(eps: f64, a: f64, b: f64) -> f64 {
    let p = 2.0 + eps;
    let l0 = b.ln();
    let l1 = l0 + (a / b).ln_1p();
    let la = a.ln();
    a * (l1.powf(p) - la.powf(p)) + b * (l1.powf(p) - l0.powf(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn annulus_values() {
        let one = |_x: f64| 1.0;
        assert_eq!(annulus_barrier_q(4, &one, 5.0).unwrap(), 0.0);
        assert_eq!(annulus_barrier_q(4, &one, -8.0).unwrap(), 0.0);
        assert!((annulus_barrier_q(4, &one, 6.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((annulus_barrier_q(4, &one, 6.0).unwrap() - (1.5f64 * 1.5 - 0.25)).abs() < 1e-15);
        assert!(annulus_barrier_q(4, &one, 4.5).is_err());
        assert!(annulus_barrier_q(3, &one, 5.0).is_err());
        for m in 4..12 {
            let mf = m as f64;
            let w = |x: f64| 1.0 + x * x;
            let mid = annulus_barrier_q(m, &w, 1.5 * mf).unwrap();
            let l = 0.5 * (mf - 1.0);
            assert!((mid - (l * l - 0.25) * w(1.5 * mf)).abs() < 1e-9 * mid);
            for k in 1..20 {
                let x = mf + 1.0 + (mf - 1.0) * k as f64 / 20.0;
                assert!(annulus_barrier_q(m, &w, x).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn gap_matches_direct_difference() {
        for &(a, b) in &[(1.0, 1.0), (2.0, 3.0), (5.0, 1e3)] {
            let direct = q_model(1.0, a) - (q_model(1.0, a + b) - q_model(1.0, b));
            assert!((subadditivity_gap(1.0, a, b) - direct).abs() < 1e-9 * direct.abs());
        }
    }

    proptest! {
        #[test]
        fn subadditive(a in 1.0f64..1e6, t in 0.0f64..1.0, eps in 0.1f64..3.0) {
            let b = a + t * (1e6 - a);
            prop_assert!(subadditivity_gap(eps, a, b) > 0.0);
        }
    }
}
