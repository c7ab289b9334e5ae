//! Reaction terms `f(x, u)`, their spatial envelopes and the growth
//! classifiers: iterated-log ratio limits and the tail-integral test.

mod envelope;
mod growth;
mod osgood;
mod shift;
mod term;

pub use envelope::{envelope, grid_envelope, Envelope, EnvelopeMethod, DEFAULT_INFINITE_PROBE_RADIUS};
pub use growth::{check_f1, check_f2, check_f2_ln, default_probes, F1Verdict, GrowthSpec, GrowthRecord, ProbeRecord, Verdict};
pub use osgood::{osgood_report, osgood_test, tail_integral, OsgoodReport, OsgoodVerdict};
pub use shift::{shift_envelopes, ShiftEnvelopes, ShiftMethod, ShiftOptions};
pub use term::{parse_coefficient, CoeffSpec, ReactionTerm, TermKind, TermSpec};

use crate::error::{Error, Result};

/// `log^(m) u`, the m-fold iterated natural logarithm (`m = 0` returns `u`).
pub fn iter_log(m: usize, u: f64) -> Result<f64> {
    let mut v = u;
    for i in 0..m {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("log^({}) of {u}: argument {v} <= 0", i + 1)));
        }
        v = v.ln();
    }
    Ok(v)
}

/// `prod_{i=1}^m log^(i) u`, with the empty product equal to 1.
/// Every factor must be positive.
pub fn iter_log_product(m: usize, u: f64) -> Result<f64> {
    let mut v = u;
    let mut prod = 1.0;
    for i in 0..m {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("log^({}) of {u}: argument {v} <= 0", i + 1)));
        }
        v = v.ln();
        if !(v > 0.0) {
            return Err(Error::Domain(format!("log^({}) {u} = {v} is not positive", i + 1)));
        }
        prod *= v;
    }
    Ok(prod)
}

/// `exp^(m) x`, the m-fold iterated exponential. Overflow is an error.
pub fn iter_exp(m: usize, x: f64) -> Result<f64> {
    let mut v = x;
    for i in 0..m {
        v = v.exp();
        if !v.is_finite() {
            return Err(Error::Overflow(format!("exp^({}) of {x} exceeds f64 range", i + 1)));
        }
    }
    Ok(v)
}

/// `ln(exp^(m) x)` evaluated without forming the outermost exponential.
pub fn ln_iter_exp(m: usize, x: f64) -> Result<f64> {
    if m == 0 {
        if x > 0.0 {
            Ok(x.ln())
        } else {
            Err(Error::Domain(format!("ln of {x}")))
        }
    } else {
        iter_exp(m - 1, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    #[test]
    fn iterate_form_examples() {
        assert!((iter_log(1, E).unwrap() - 1.0).abs() < 1e-15);
        assert!((iter_log(2, E.powf(E)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(iter_log_product(0, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(iter_log(2, 0.5), Err(Error::Domain(_))));
        assert!(matches!(iter_log(1, -1.0), Err(Error::Domain(_))));
        assert!(matches!(iter_log_product(2, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn iter_exp_examples() {
        assert_eq!(iter_exp(1, 0.0).unwrap(), 1.0);
        assert!((iter_exp(2, 0.0).unwrap() - E).abs() < 1e-15);
        // e^e by composition of the m = 2 result
        let e_e = iter_exp(1, iter_exp(2, 0.0).unwrap()).unwrap();
        assert!((iter_exp(3, 0.0).unwrap() - e_e).abs() < 1e-13);
        assert!((iter_exp(3, 0.0).unwrap() - 15.154_262_241_479_262).abs() < 1e-12);
        assert_eq!(iter_exp(0, 1.25).unwrap(), 1.25);
    }

    #[test]
    fn iter_exp_overflow_is_reported() {
        assert!(matches!(iter_exp(2, 7.0), Err(Error::Overflow(_))));
        assert!((ln_iter_exp(2, 7.0).unwrap() - 7f64.exp()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn iter_log_inverts_iter_exp(x in 0.1f64..3.0, m in 0usize..=3) {
            if let Ok(big) = iter_exp(m, x) {
                let y = iter_log(m, big).unwrap();
                prop_assert!(((y - x) / x).abs() < 1e-10);
            }
            // exp^(3) overflows beyond x ~ 1.88; the log-space entry covers the rest
            if m >= 1 {
                let y = iter_log(m - 1, ln_iter_exp(m, x).unwrap()).unwrap();
                prop_assert!(((y - x) / x).abs() < 1e-10);
            }
        }
    }
}
