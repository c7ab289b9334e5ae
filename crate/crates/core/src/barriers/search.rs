use serde::{Deserialize, Serialize};

use super::report::ResidualReport;
use crate::error::{Error, Result};

/// Search interval for `K` and the relative bisection tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KRange {
    pub lo: f64,
    pub hi: f64,
    pub rel_tol: f64,
}

impl Default for KRange {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1e6, rel_tol: 1e-3 }
    }
}

/// Smallest certifying `K` on a doubling-then-bisection schedule, assuming
/// the certificate is monotone in `K`. Returns `K` with its report.
pub fn find_k<F: Fn(f64) -> ResidualReport>(certify: F, range: KRange) -> Result<(f64, ResidualReport)> {
    if !(range.hi > range.lo) || !(range.lo >= 0.0) || !(range.rel_tol > 0.0) {
        return Err(Error::Invalid(format!("bad K range {range:?}")));
    }
    let first = certify(range.lo);
    if first.sign_certified {
        return Ok((range.lo, first));
    }
    let mut fail = range.lo;
    let mut k = if range.lo > 0.0 { 2.0 * range.lo } else { 1.0 };
    let mut best;
    loop {
        let k_try = k.min(range.hi);
        let rep = certify(k_try);
        if rep.sign_certified {
            k = k_try;
            best = rep;
            break;
        }
        if k_try >= range.hi {
            return Err(Error::KExhausted(format!(
                "no certificate for K in [{}, {}]; last max residual {:.4e} at (x, t) = ({}, {})",
                range.lo, range.hi, rep.max_residual, rep.worst_point.x, rep.worst_point.t
            )));
        }
        fail = k_try;
        k *= 2.0;
    }
    while k - fail > range.rel_tol * k {
        let mid = 0.5 * (fail + k);
        let rep = certify(mid);
        if rep.sign_certified {
            k = mid;
            best = rep;
        } else {
            fail = mid;
        }
    }
    Ok((k, best))
}
