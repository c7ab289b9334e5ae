use serde::Serialize;

use crate::error::{Error, Result};
use crate::rate::Rate;

const SCAN_POINTS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootReport {
    /// Largest root of `G(u) = 0`.
    pub c0: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    /// Set when the scan saw `G` touch zero without changing sign above `c0`.
    pub tangency_warning: bool,
}

/// Smallest `10^k`, `k = -3..=30`, such that `G < 0` on probes of `[10^k, 1e31]`.
pub fn auto_search_hi<G: Rate + ?Sized>(g: &G) -> Result<f64> {
    let probes: Vec<f64> = (-12..=124).map(|k| 10f64.powf(k as f64 / 4.0)).collect();
    let neg: Vec<bool> = probes.iter().map(|&u| g.eval(u) < 0.0).collect();
    let mut first = None;
    for i in (0..probes.len()).rev() {
        if !neg[i] {
            break;
        }
        first = Some(i);
    }
    match first {
        Some(i) => {
            // round up to a whole decade so the whole [hi, 10 hi] check passes
            Ok(10f64.powf((probes[i].log10() - 1e-9).ceil()))
        }
        None => Err(Error::NoRoot(format!("{}: G is not eventually negative on probes up to 1e31", g.label()))),
    }
}

/// Largest sign change of `G` on `(0, search_hi]`, refined by bisection.
pub fn largest_root<G: Rate + ?Sized>(g: &G, search_hi: f64) -> Result<RootReport> {
    if !(search_hi > 0.0) || !search_hi.is_finite() {
        return Err(Error::Invalid(format!("search_hi = {search_hi} must be positive")));
    }
    for k in 0..=64 {
        let u = search_hi * 10f64.powf(k as f64 / 64.0);
        let gu = g.eval(u);
        if !(gu < 0.0) {
            return Err(Error::NoRoot(format!(
                "{}: G({u}) = {gu} is not negative on [search_hi, 10 search_hi]",
                g.label()
            )));
        }
    }
    let dmin = g.domain_min();
    let lo = if dmin > 0.0 { dmin.min(search_hi) * 0.5 } else { search_hi * 1e-12 };
    let scan: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo * (search_hi / lo).powf(i as f64 / (SCAN_POINTS - 1) as f64))
        .collect();
    let vals: Vec<f64> = scan.iter().map(|&u| g.eval(u)).collect();
    let tangency_scan = |from: usize| {
        let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        (from.max(1)..SCAN_POINTS - 1).any(|i| {
            let (a, b, c) = (vals[i - 1], vals[i], vals[i + 1]);
            if !(b >= a && b >= c) {
                return false;
            }
            // vertex of the parabola through the three samples
            let k = 0.5 * (a - 2.0 * b + c);
            let s = 0.5 * (c - a);
            let top = if k < 0.0 { b - s * s / (4.0 * k) } else { b };
            top > -1e-6 * scale
        })
    };
    let last_nonneg = (0..SCAN_POINTS).rev().find(|&i| !(vals[i] < 0.0));
    match last_nonneg {
        Some(i) => {
            if i == SCAN_POINTS - 1 {
                return Err(Error::NoRoot(format!("{}: G(search_hi) >= 0", g.label())));
            }
            let (mut a, mut b) = (scan[i], scan[i + 1]);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if g.eval(m) < 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            let (ga, gb) = (g.eval(a).abs(), g.eval(b).abs());
            let c0 = if ga <= gb { a } else { b };
            Ok(RootReport {
                c0,
                bracket: (a, b),
                residual: ga.min(gb),
                tangency_warning: tangency_scan(i + 2),
            })
        }
        None => {
            let g0 = g.eval(0.0);
            if g0 == 0.0 {
                Ok(RootReport { c0: 0.0, bracket: (0.0, lo), residual: 0.0, tangency_warning: tangency_scan(1) })
            } else {
                Err(Error::NoRoot(format!("{}: G < 0 on (0, search_hi] and G(0) = {g0}", g.label())))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::PowerLogRate;

    #[test]
    fn spec_examples() {
        let cubic = |u: f64| -u * (u - 1.0) * (u - 2.0);
        let r = largest_root(&cubic, 10.0).unwrap();
        assert!((r.c0 - 2.0).abs() < 1e-12);
        assert!(r.residual <= 1e-10 * r.c0.max(1.0));
        let sq = |u: f64| -u * u;
        assert_eq!(largest_root(&sq, 10.0).unwrap().c0, 0.0);
        let lin = |u: f64| 1.0 - u;
        assert!((largest_root(&lin, 10.0).unwrap().c0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_above_root() {
        let cubic = |u: f64| -u * (u - 1.0) * (u - 2.0);
        let r = largest_root(&cubic, auto_search_hi(&cubic).unwrap()).unwrap();
        for k in 1..=50 {
            let u = r.c0 * (1.0 + 9.0 * k as f64 / 50.0);
            assert!(cubic(u) < 0.0);
            assert!(cubic(r.c0 + 1.0 + 9.0 * k as f64 / 50.0) < 0.0);
        }
        assert!(!r.tangency_warning);
    }

    #[test]
    fn zero_extension_boundary_is_root() {
        let g = PowerLogRate::new(1.0, 1.0, vec![3.0]);
        let r = largest_root(&g, 10.0).unwrap();
        assert!((r.c0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tangency_and_errors() {
        let touch = |u: f64| -u * (u - 1.0).powi(2) - 0.0;
        assert!(largest_root(&touch, 10.0).unwrap().tangency_warning);
        let pos = |u: f64| u;
        assert!(matches!(largest_root(&pos, 10.0), Err(Error::NoRoot(_))));
    }
}
