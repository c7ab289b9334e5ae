//! Scalar comparison equation `v' = G(v)`: adaptive solutions `v_c`, the
//! solution from infinity `v_inf` by inverting the tail integral, the
//! bounded/unbounded dichotomy in `c`, and the largest root `c0` together with
//! the long-time limit `v_inf(t) -> c0`.

mod ivp;
mod roots;
mod vinf;

use std::fmt::Write as _;

use serde::Serialize;

pub use ivp::{dp45, IvpStats};
pub use roots::{auto_search_hi, largest_root, RootReport};
pub use vinf::{
    default_c_sequence_ln, dichotomy, dichotomy_ln, longtime_limit, longtime_limit_with_fallback, v_infinity,
    v_infinity_curve, v_infinity_ln, DichotomyReport, DichotomyVerdict, LongtimeResult,
};

use crate::error::{Error, Result};
use crate::rate::Rate;

/// Values beyond this are reported as blow-up.
pub const OVERFLOW_GUARD: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OdeMethod {
    AdaptiveIVP,
    IntegralInversion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeSolution {
    pub label: String,
    /// Initial value; infinite for the solution from infinity.
    pub c: f64,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub method: OdeMethod,
    pub tol: f64,
}

impl OdeSolution {
    /// `t,v` rows after `#`-prefixed metadata lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# G={}", self.label);
        let _ = writeln!(s, "# c={}", self.c);
        let _ = writeln!(s, "# method={:?}", self.method);
        let _ = writeln!(s, "# tol={:e}", self.tol);
        s.push_str("t,v\n");
        for (t, v) in self.t_grid.iter().zip(&self.values) {
            let _ = writeln!(s, "{t:.17e},{v:.17e}");
        }
        s
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty solution")
    }
}

/// Finite-difference slope bound of `G` on `[0, 2 max(c, 1)]`; infinite or
/// NaN slopes reject the rate.
fn check_lipschitz<G: Rate + ?Sized>(g: &G, c: f64) -> Result<()> {
    let hi = 2.0 * c.max(1.0);
    let lo = g.domain_min();
    let n = 64;
    let mut prev = (lo, g.eval(lo));
    for i in 1..=n {
        let u = lo + (hi - lo) * i as f64 / n as f64;
        let gu = g.eval(u);
        let slope = (gu - prev.1) / (u - prev.0);
        if !slope.is_finite() {
            return Err(Error::Invalid(format!("{}: G is not Lipschitz near u = {u}", g.label())));
        }
        prev = (u, gu);
    }
    Ok(())
}

/// `v_c` on a uniform 101-point grid of `[0, t_end]`.
pub fn solve_ivp<G: Rate + ?Sized>(g: &G, c: f64, t_end: f64, tol: f64) -> Result<OdeSolution> {
    if !(t_end > 0.0) {
        return Err(Error::Invalid(format!("t_end = {t_end} must be positive")));
    }
    let grid: Vec<f64> = (0..=100).map(|i| t_end * i as f64 / 100.0).collect();
    solve_ivp_on(g, c, &grid, tol)
}

/// `v_c` sampled on `t_grid` (increasing, `>= 0`).
pub fn solve_ivp_on<G: Rate + ?Sized>(g: &G, c: f64, t_grid: &[f64], tol: f64) -> Result<OdeSolution> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Invalid(format!("initial value c = {c} must be finite and >= 0")));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tol = {tol} must be positive")));
    }
    check_lipschitz(g, c)?;
    let nonneg = g.eval(0.0) == 0.0;
    let (mut values, _) = ivp::dp45(
        |v| g.eval(v),
        0.0,
        c,
        t_grid,
        |v| 0.1 * tol * v.abs().max(1.0),
        |v| (v.abs() > OVERFLOW_GUARD || !v.is_finite()).then(|| format!("|v| exceeded {OVERFLOW_GUARD:e}")),
    )?;
    if nonneg {
        // zero is an equilibrium, so negative values are round-off
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
    }
    Ok(OdeSolution {
        label: g.label(),
        c,
        t_grid: t_grid.to_vec(),
        values,
        method: OdeMethod::AdaptiveIVP,
        tol,
    })
}

/// `ln v_c` for `v_c` started at `c = exp(ln_c)`, integrating `y' = G(e^y)/e^y`.
/// `ln_c` may exceed the floating range of `c`.
pub fn solve_ivp_log<G: Rate + ?Sized>(g: &G, ln_c: f64, t_grid: &[f64], tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tol = {tol} must be positive")));
    }
    let f = |y: f64| g.per_unit_ln(y);
    let mut y0 = ln_c;
    if f(y0).is_nan() {
        return Err(Error::Domain(format!("{}: no log-space rate at ln c = {ln_c}", g.label())));
    }
    let tame = |y: f64| f(y).abs() <= 1e300;
    if !tame(y0) {
        // Start at the largest level where the rate is below 1e300; the skipped
        // time is below (ln_c - y*) / 1e300.
        let mut lo = y0.min(690.0);
        let mut tries = 0;
        while !tame(lo) {
            lo -= (lo.abs()).max(1.0);
            tries += 1;
            if tries > 100 {
                return Err(Error::Domain(format!("{}: rate not finite below ln c = {ln_c}", g.label())));
            }
        }
        let mut hi = y0;
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if tame(m) {
                lo = m;
            } else {
                hi = m;
            }
        }
        y0 = lo;
    }
    let (ys, _) = ivp::dp45(f, 0.0, y0, t_grid, |y| 0.1 * tol * y.abs().max(1.0), |y| {
        (!y.is_finite()).then(|| "log value not finite".to_string())
    })?;
    Ok(ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        let lin = |u: f64| -u;
        let s = solve_ivp(&lin, 1.0, 1.0, 1e-8).unwrap();
        assert!((s.last() - (-1f64).exp()).abs() < 1e-8);
        let sq = |u: f64| -u * u;
        assert!((solve_ivp(&sq, 1.0, 1.0, 1e-8).unwrap().last() - 0.5).abs() < 1e-8);
        let logistic = |u: f64| u * (1.0 - u);
        let v = solve_ivp(&logistic, 0.5, 2.0, 1e-8).unwrap().last();
        assert!((v - 1.0 / (1.0 + (-2f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn csv_has_metadata_and_rows() {
        let sq = |u: f64| -u * u;
        let csv = solve_ivp(&sq, 2.0, 1.0, 1e-6).unwrap().to_csv();
        assert!(csv.starts_with("# G="));
        assert!(csv.contains("# method=AdaptiveIVP"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 102);
    }

    #[test]
    fn blow_up_is_reported() {
        let grow = |u: f64| u * u;
        let r = solve_ivp(&grow, 1.0, 2.0, 1e-8);
        assert!(matches!(r, Err(Error::BlowUp(_))), "{r:?}");
    }

    #[test]
    fn log_variable_matches_linear() {
        let sq = |u: f64| -u * u;
        let ys = solve_ivp_log(&sq, 1e6f64.ln(), &[1.0], 1e-10).unwrap();
        assert!((ys[0] - (1e6 / (1.0 + 1e6f64)).ln()).abs() < 1e-9);
        // beyond the floating range of c
        let sq = crate::rate::PowerLogRate::power(2.0);
        let ys = solve_ivp_log(&sq, 1e5, &[1.0], 1e-10).unwrap();
        assert!(ys[0].abs() < 1e-9);
    }
}
