use std::cell::Cell;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::integrate;
use crate::rate::Rate;

const MAX_DOUBLINGS: usize = 80;
const MAX_LEVEL: usize = 3;
/// Geometric decay threshold for the convergence certificate.
const DECAY: f64 = 0.5 * (1.0 - 1e-9);
/// Increment ratio at or above which the tail is declared divergent.
const STALL: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OsgoodVerdict {
    Convergent(f64),
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsgoodReport {
    pub verdict: OsgoodVerdict,
    /// Substitution level `j`: the integration variable is `log^(j) u`.
    pub level: usize,
    pub head: f64,
    /// Integrals over the doubling intervals `[W, 2W]` in the level variable.
    pub increments: Vec<f64>,
    /// Geometric tail estimate added to the sum of increments.
    pub extrapolated_tail: f64,
}

/// `int_{u0}^inf du / (-G(u))`: Convergent with its value, or Divergent.
pub fn osgood_test<G: Rate + ?Sized>(g: &G, u0: f64) -> Result<OsgoodVerdict> {
    Ok(osgood_report(g, u0)?.verdict)
}

/// Full diagnostics of the tail test from `u0`.
pub fn osgood_report<G: Rate + ?Sized>(g: &G, u0: f64) -> Result<OsgoodReport> {
    if !(u0 > 0.0) || !u0.is_finite() {
        return Err(Error::Invalid(format!("lower limit u0 = {u0} must be positive and finite")));
    }
    osgood_report_ln(g, u0.ln())
}

/// `int_v^inf du / (-G(u))` with `v = exp(ln_v)`; diverging tails map to
/// `NotOsgood`.
pub fn tail_integral<G: Rate + ?Sized>(g: &G, ln_v: f64) -> Result<f64> {
    match osgood_report_ln(g, ln_v)?.verdict {
        OsgoodVerdict::Convergent(v) => Ok(v),
        OsgoodVerdict::Divergent => Err(Error::NotOsgood(format!("{}: tail integral diverges", g.label()))),
    }
}

/// Log-space entry point of the test; `ln_u0` may exceed `ln f64::MAX`.
pub fn osgood_report_ln<G: Rate + ?Sized>(g: &G, ln_u0: f64) -> Result<OsgoodReport> {
    check_sign(g, ln_u0)?;
    for level in 1..=MAX_LEVEL {
        match try_level(g, ln_u0, level)? {
            Some(r) => return Ok(r),
            None => continue,
        }
    }
    Err(Error::Inconclusive(format!(
        "{}: no decay or stall certificate within {MAX_DOUBLINGS} doublings at levels 1..={MAX_LEVEL}",
        g.label()
    )))
}

fn check_sign<G: Rate + ?Sized>(g: &G, ln_u0: f64) -> Result<()> {
    let mut probes: Vec<f64> = (-4..=40).map(|k| ln_u0 + 2f64.powi(k)).collect();
    probes.push(ln_u0);
    probes.extend([1e3, 1e6, 1e12, 1e50, 1e100, 1e300].iter().filter(|&&p| p > ln_u0));
    for s in probes {
        let pu = g.per_unit_ln(s);
        if pu >= 0.0 {
            return Err(Error::Sign(format!("{}: G(u) >= 0 at ln u = {s}", g.label())));
        }
    }
    Ok(())
}

/// `ln s` of the level-1 variable `s = ln u` from the level-`j` variable `w`,
/// plus the log-Jacobian `ln(ds/dw)`. `None` if `s` is not representable.
fn level_map(level: usize, w: f64) -> Option<(f64, f64)> {
    let mut s = w;
    let mut jac = 0.0;
    for _ in 1..level {
        jac += s;
        s = s.exp();
    }
    s.is_finite().then_some((s, jac))
}

/// Integrand in the level variable; flags a nonnegative rate.
fn integrand<G: Rate + ?Sized>(g: &G, level: usize, w: f64, bad_sign: &Cell<bool>) -> f64 {
    let Some((s, jac)) = level_map(level, w) else {
        return f64::NAN;
    };
    let pu = g.per_unit_ln(s);
    if pu >= 0.0 {
        bad_sign.set(true);
        return f64::NAN;
    }
    (jac - (-pu).ln()).exp()
}

fn quad_piece<G: Rate + ?Sized>(g: &G, level: usize, a: f64, b: f64, bad: &Cell<bool>) -> f64 {
    integrate(|w| integrand(g, level, w, bad), a, b, 1e-300, 1e-13).value
}

/// `log^(j-1)` applied to a level-1 value, if defined.
fn level_inverse(level: usize, s: f64) -> Option<f64> {
    let mut w = s;
    for _ in 1..level {
        if !(w > 0.0) {
            return None;
        }
        w = w.ln();
    }
    Some(w)
}

fn try_level<G: Rate + ?Sized>(g: &G, ln_u0: f64, level: usize) -> Result<Option<OsgoodReport>> {
    let bad = Cell::new(false);
    let w_start = level_inverse(level, ln_u0).map_or(0.5, |w| w.max(0.5));
    let s_start = match level_map(level, w_start) {
        Some((s, _)) => s,
        None => return Ok(None),
    };
    let head = if s_start > ln_u0 { quad_piece(g, 1, ln_u0, s_start, &bad) } else { 0.0 };
    if bad.get() {
        return Err(Error::Sign(format!("{}: G(u) >= 0 above ln u = {ln_u0}", g.label())));
    }
    if !head.is_finite() {
        return Ok(None);
    }
    let mut increments = Vec::new();
    let mut ratios: Vec<f64> = Vec::new();
    let mut w = w_start;
    let mut certified = false;
    for _ in 0..MAX_DOUBLINGS + 200 {
        let inc = quad_piece(g, level, w, 2.0 * w, &bad);
        if bad.get() {
            return Err(Error::Sign(format!("{}: G(u) >= 0 on the tail", g.label())));
        }
        if !inc.is_finite() {
            return Ok(None);
        }
        if let Some(&prev) = increments.last() {
            let prev: f64 = prev;
            ratios.push(if inc == 0.0 { 0.0 } else { inc / prev });
        }
        increments.push(inc);
        w *= 2.0;
        let k = ratios.len();
        if k >= 3 {
            let last3 = &ratios[k - 3..];
            if !certified && last3.iter().all(|&r| r >= STALL) {
                return Ok(Some(OsgoodReport {
                    verdict: OsgoodVerdict::Divergent,
                    level,
                    head,
                    increments,
                    extrapolated_tail: f64::INFINITY,
                }));
            }
            if last3.iter().all(|&r| r < DECAY) {
                certified = true;
                let total: f64 = head + increments.iter().sum::<f64>();
                let rho = last3.iter().cloned().fold(0.0, f64::max);
                let tail = inc * rho / (1.0 - rho);
                if tail <= 1e-15 * total.abs() {
                    return Ok(Some(OsgoodReport {
                        verdict: OsgoodVerdict::Convergent(total + tail),
                        level,
                        head,
                        increments,
                        extrapolated_tail: tail,
                    }));
                }
            } else if certified {
                // decay certificate lost while refining the tail
                certified = false;
            }
        }
        if !certified && increments.len() > MAX_DOUBLINGS {
            return Ok(None);
        }
    }
    Ok(None)
}
