use serde::Serialize;

use super::roots::{auto_search_hi, largest_root};
use super::{ivp, solve_ivp_log, solve_ivp_on, OdeMethod, OdeSolution};
use crate::error::{Error, Result};
use crate::nonlinearity::tail_integral;
use crate::rate::Rate;

/// Relative offset of the handoff level above the largest root.
const HANDOFF: f64 = 1e-3;
/// Handoff level when the largest root is zero.
const HANDOFF_AT_ZERO: f64 = 1e-8;

/// `ln v_inf(t)`, where `int_{v_inf(t)}^inf du / (-G(u)) = t`.
///
/// The tail integral is inverted down to `c0 (1 + 1e-3)`; later times are
/// reached by integrating the equation from that handoff level.
pub fn v_infinity_ln<G: Rate + ?Sized>(g: &G, t: f64, tol: f64) -> Result<f64> {
    if !(t > 0.0) || !(tol > 0.0) {
        return Err(Error::Invalid(format!("need t > 0 and tol > 0, got t = {t}, tol = {tol}")));
    }
    let c0 = largest_root(g, auto_search_hi(g)?)?.c0;
    let ln_h = if c0 > 0.0 { (c0 * (1.0 + HANDOFF)).ln() } else { HANDOFF_AT_ZERO.ln() };
    let t_h = tail_integral(g, ln_h)?;
    if t >= t_h {
        let h = ln_h.exp();
        let sol = solve_ivp_on(g, h, &[t - t_h], 0.1 * tol)?;
        return Ok(sol.values[0].ln());
    }
    let phi = |y: f64| -> Result<f64> { Ok(tail_integral(g, y)?.ln() - t.ln()) };
    // bracket: phi(lo) > 0 > phi(hi)
    let mut lo = ln_h;
    let mut f_lo = t_h.ln() - t.ln();
    let mut gap = 1.0;
    let mut hi = lo + gap;
    let mut f_hi = phi(hi)?;
    while f_hi > 0.0 {
        lo = hi;
        f_lo = f_hi;
        gap *= 2.0;
        hi = ln_h + gap;
        if !hi.is_finite() || gap > 1e300 {
            return Err(Error::Convergence(format!("{}: no upper bracket for v_inf({t})", g.label())));
        }
        f_hi = phi(hi)?;
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    // Illinois regula falsi on the monotone map y -> ln T(y)
    let mut side = 0i8;
    for _ in 0..400 {
        let target = (1e-3 * tol).max(4e-16 * hi.abs());
        if hi - lo <= target {
            break;
        }
        let mut m = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(m > lo && m < hi) {
            m = 0.5 * (lo + hi);
        }
        let fm = phi(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm > 0.0 {
            lo = m;
            f_lo = fm;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = m;
            f_hi = fm;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
    }
    Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi })
}

/// `v_inf(t)`; overflow of the value itself is an error.
pub fn v_infinity<G: Rate + ?Sized>(g: &G, t: f64, tol: f64) -> Result<f64> {
    let y = v_infinity_ln(g, t, tol)?;
    let v = y.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("v_inf({t}) = exp({y})")))
    }
}

/// `v_inf` sampled on `t_grid` (all positive).
pub fn v_infinity_curve<G: Rate + ?Sized>(g: &G, t_grid: &[f64], tol: f64) -> Result<OdeSolution> {
    let values = t_grid.iter().map(|&t| v_infinity(g, t, tol)).collect::<Result<Vec<_>>>()?;
    Ok(OdeSolution {
        label: g.label(),
        c: f64::INFINITY,
        t_grid: t_grid.to_vec(),
        values,
        method: OdeMethod::IntegralInversion,
        tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DichotomyVerdict {
    Bounded(f64),
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub verdict: DichotomyVerdict,
    pub ln_c: Vec<f64>,
    /// `ln v_c(t)` for each `c`.
    pub ln_values: Vec<f64>,
    /// `ln v_inf(t)` when it exists.
    pub ln_v_infinity: Option<f64>,
}

/// `ln c` for `c = 10^k`, `k = 1..=6`, then `ln c = 10^j`, `j = 2..=8`.
pub fn default_c_sequence_ln() -> Vec<f64> {
    let mut v: Vec<f64> = (1..=6).map(|k| k as f64 * std::f64::consts::LN_10).collect();
    v.extend((2..=8).map(|j| 10f64.powi(j)));
    v
}

/// Dichotomy on a sequence of initial values `c` (finite, increasing).
pub fn dichotomy<G: Rate + ?Sized>(g: &G, t: f64, c_sequence: &[f64], tol: f64) -> Result<DichotomyVerdict> {
    let ln: Vec<f64> = c_sequence.iter().map(|c| c.ln()).collect();
    Ok(dichotomy_ln(g, t, &ln, tol)?.verdict)
}

/// Dichotomy on `ln c` values.
///
/// Bounded when `ln v_c(t)` settles (last change `< tol`) and agrees with
/// `ln v_inf(t)` within `10 tol`. Unbounded when `ln ln v_c(t)` keeps tracking
/// `ln ln c` with slope at least 1/4 over the last three steps.
pub fn dichotomy_ln<G: Rate + ?Sized>(g: &G, t: f64, ln_c: &[f64], tol: f64) -> Result<DichotomyReport> {
    if ln_c.len() < 4 || ln_c.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("need at least 4 strictly increasing values of c".into()));
    }
    if ln_c[ln_c.len() - 1] - ln_c[0] < 6.0 * std::f64::consts::LN_10 - 1e-9 {
        return Err(Error::Invalid("c sequence must span at least 6 decades".into()));
    }
    let ys = ln_c
        .iter()
        .map(|&lc| solve_ivp_log(g, lc, &[t], 1e-3 * tol).map(|v| v[0]))
        .collect::<Result<Vec<f64>>>()?;
    let n = ys.len();
    let vinf = match v_infinity_ln(g, t, tol) {
        Ok(y) => Some(y),
        Err(Error::NotOsgood(_)) => None,
        Err(e) => return Err(e),
    };
    let report = |verdict| DichotomyReport {
        verdict,
        ln_c: ln_c.to_vec(),
        ln_values: ys.clone(),
        ln_v_infinity: vinf,
    };
    if (ys[n - 1] - ys[n - 2]).abs() < tol {
        if let Some(yv) = vinf {
            if (ys[n - 1] - yv).abs() <= 10.0 * tol {
                return Ok(report(DichotomyVerdict::Bounded(ys[n - 1].exp())));
            }
        }
        return Err(Error::Inconclusive(format!(
            "{}: v_c({t}) settles at exp({}) but v_inf is {:?}",
            g.label(),
            ys[n - 1],
            vinf
        )));
    }
    let tracking = (n - 3..n).all(|k| {
        ys[k - 1] > 1.0
            && ys[k] > ys[k - 1]
            && ln_c[k - 1] > 1.0
            && (ys[k].ln() - ys[k - 1].ln()) / (ln_c[k].ln() - ln_c[k - 1].ln()) >= 0.25
    });
    if tracking {
        return Ok(report(DichotomyVerdict::Unbounded));
    }
    Err(Error::Inconclusive(format!("{}: v_c({t}) neither settles nor tracks c", g.label())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongtimeResult {
    pub limit: f64,
    pub c0: f64,
    pub t_final: f64,
    /// The solution from infinity does not exist; `v_c` from a large `c` was used.
    pub fallback: bool,
}

/// `lim_{t->inf} v_inf(t)` by doubling `t` until successive values differ by
/// less than `tol`; must agree with the largest root within `10 tol`.
pub fn longtime_limit<G: Rate + ?Sized>(g: &G, tol: f64) -> Result<f64> {
    let c0 = largest_root(g, auto_search_hi(g)?)?.c0;
    let mut t = 1.0;
    let mut prev = v_infinity(g, t, 0.01 * tol)?;
    for _ in 0..80 {
        t *= 2.0;
        let v = v_infinity(g, t, 0.01 * tol)?;
        if (v - prev).abs() < tol {
            return agree(g, v, c0, tol);
        }
        prev = v;
    }
    Err(Error::Convergence(format!("{}: v_inf(t) still moving at t = {t}", g.label())))
}

fn agree<G: Rate + ?Sized>(g: &G, v: f64, c0: f64, tol: f64) -> Result<f64> {
    if (v - c0).abs() <= 10.0 * tol {
        Ok(v)
    } else {
        Err(Error::Convergence(format!("{}: long-time value {v} differs from largest root {c0}", g.label())))
    }
}

/// [`longtime_limit`], falling back to `v_c` from `c = 1e6` when the tail
/// integral diverges.
pub fn longtime_limit_with_fallback<G: Rate + ?Sized>(g: &G, tol: f64) -> Result<LongtimeResult> {
    let c0 = largest_root(g, auto_search_hi(g)?)?.c0;
    match longtime_limit(g, tol) {
        Ok(limit) => Ok(LongtimeResult { limit, c0, t_final: f64::NAN, fallback: false }),
        Err(Error::NotOsgood(_)) => {
            let c = 1e6;
            let mut t = 1.0;
            let at = |t: f64| -> Result<f64> {
                let (v, _) = ivp::dp45(|v| g.eval(v), 0.0, c, &[t], |v| 1e-3 * tol * v.abs().max(1.0), |_| None)?;
                Ok(v[0])
            };
            let mut prev = at(t)?;
            for _ in 0..80 {
                t *= 2.0;
                let v = at(t)?;
                if (v - prev).abs() < tol {
                    let limit = agree(g, v, c0, tol)?;
                    return Ok(LongtimeResult { limit, c0, t_final: t, fallback: true });
                }
                prev = v;
            }
            Err(Error::Convergence(format!("{}: v_c(t) still moving at t = {t}", g.label())))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::{PowerLogRate, ShiftedLogRate};

    #[test]
    fn v_infinity_examples() {
        let g = PowerLogRate::new(1.0, 1.0, vec![3.0]);
        let v = v_infinity(&g, 0.5, 1e-6).unwrap();
        assert!((v - std::f64::consts::E).abs() < 1e-6 * std::f64::consts::E);
        let sq = |u: f64| -u * u;
        assert!((v_infinity(&sq, 1.0, 1e-8).unwrap() - 1.0).abs() < 1e-8);
        let lin = |u: f64| -u;
        assert!(matches!(v_infinity(&lin, 1.0, 1e-6), Err(Error::NotOsgood(_))));
    }

    #[test]
    fn dichotomy_examples() {
        let seq: Vec<f64> = (0..=6).map(|k| 10f64.powi(k)).collect();
        let sq = |u: f64| -u * u;
        match dichotomy(&sq, 1.0, &seq, 1e-5).unwrap() {
            DichotomyVerdict::Bounded(v) => assert!((v - 1.0).abs() < 1e-5),
            v => panic!("{v:?}"),
        }
        let lin = PowerLogRate::power(1.0);
        let r = dichotomy_ln(&lin, 1.0, &default_c_sequence_ln(), 1e-6).unwrap();
        assert_eq!(r.verdict, DichotomyVerdict::Unbounded);
        let g = ShiftedLogRate::new(1.0, 3.0);
        let r = dichotomy_ln(&g, 0.25, &default_c_sequence_ln(), 1e-6).unwrap();
        let vinf = v_infinity(&g, 0.25, 1e-8).unwrap();
        match r.verdict {
            DichotomyVerdict::Bounded(v) => assert!((v - vinf).abs() < 1e-4),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn longtime_examples() {
        let sq = |u: f64| -u * u;
        assert!(longtime_limit(&sq, 1e-5).unwrap().abs() < 1e-4);
        let cubic = |u: f64| -u * (u - 1.0) * (u - 2.0);
        assert!((longtime_limit(&cubic, 1e-5).unwrap() - 2.0).abs() < 1e-4);
        let lin = |u: f64| 1.0 - u;
        assert!(matches!(longtime_limit(&lin, 1e-5), Err(Error::NotOsgood(_))));
        let r = longtime_limit_with_fallback(&lin, 1e-5).unwrap();
        assert!(r.fallback && (r.limit - 1.0).abs() < 1e-4);
    }
}
