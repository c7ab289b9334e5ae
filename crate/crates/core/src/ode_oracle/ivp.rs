//! Dormand-Prince 5(4) for scalar autonomous equations with Hermite dense output.

use crate::error::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, Default)]
pub struct IvpStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(y)` from `(t0, y0)` and samples at the increasing
/// `outputs` (all `>= t0`). `scale(y)` is the per-step error allowance;
/// `guard(y)` returns an error message when `y` leaves the admissible range.
pub fn dp45<F, S, B>(f: F, t0: f64, y0: f64, outputs: &[f64], scale: S, guard: B) -> Result<(Vec<f64>, IvpStats)>
where
    F: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
    B: Fn(f64) -> Option<String>,
{
    let mut out = Vec::with_capacity(outputs.len());
    let mut stats = IvpStats::default();
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs.first().is_some_and(|&t| t < t0) {
        return Err(Error::Invalid("output times must be increasing and >= t0".into()));
    }
    let t_end = match outputs.last() {
        Some(&t) => t,
        None => return Ok((out, stats)),
    };
    let mut t = t0;
    let mut y = y0;
    let mut fy = f(y);
    if !fy.is_finite() {
        return Err(Error::Domain(format!("rate not finite at the initial value {y0}")));
    }
    let mut next = 0;
    while next < outputs.len() && outputs[next] <= t {
        out.push(y);
        next += 1;
    }
    if fy == 0.0 {
        // equilibrium of an autonomous scalar equation
        out.resize(outputs.len(), y);
        return Ok((out, stats));
    }
    let span = t_end - t0;
    let mut h = (0.01 * scale(y) / fy.abs()).min(span).max(span * 1e-300);
    while t < t_end {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(Error::Convergence(format!("step budget exhausted at t = {t}")));
        }
        h = h.min(t_end - t);
        if t + h == t {
            if t_end - t <= 4.0 * f64::EPSILON * t.abs() {
                break;
            }
            return Err(Error::BlowUp(format!("step size underflow at t = {t}, y = {y}")));
        }
        let mut k = [0.0; 7];
        k[0] = fy;
        let mut ok = true;
        for s in 1..7 {
            let mut ys = y;
            for j in 0..s {
                ys += h * A[s][j] * k[j];
            }
            k[s] = f(ys);
            if !k[s].is_finite() {
                ok = false;
                break;
            }
        }
        if !ok {
            stats.rejected += 1;
            h *= 0.2;
            if h < 1e-300 {
                return Err(Error::BlowUp(format!("rate not finite near t = {t}, y = {y}")));
            }
            continue;
        }
        let y1 = y + h * (0..6).map(|j| A[6][j] * k[j]).sum::<f64>();
        let err = (h * (0..7).map(|j| E[j] * k[j]).sum::<f64>()).abs();
        let sc = scale(y).max(scale(y1));
        let ratio = if y1.is_finite() { err / sc } else { f64::INFINITY };
        if ratio <= 1.0 {
            let t1 = t + h;
            let f1 = k[6];
            while next < outputs.len() && outputs[next] <= t1 {
                let th = (outputs[next] - t) / h;
                out.push(hermite(y, y1, fy, f1, h, th));
                next += 1;
            }
            t = t1;
            y = y1;
            fy = f1;
            stats.accepted += 1;
            if let Some(msg) = guard(y) {
                return Err(Error::BlowUp(format!("{msg} at t = {t}")));
            }
            if fy == 0.0 {
                out.resize(outputs.len(), y);
                return Ok((out, stats));
            }
        } else {
            stats.rejected += 1;
        }
        let fac = if ratio == 0.0 {
            5.0
        } else if ratio.is_nan() {
            0.2
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= fac;
    }
    while out.len() < outputs.len() {
        out.push(y);
    }
    Ok((out, stats))
}

fn hermite(y0: f64, y1: f64, f0: f64, f1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * f0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * f1
}
