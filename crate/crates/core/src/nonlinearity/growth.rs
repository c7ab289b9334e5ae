use serde::Serialize;

use super::envelope::Envelope;
use super::term::TermKind;
use super::iter_exp;
use crate::rate::Rate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    SatisfiesF2,
    FailsF2,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRecord {
    /// `ln u` of the probe; `u` itself may not be representable.
    pub ln_u: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSpec {
    pub m: usize,
    pub eps: f64,
    pub verdict: Verdict,
    pub probe_log: Vec<ProbeRecord>,
    /// Human-readable reason for the verdict.
    pub reason: String,
}

/// JSON record of a classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRecord {
    pub term_id: String,
    pub condition: String,
    pub m: usize,
    pub eps: f64,
    pub verdict: Verdict,
    pub probes: Vec<ProbeRecord>,
}

impl GrowthSpec {
    pub fn record(&self, term_id: &str) -> GrowthRecord {
        GrowthRecord {
            term_id: term_id.to_string(),
            condition: "F-2".to_string(),
            m: self.m,
            eps: self.eps,
            verdict: self.verdict,
            probes: self.probe_log.clone(),
        }
    }
}

/// `ln u` probes: `u = 10^k`, `k = 1..=12`; `extended` appends
/// `ln u = 10^j`, `j = 2..=12`, far beyond the floating range of `u`.
pub fn default_probes(extended: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=12).map(|k| k as f64 * std::f64::consts::LN_10).collect();
    if extended {
        v.extend((2..=12).map(|j| 10f64.powi(j)));
    }
    v
}

/// Super-model growth classification on `u` probes.
pub fn check_f2<E: Rate + ?Sized>(env: &E, m: usize, eps: f64, u_probes: &[f64]) -> GrowthSpec {
    let ln: Vec<f64> = u_probes.iter().map(|u| u.ln()).collect();
    check_f2_ln(env, m, eps, &ln)
}

/// Super-model growth classification on `ln u` probes.
///
/// The ratio `r = F(u) / (u (prod log^(i) u)^2 (log^(m+1) u)^(2+eps))` is
/// evaluated in log space. With `lam = log^(m+1) u` the local exponent
/// `P = d ln|r| / d ln lam` measures how fast `r` diverges on the natural scale:
/// a power of `lam` keeps `P` constant, convergence to a finite limit makes it
/// decay like `1 / lam`.
pub fn check_f2_ln<E: Rate + ?Sized>(env: &E, m: usize, eps: f64, ln_probes: &[f64]) -> GrowthSpec {
    let guard = iter_exp(m + 1, 0.0).map(f64::ln).unwrap_or(f64::INFINITY);
    let mut log = Vec::new();
    let mut lams = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for &ln_u in ln_probes {
        if !(ln_u > guard) || ln_u <= prev {
            continue;
        }
        prev = ln_u;
        // ln of the denominator over u, and the deepest log
        let mut ln_den = 0.0;
        let mut lg = ln_u;
        for i in 0..=m {
            if i > 0 {
                lg = lg.ln();
            }
            ln_den += if i < m { 2.0 } else { 2.0 + eps } * lg.ln();
        }
        let pu = env.per_unit_ln(ln_u);
        let ratio = if pu == 0.0 { 0.0 } else { pu.signum() * (pu.abs().ln() - ln_den).exp() };
        log.push(ProbeRecord { ln_u, ratio });
        lams.push(lg);
    }
    let out = |verdict, reason: &str, log: Vec<ProbeRecord>| GrowthSpec {
        m,
        eps,
        verdict,
        probe_log: log,
        reason: reason.to_string(),
    };
    if log.iter().any(|p| p.ratio.is_nan()) {
        return out(Verdict::Inconclusive, "ratio not representable at a probe", log);
    }
    if let Some(k) = log.iter().position(|p| p.ratio == f64::NEG_INFINITY) {
        // the envelope outran the floating range; already below any bound
        let ok = log[..k].iter().all(|p| p.ratio < 0.0);
        return if ok {
            out(Verdict::SatisfiesF2, "ratio reaches -inf", log)
        } else {
            out(Verdict::Inconclusive, "ratio changes sign before reaching -inf", log)
        };
    }
    if log.len() < 3 {
        return out(Verdict::Inconclusive, "fewer than 3 probes above the domain guard", log);
    }
    let r: Vec<f64> = log.iter().map(|p| p.ratio).collect();
    let n = r.len();
    if r[n - 1] >= 0.0 {
        return out(Verdict::FailsF2, "ratio is nonnegative on the tail", log);
    }
    if r[n - 3] < r[n - 2] && r[n - 2] < r[n - 1] {
        return out(Verdict::FailsF2, "ratio increases on the tail", log);
    }
    // longest negative strictly decreasing suffix; it must cover half the probes
    let mut s = n - 1;
    while s > 0 && r[s - 1] < 0.0 && r[s] < r[s - 1] {
        s -= 1;
    }
    if n - s < (n / 2).max(3) {
        return out(Verdict::Inconclusive, "ratio neither monotone decreasing nor increasing on the tail", log);
    }
    let (r, lams) = (&r[s..], &lams[s..]);
    let n = r.len();
    let p: Vec<f64> = (0..n - 1)
        .map(|k| ((-r[k + 1]).ln() - (-r[k]).ln()) / (lams[k + 1].ln() - lams[k].ln()))
        .collect();
    let (p_first, p_last) = (p[0], p[p.len() - 1]);
    if p_last >= 0.25 * p_first {
        out(Verdict::SatisfiesF2, "ratio decreases with persistent exponent", log)
    } else {
        out(Verdict::FailsF2, "ratio decreases toward a finite limit", log)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum F1Verdict {
    /// `sup_{u>0} F_R(u)` observed on the probes, with a decreasing tail.
    Satisfies { sup: f64 },
    Fails,
    /// Custom terms: bounded on the probes, but no structural certificate.
    Inconclusive { probe_sup: f64 },
}

/// Boundedness check `sup_{u>0} F_R(u) < inf`, probed on `u = 10^k`, `k = -6..=12`.
pub fn check_f1(env: &Envelope) -> F1Verdict {
    let vals: Vec<f64> = (-24..=48).map(|k| env.eval(10f64.powf(k as f64 / 4.0))).collect();
    let sup = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n = vals.len();
    let tail_up = vals[n - 1] > vals[n - 2] && vals[n - 2] > vals[n - 3];
    if !sup.is_finite() || tail_up {
        return F1Verdict::Fails;
    }
    match env.source.kind {
        TermKind::Custom { .. } => F1Verdict::Inconclusive { probe_sup: sup },
        _ => F1Verdict::Satisfies { sup },
    }
}
