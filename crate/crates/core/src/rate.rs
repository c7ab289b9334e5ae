//! Scalar autonomous rates `G(u)` driving the comparison ODE `v' = G(v)` and
//! the improper tail integral of `1 / (-G)`.
//!
//! A rate may expose a log-space evaluation `G(u) / u` as a function of
//! `ln u`, which lets the tail quadrature and the log-variable IVP reach
//! magnitudes far past `f64::MAX`.

use crate::nonlinearity::iter_exp;

pub trait Rate: Sync {
    fn eval(&self, u: f64) -> f64;

    /// `G(u) / u` at `u = exp(ln_u)`. NaN when not representable.
    fn per_unit_ln(&self, ln_u: f64) -> f64 {
        let u = ln_u.exp();
        if u.is_finite() && u > 0.0 {
            self.eval(u) / u
        } else {
            f64::NAN
        }
    }

    /// Left end of the natural domain; the rate is only queried at or above it.
    fn domain_min(&self) -> f64 {
        0.0
    }

    fn label(&self) -> String {
        "G".to_string()
    }
}

impl<F: Fn(f64) -> f64 + Sync> Rate for F {
    fn eval(&self, u: f64) -> f64 {
        self(u)
    }
}

/// `G(u) = -coef * u^u_pow * prod_i (log^(i) u)^{log_pows[i-1]}`.
///
/// Below the point where the deepest iterated log vanishes the rate is
/// extended by zero, so that point is the largest root.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLogRate {
    pub coef: f64,
    pub u_pow: f64,
    pub log_pows: Vec<f64>,
}

impl PowerLogRate {
    pub fn new(coef: f64, u_pow: f64, log_pows: Vec<f64>) -> Self {
        let mut log_pows = log_pows;
        while log_pows.last() == Some(&0.0) {
            log_pows.pop();
        }
        Self { coef, u_pow, log_pows }
    }

    /// `-u^p`
    pub fn power(p: f64) -> Self {
        Self::new(1.0, p, vec![])
    }

    /// `-u (prod_{i<=m} log^(i) u)^2 (log^(m+1) u)^(2+eps)`
    pub fn growth_model(m: usize, eps: f64) -> Self {
        let mut pows = vec![2.0; m];
        pows.push(2.0 + eps);
        Self::new(1.0, 1.0, pows)
    }

    /// `-u prod_{i<=m} log^(i) u`, the borderline divergent family.
    pub fn log_product(m: usize) -> Self {
        Self::new(1.0, 1.0, vec![1.0; m])
    }

    /// `ln(-G(u)/u)` given `ln u`; `None` on the zero extension.
    fn ln_neg_per_unit(&self, ln_u: f64) -> Option<f64> {
        let mut acc = self.coef.ln();
        if self.u_pow != 1.0 {
            acc += (self.u_pow - 1.0) * ln_u;
        }
        let mut lg = ln_u;
        for (i, &p) in self.log_pows.iter().enumerate() {
            if i > 0 {
                lg = lg.ln();
            }
            if !(lg > 0.0) {
                return None;
            }
            if p != 0.0 {
                acc += p * lg.ln();
            }
        }
        Some(acc)
    }
}

impl Rate for PowerLogRate {
    fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 || u <= self.domain_min() {
            return 0.0;
        }
        match self.ln_neg_per_unit(u.ln()) {
            Some(l) => -u * l.exp(),
            None => 0.0,
        }
    }

    fn per_unit_ln(&self, ln_u: f64) -> f64 {
        match self.ln_neg_per_unit(ln_u) {
            Some(l) => -l.exp(),
            None => 0.0,
        }
    }

    fn domain_min(&self) -> f64 {
        if self.log_pows.is_empty() {
            0.0
        } else {
            iter_exp(self.log_pows.len(), 0.0).unwrap_or(f64::INFINITY)
        }
    }

    fn label(&self) -> String {
        let mut s = format!("-{}*u^{}", self.coef, self.u_pow);
        for (i, p) in self.log_pows.iter().enumerate() {
            s.push_str(&format!("*(log^({}) u)^{}", i + 1, p));
        }
        s
    }
}

/// `ln(e + u)` given `ln u`, accurate for all magnitudes.
pub fn ln_e_plus_exp(ln_u: f64) -> f64 {
    if ln_u > 1.0 {
        ln_u + (1.0 - ln_u).exp().ln_1p()
    } else {
        1.0 + (ln_u - 1.0).exp().ln_1p()
    }
}

/// `G(u) = -coef * u * (ln(e + u))^pow`, defined and Lipschitz on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedLogRate {
    pub coef: f64,
    pub pow: f64,
}

impl ShiftedLogRate {
    pub fn new(coef: f64, pow: f64) -> Self {
        Self { coef, pow }
    }
}

impl Rate for ShiftedLogRate {
    fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        -self.coef * u * (std::f64::consts::E + u).ln().powf(self.pow)
    }

    fn per_unit_ln(&self, ln_u: f64) -> f64 {
        -self.coef * ln_e_plus_exp(ln_u).powf(self.pow)
    }

    fn label(&self) -> String {
        format!("-{}*u*ln(e+u)^{}", self.coef, self.pow)
    }
}

/// `G(u) / u` sampled on a uniform grid in `ln u` and interpolated linearly;
/// below the grid `G` is continued linearly, above it `-G / u` as a power of
/// `u` fitted to the last two nodes. For rates that are costly to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedRate {
    ln_lo: f64,
    step: f64,
    per_unit: Vec<f64>,
    label: String,
}

impl TabulatedRate {
    pub fn new<G: Rate + ?Sized>(g: &G, u_lo: f64, u_hi: f64, nodes: usize) -> Self {
        use rayon::prelude::*;
        let nodes = nodes.max(2);
        let (ln_lo, ln_hi) = (u_lo.ln(), u_hi.ln());
        let step = (ln_hi - ln_lo) / (nodes - 1) as f64;
        let per_unit = (0..nodes).into_par_iter().map(|i| g.per_unit_ln(ln_lo + step * i as f64)).collect();
        Self { ln_lo, step, per_unit, label: format!("tabulated({})", g.label()) }
    }
}

impl Rate for TabulatedRate {
    fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        u * self.per_unit_ln(u.ln())
    }

    fn per_unit_ln(&self, ln_u: f64) -> f64 {
        let n = self.per_unit.len();
        let s = (ln_u - self.ln_lo) / self.step;
        if s <= 0.0 {
            return self.per_unit[0];
        }
        if s >= (n - 1) as f64 {
            let (a, b) = (self.per_unit[n - 2], self.per_unit[n - 1]);
            if a < 0.0 && b < 0.0 {
                let slope = ((-b).ln() - (-a).ln()) / self.step;
                return -((-b).ln() + slope * (ln_u - self.ln_lo - self.step * (n - 1) as f64)).exp();
            }
            return b;
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        (1.0 - w) * self.per_unit[i] + w * self.per_unit[i + 1]
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}
