//! Closed-form stationary solutions `L W + f(x, W) = 0`.

use serde::Serialize;

use crate::coeff::Coefficient;
use crate::error::{Error, Result};
use crate::nonlinearity::ReactionTerm;
use crate::pde_lab::Operator1D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Witness {
    /// `W = exp^(level+1)(x + shift)`, `L = d^2/dx^2`.
    Ex1DoubleExp { level: usize, shift: f64 },
    /// `W = 1 + x^2`, `L = (1 + x^2)^(1+eps) d^2/dx^2`, `f = -2 u^(1+eps)`.
    Ex2Quadratic { eps: f64 },
    /// `W = x^2`, `L = d^2/dx^2 + (1 + x^2)^(1/2+eps) sgn(x) d/dx`,
    /// `f = -2 - 2 (1 + u)^(1/2+eps) u^(1/2)`.
    Ex3Drifted { eps: f64 },
}

#[derive(Debug, Clone)]
pub struct StationaryWitness {
    pub which: Witness,
    pub operator: Operator1D,
    pub term: ReactionTerm,
    /// Half-width of the collar around `x = 0` left out of residual grids.
    pub exclude_radius: f64,
}

/// `ln(sum exp(v))`.
fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `f(u) / u` from `ln u` for the tower witness of the given level:
/// `f = -P(u) P'(u)` with `P(u) = prod_{i=0}^{level} log^(i) u`.
fn tower_per_unit_ln(level: usize, ln_u: f64) -> f64 {
    // lg[i] = ln(log^(i) u)
    let mut lg = Vec::with_capacity(level + 1);
    lg.push(ln_u);
    for i in 1..=level {
        let prev = lg[i - 1];
        if !(prev > 0.0) {
            return f64::NAN;
        }
        lg.push(prev.ln());
    }
    let ln_p: f64 = lg.iter().sum();
    let mut acc = 0.0;
    let parts: Vec<f64> = lg
        .iter()
        .map(|v| {
            acc += v;
            -acc
        })
        .collect();
    -(2.0 * ln_p + log_sum_exp(&parts) - ln_u).exp()
}

impl StationaryWitness {
    pub fn new(which: Witness) -> Result<Self> {
        let (operator, term, exclude_radius) = match which {
            Witness::Ex1DoubleExp { level, .. } => {
                let term = ReactionTerm::custom(format!("tower{level}"), true, move |_, u| {
                    if u > 0.0 {
                        u * tower_per_unit_ln(level, u.ln())
                    } else {
                        f64::NAN
                    }
                })
                .with_per_unit_ln(move |_, ln_u| tower_per_unit_ln(level, ln_u));
                (Operator1D::laplacian(), term, 0.0)
            }
            Witness::Ex2Quadratic { eps } => {
                check_eps(eps)?;
                let op = Operator1D::new(Coefficient::OnePlusSqPow { scale: 1.0, power: 1.0 + eps }, 0.0);
                (op, ReactionTerm::power("ex2", 0.0, 2.0, 1.0 + eps)?, 0.0)
            }
            Witness::Ex3Drifted { eps } => {
                check_eps(eps)?;
                let op = Operator1D::new(1.0, Coefficient::SignedOnePlusSqPow { scale: 1.0, power: 0.5 + eps });
                let term = ReactionTerm::custom("ex3", true, move |_, u| -2.0 - 2.0 * (1.0 + u).powf(0.5 + eps) * u.max(0.0).sqrt());
                (op, term, 1e-6)
            }
        };
        Ok(Self { which, operator, term, exclude_radius })
    }

    /// Term used for time evolution. Ex3's term is neither Lipschitz nor zero
    /// at `u = 0`; it is replaced by
    /// `-2u/(|u|+delta) - 2(1+|u|)^(1/2+eps) u/sqrt(|u|+delta)`, which lies
    /// above it for `u >= 0`, so `W` stays a subsolution.
    pub fn evolution_term(&self, delta: f64) -> ReactionTerm {
        match self.which {
            Witness::Ex3Drifted { eps } => ReactionTerm::custom(format!("ex3_delta{delta:e}"), true, move |_, u| {
                let au = u.abs();
                -2.0 * u / (au + delta) - 2.0 * (1.0 + au).powf(0.5 + eps) * u / (au + delta).sqrt()
            }),
            _ => self.term.clone(),
        }
    }

    pub fn with_exclusion(mut self, radius: f64) -> Self {
        self.exclude_radius = radius;
        self
    }

    /// `ln W(x)`.
    pub fn ln_w(&self, x: f64) -> Result<f64> {
        match self.which {
            Witness::Ex1DoubleExp { level, shift } => {
                let e = tower(level, x + shift)?;
                Ok(e[level])
            }
            Witness::Ex2Quadratic { .. } => Ok((1.0 + x * x).ln()),
            Witness::Ex3Drifted { .. } => Ok((x * x).ln()),
        }
    }

    pub fn w(&self, x: f64) -> Result<f64> {
        let v = self.ln_w(x)?.exp();
        if !v.is_finite() {
            return Err(Error::Overflow(format!("W({x}) exceeds f64 range")));
        }
        Ok(v)
    }

    /// `|L W + f(x, W)| / max(1, |L W|)` at `x`.
    pub fn relative_residual(&self, x: f64) -> Result<f64> {
        match self.which {
            Witness::Ex1DoubleExp { level, shift } => {
                let e = tower(level, x + shift)?;
                // ln W' = sum_{j<=level} E_j, W'' = W' sum_{j=1}^{level+1} prod_{i<j} E_i
                let ln_w1: f64 = e.iter().sum();
                let mut acc = 0.0;
                let mut parts = vec![0.0];
                for ej in e.iter().take(level) {
                    acc += ej;
                    parts.push(acc);
                }
                let ln_lw = self.operator.a(x).ln() + ln_w1 + log_sum_exp(&parts);
                let ln_u = e[level];
                let ln_neg_f = (-self.term.per_unit_ln(x, ln_u)).ln() + ln_u;
                let d = ln_neg_f - ln_lw;
                if !d.is_finite() {
                    return Err(Error::Overflow(format!("witness residual not representable at x = {x}")));
                }
                Ok(d.exp_m1().abs() * ln_lw.exp().min(1.0))
            }
            Witness::Ex2Quadratic { .. } | Witness::Ex3Drifted { .. } => {
                let (w, w1, w2) = (x * x + self.offset(), 2.0 * x, 2.0);
                let lw = self.operator.a(x) * w2 + self.operator.b(x) * w1;
                let f = self.term.eval(x, w);
                Ok((lw + f).abs() / lw.abs().max(1.0))
            }
        }
    }

    fn offset(&self) -> f64 {
        match self.which {
            Witness::Ex2Quadratic { .. } => 1.0,
            _ => 0.0,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("eps = {eps} must be positive")))
    }
}

/// `[E_0, ..., E_level]` with `E_0 = y`, `E_j = exp(E_{j-1})`.
fn tower(level: usize, y: f64) -> Result<Vec<f64>> {
    let mut e = vec![y];
    for j in 1..=level {
        let v = e[j - 1].exp();
        if !v.is_finite() {
            return Err(Error::Overflow(format!("exp^({j})({y}) exceeds f64 range")));
        }
        e.push(v);
    }
    Ok(e)
}

/// Maximum relative residual over the grid, skipping `|x| < exclude_radius`.
pub fn residual_stationary(w: &StationaryWitness, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut used = 0;
    for &x in grid {
        if x.abs() < w.exclude_radius {
            continue;
        }
        worst = worst.max(w.relative_residual(x)?);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Invalid("residual grid is empty after the exclusion collar".into()));
    }
    Ok(worst)
}
