//! Explicit super-solutions on balls `|x| < R`, their closed-form derivative
//! calculus, grid residual certificates and the search for the time-growth
//! constant `K`; closed-form stationary solutions and the annulus barrier.
//!
//! All constructions are radial and specialized to one space dimension, so
//! `sum a_ij x_i x_j = a(x) x^2` and `sum x_i b_i = x b(x)`.

mod annulus;
mod report;
mod search;
mod stationary;
mod thm1;
mod thm3;

use serde::{Deserialize, Serialize};

pub use annulus::{annulus_barrier_q, q_model, subadditivity_gap};
pub use report::{GridSpec, ResidualPoint, ResidualReport, Thm3Diagnostics};
pub use search::{find_k, KRange};
pub use stationary::{residual_stationary, StationaryWitness, Witness};
pub use thm1::{dominance_threshold, dominance_threshold_ln, origin_k_threshold, thm1_origin_majorant, Thm1Problem};
pub use thm3::{split_constants, SplitConstants, Thm3Problem};

use crate::error::{Error, Result};
use crate::nonlinearity::ln_iter_exp;
use crate::pde_lab::Operator1D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// `phi = exp^(m+1)((R^2 - x^2)^(-l))`, `M = exp(K(t+1)) phi + v_inf(t)`.
    Thm1Barrier,
    /// `phi = exp^(m+1)(((1 + x^2) / (R^2 - x^2))^l)`, `psi = (phi - 1) exp(K(t+1))`.
    Thm3Barrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    #[serde(rename = "R")]
    pub r: f64,
    pub l: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub m: usize,
    pub family: Family,
}

impl BarrierParams {
    pub fn thm1(r: f64, l: f64, k: f64, m: usize) -> Self {
        Self { r, l, k, m, family: Family::Thm1Barrier }
    }

    pub fn thm3(r: f64, l: f64, k: f64, m: usize) -> Self {
        Self { r, l, k, m, family: Family::Thm3Barrier }
    }

    pub fn with_k(self, k: f64) -> Self {
        Self { k, ..self }
    }

    pub fn with_r(self, r: f64) -> Self {
        Self { r, ..self }
    }

    /// `l eps > 2`, a positive radius (`R > 1` for the second family) and
    /// `K >= 0`.
    pub fn validate(&self, eps: f64) -> Result<()> {
        if !(self.l > 0.0) || !(self.l * eps > 2.0) {
            return Err(Error::Invalid(format!("need l * eps > 2, got l = {}, eps = {eps}", self.l)));
        }
        let r_min = match self.family {
            Family::Thm1Barrier => 0.0,
            Family::Thm3Barrier => 1.0,
        };
        if !(self.r > r_min) || !self.r.is_finite() {
            return Err(Error::Invalid(format!("radius R = {} must be finite and > {r_min}", self.r)));
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::Invalid(format!("K = {} must be finite and >= 0", self.k)));
        }
        Ok(())
    }

    fn check_inside(&self, x: f64) -> Result<f64> {
        let s = self.r * self.r - x * x;
        if !(s > 0.0) {
            return Err(Error::Domain(format!("|x| = {} is not inside the ball of radius {}", x.abs(), self.r)));
        }
        Ok(s)
    }

    /// Innermost argument `z(x)` of the exponential tower.
    pub fn inner(&self, x: f64) -> Result<f64> {
        let s = self.check_inside(x)?;
        Ok(match self.family {
            Family::Thm1Barrier => s.powf(-self.l),
            Family::Thm3Barrier => ((1.0 + x * x) / s).powf(self.l),
        })
    }

    /// `z'(x)` and `z''(x)`.
    fn inner_derivatives(&self, x: f64) -> Result<(f64, f64)> {
        let s = self.check_inside(x)?;
        let l = self.l;
        Ok(match self.family {
            Family::Thm1Barrier => {
                let d1 = 2.0 * l * x * s.powf(-l - 1.0);
                let d2 = 2.0 * l * s.powf(-l - 1.0) + 4.0 * l * (l + 1.0) * x * x * s.powf(-l - 2.0);
                (d1, d2)
            }
            Family::Thm3Barrier => {
                let r2p = self.r * self.r + 1.0;
                let w = 1.0 + x * x;
                let d1 = 2.0 * l * r2p * x * w.powf(l - 1.0) * s.powf(-l - 1.0);
                let [_, w2, w3, w4] = self.thm3_second_parts(x, s);
                (d1, w2 + w3 + w4)
            }
        })
    }

    /// Pieces of `z''` for the second family: `[_, W2, W3, W4] / a`.
    fn thm3_second_parts(&self, x: f64, s: f64) -> [f64; 4] {
        let l = self.l;
        let r2p = self.r * self.r + 1.0;
        let w = 1.0 + x * x;
        let x2 = x * x;
        let w2 = 4.0 * l * (l - 1.0) * w.powf(l - 2.0) * s.powf(-l - 2.0) * r2p * r2p * x2;
        let w3 = 8.0 * l * w.powf(l - 1.0) * s.powf(-l - 2.0) * r2p * x2;
        let w4 = 2.0 * l * w.powf(l - 1.0) * s.powf(-l - 1.0) * r2p;
        [0.0, w2, w3, w4]
    }
}

/// `phi_R(x)`. Overflow is an error; see [`ln_phi`].
pub fn eval_phi(p: &BarrierParams, x: f64) -> Result<f64> {
    let lp = ln_phi(p, x)?;
    let v = lp.exp();
    if !v.is_finite() {
        return Err(Error::Overflow(format!("phi({x}) = exp({lp:e}) exceeds f64 range")));
    }
    Ok(v)
}

/// `log phi_R(x) = exp^(m)(z(x))`.
pub fn ln_phi(p: &BarrierParams, x: f64) -> Result<f64> {
    let z = p.inner(x)?;
    ln_iter_exp(p.m + 1, z)
}

/// `log(phi_R(x) - 1)`, accurate when `phi` is close to 1.
pub fn ln_phi_minus_one(p: &BarrierParams, x: f64) -> Result<f64> {
    let lp = ln_phi(p, x)?;
    Ok(lp + (-(-lp).exp_m1()).ln())
}

/// `psi_R(x, t) = (phi_R(x) - 1) exp(K(t+1))`.
pub fn eval_psi(p: &BarrierParams, x: f64, t: f64) -> Result<f64> {
    let v = (ln_phi_minus_one(p, x)? + p.k * (t + 1.0)).exp();
    if !v.is_finite() {
        return Err(Error::Overflow(format!("psi({x}, {t}) exceeds f64 range")));
    }
    Ok(v)
}

/// Closed-form decomposition of `L phi / phi` at `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierDerivatives {
    pub family: Family,
    /// `L phi / phi`.
    pub ratio: f64,
    /// First family: `[a(x) (phi''/phi), b(x) (phi'/phi)]`.
    /// Second family: `[W1, W2, W3, W4, W5]` with `L psi = exp(K(t+1)) phi sum W`.
    pub terms: Vec<f64>,
    /// Time derivative divided by the time-dependent barrier part; equals `K`.
    pub dt_rate: f64,
}

/// `L phi / phi` and its pieces for `L = a d^2/dx^2 + b d/dx`.
///
/// With `phi = exp^(m+1)(z)`, `P = prod_{j=1}^m exp^(j)(z)` and `S = P_z / P`:
/// `phi'/phi = P z'` and `phi''/phi = P (P + S) z'^2 + P z''`. For the second
/// family the `z'^2` part is `W1` and the pieces of `z''` are `W2..W4`.
pub fn barrier_derivatives(p: &BarrierParams, op: &Operator1D, x: f64) -> Result<BarrierDerivatives> {
    let s = p.check_inside(x)?;
    let z = p.inner(x)?;
    let (d1, d2) = p.inner_derivatives(x)?;
    // P and S = dP/dz / P along the tower
    let mut pp = 1.0;
    let mut sum = 0.0;
    let mut prefix = 1.0;
    let mut e = z;
    for _ in 0..p.m {
        sum += prefix;
        e = e.exp();
        pp *= e;
        prefix *= e;
    }
    if !pp.is_finite() || !sum.is_finite() {
        return Err(Error::Overflow(format!("tower product at x = {x} exceeds f64 range")));
    }
    let a = op.a(x);
    let b = op.b(x);
    let grad = pp * d1;
    let lap = pp * (pp + sum) * d1 * d1 + pp * d2;
    let (ratio, terms) = match p.family {
        Family::Thm1Barrier => {
            let diff = a * lap;
            let drift = b * grad;
            (diff + drift, vec![diff, drift])
        }
        Family::Thm3Barrier => {
            let [_, w2, w3, w4] = p.thm3_second_parts(x, s);
            let w = vec![
                a * pp * (pp + sum) * d1 * d1,
                a * pp * w2,
                a * pp * w3,
                a * pp * w4,
                b * grad,
            ];
            (w.iter().sum(), w)
        }
    };
    if !ratio.is_finite() {
        return Err(Error::Overflow(format!("L phi / phi at x = {x} exceeds f64 range")));
    }
    Ok(BarrierDerivatives { family: p.family, ratio, terms, dt_rate: p.k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Coefficient;

    #[test]
    fn phi_values() {
        let p = BarrierParams::thm1(1.0, 3.0, 0.0, 0);
        assert!((eval_phi(&p, 0.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        let want = (64.0f64 / 27.0).exp();
        assert!((eval_phi(&p, 0.5).unwrap() - want).abs() < 1e-12 * want);
        assert!((want - 10.701355).abs() < 1e-6);
        let q = BarrierParams::thm3(2.0, 1.0, 0.0, 0);
        assert!((eval_phi(&q, 0.0).unwrap() - 0.25f64.exp()).abs() < 1e-15);
        assert!((eval_phi(&q, 0.0).unwrap() - 1.2840254).abs() < 1e-7);
        assert!(matches!(eval_phi(&p, 1.0), Err(Error::Domain(_))));
        assert!(matches!(ln_phi(&q, -2.5), Err(Error::Domain(_))));
    }

    #[test]
    fn log_space_beyond_range() {
        let p = BarrierParams::thm1(1.0, 3.0, 0.0, 0);
        let lp = ln_phi(&p, 0.999).unwrap();
        assert!(lp > 1e7 && lp.is_finite());
        assert!(matches!(eval_phi(&p, 0.999), Err(Error::Overflow(_))));
    }

    #[test]
    fn origin_values() {
        let p = BarrierParams::thm1(1.0, 3.0, 0.0, 0);
        let d = barrier_derivatives(&p, &Operator1D::laplacian(), 0.0).unwrap();
        assert!((d.ratio - 6.0).abs() < 1e-12);
        let q = BarrierParams::thm3(2.0, 3.0, 1.0, 0);
        let d = barrier_derivatives(&q, &Operator1D::laplacian(), 0.0).unwrap();
        for i in [0, 1, 2, 4] {
            assert_eq!(d.terms[i], 0.0);
        }
        // 2 l (1)^(l-1) R^(-2(l+1)) (R^2 + 1)
        assert!((d.terms[3] - 2.0 * 3.0 * 2f64.powi(-8) * 5.0).abs() < 1e-15);
        assert_eq!(d.dt_rate, 1.0);
    }

    fn fd_ratio(p: &BarrierParams, op: &Operator1D, x: f64) -> f64 {
        // derivatives of log phi avoid cancellation in phi itself
        let h = 1e-4;
        let f = |y: f64| ln_phi(p, y).unwrap();
        let (fm, f0, fp) = (f(x - h), f(x), f(x + h));
        let (fm2, fp2) = (f(x - 2.0 * h), f(x + 2.0 * h));
        let g1 = (fm2 - 8.0 * fm + 8.0 * fp - fp2) / (12.0 * h);
        let g2 = (-fm2 + 16.0 * fm - 30.0 * f0 + 16.0 * fp - fp2) / (12.0 * h * h);
        op.a(x) * (g2 + g1 * g1) + op.b(x) * g1
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let ops = [
            Operator1D::laplacian(),
            Operator1D::new(Coefficient::Quadratic { c0: 1.0, c2: 0.5 }, Coefficient::Sin { amp: 2.0 }),
        ];
        let params = [
            BarrierParams::thm1(1.0, 3.0, 0.0, 0),
            BarrierParams::thm1(1.5, 2.0, 0.0, 1),
            BarrierParams::thm3(2.0, 3.0, 0.0, 0),
            BarrierParams::thm3(3.0, 2.5, 0.0, 1),
        ];
        for op in &ops {
            for p in &params {
                for &x in &[-0.6, -0.2, 0.1, 0.35, 0.7] {
                    let d = barrier_derivatives(p, op, x).unwrap();
                    let fd = fd_ratio(p, op, x);
                    assert!((d.ratio - fd).abs() <= 1e-5 * fd.abs().max(1.0), "{p:?} x={x}: {} vs {fd}", d.ratio);
                    let sum: f64 = d.terms.iter().sum();
                    assert!((sum - d.ratio).abs() <= 1e-12 * d.ratio.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn thm3_terms_individually() {
        let p = BarrierParams::thm3(2.0, 3.0, 0.0, 0);
        let h = 1e-4;
        let f = |y: f64| ln_phi(&p, y).unwrap();
        let drift = Operator1D::new(1.0, 1.0);
        for &x in &[-1.2, 0.3, 1.5] {
            let g1 = (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
            let g2 = (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h);
            let d = barrier_derivatives(&p, &drift, x).unwrap();
            assert!((d.terms[0] - g1 * g1).abs() < 1e-5 * (g1 * g1).max(1.0));
            assert!((d.terms[1] + d.terms[2] + d.terms[3] - g2).abs() < 1e-5 * g2.abs().max(1.0));
            assert!((d.terms[4] - g1).abs() < 1e-5 * g1.abs().max(1.0));
        }
    }

    #[test]
    fn blow_up_at_rim_and_zero_trace() {
        for p in [BarrierParams::thm1(1.0, 3.0, 1.0, 0), BarrierParams::thm3(2.0, 3.0, 1.0, 0)] {
            let mut prev = f64::NEG_INFINITY;
            for k in 0..40 {
                let x = p.r * (1.0 - 0.5f64.powi(k));
                let lp = ln_phi(&p, x).unwrap();
                assert!(lp > prev);
                prev = lp;
            }
            assert!(prev > 1e10);
        }
        let q = BarrierParams::thm3(2.0, 3.0, 1.0, 0);
        for &x in &[0.0, 0.5, 1.5] {
            assert!(eval_psi(&q, x, 0.0).unwrap() > 0.0);
        }
    }

    #[test]
    fn validation() {
        assert!(BarrierParams::thm1(1.0, 3.0, 1.0, 0).validate(1.0).is_ok());
        assert!(BarrierParams::thm1(1.0, 2.0, 1.0, 0).validate(1.0).is_err());
        assert!(BarrierParams::thm3(1.0, 3.0, 1.0, 0).validate(1.0).is_err());
    }
}
