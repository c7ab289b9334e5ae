use serde::Serialize;

use crate::coeff::Coefficient;
use crate::error::{Error, Result};

/// `L = a(x) d^2/dx^2 + b(x) d/dx` in one space dimension.
#[derive(Debug, Clone)]
pub struct Operator1D {
    pub a: Coefficient,
    pub b: Coefficient,
    /// Claimed `(C_a, C_b)` with `a <= C_a (1 + x^2)` and `|b| <= C_b (1 + |x|)`.
    pub growth_cert: Option<(f64, f64)>,
}

/// Probe maxima of `a / (1 + x^2)` and `|b| / (1 + |x|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthProbe {
    pub c_a: f64,
    pub c_b: f64,
    pub x_max: f64,
}

impl Operator1D {
    pub fn new(a: impl Into<Coefficient>, b: impl Into<Coefficient>) -> Self {
        Self { a: a.into(), b: b.into(), growth_cert: None }
    }

    /// `d^2/dx^2`
    pub fn laplacian() -> Self {
        Self::new(1.0, 0.0)
    }

    pub fn with_growth_cert(mut self, c_a: f64, c_b: f64) -> Self {
        self.growth_cert = Some((c_a, c_b));
        self
    }

    #[inline]
    pub fn a(&self, x: f64) -> f64 {
        self.a.eval(x)
    }

    #[inline]
    pub fn b(&self, x: f64) -> f64 {
        self.b.eval(x)
    }

    pub fn describe(&self) -> String {
        format!("a={}, b={}", self.a.describe(), self.b.describe())
    }

    /// `a > 0` and both coefficients finite on the probes.
    pub fn check_nondegenerate(&self, x_probes: &[f64]) -> Result<()> {
        for &x in x_probes {
            let (a, b) = (self.a(x), self.b(x));
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::Invalid(format!("diffusion a({x}) = {a} is not positive")));
            }
            if !b.is_finite() {
                return Err(Error::Invalid(format!("drift b({x}) = {b} is not finite")));
            }
        }
        if let Some((c_a, c_b)) = self.growth_cert {
            self.check_growth(x_probes, c_a, c_b)?;
        }
        Ok(())
    }

    pub fn growth_probe(&self, x_probes: &[f64]) -> GrowthProbe {
        let mut p = GrowthProbe { c_a: 0.0, c_b: 0.0, x_max: 0.0 };
        for &x in x_probes {
            p.c_a = p.c_a.max(self.a(x) / (1.0 + x * x));
            p.c_b = p.c_b.max(self.b(x).abs() / (1.0 + x.abs()));
            p.x_max = p.x_max.max(x.abs());
        }
        p
    }

    fn check_growth(&self, x_probes: &[f64], c_a: f64, c_b: f64) -> Result<()> {
        for &x in x_probes {
            let a = self.a(x);
            let b = self.b(x);
            if a > c_a * (1.0 + x * x) * (1.0 + 1e-12) {
                return Err(Error::ConditionL1(format!("a({x}) = {a} exceeds {c_a} (1 + x^2)")));
            }
            if b.abs() > c_b * (1.0 + x.abs()) * (1.0 + 1e-12) {
                return Err(Error::ConditionL1(format!("|b({x})| = {} exceeds {c_b} (1 + |x|)", b.abs())));
            }
        }
        Ok(())
    }

    /// Growth condition on symmetric probes out to `x_max`: the ratio maxima
    /// must not keep growing between the last two doublings of the radius.
    /// Uses the certificate constants when present.
    pub fn check_l1(&self, x_max: f64) -> Result<GrowthProbe> {
        let probes = |r: f64| -> Vec<f64> { (0..=400).map(|i| -r + 2.0 * r * i as f64 / 400.0).collect() };
        if let Some((c_a, c_b)) = self.growth_cert {
            self.check_growth(&probes(x_max), c_a, c_b)?;
            return Ok(self.growth_probe(&probes(x_max)));
        }
        let p1 = self.growth_probe(&probes(x_max));
        let p2 = self.growth_probe(&probes(2.0 * x_max));
        let p3 = self.growth_probe(&probes(4.0 * x_max));
        let grows = |a: f64, b: f64, c: f64| c > b * (1.0 + 1e-6) && b > a * (1.0 + 1e-6) && c - b >= 0.5 * (b - a);
        if grows(p1.c_a, p2.c_a, p3.c_a) {
            return Err(Error::ConditionL1(format!(
                "a(x) / (1 + x^2) keeps growing: {:.4e}, {:.4e}, {:.4e}",
                p1.c_a, p2.c_a, p3.c_a
            )));
        }
        if grows(p1.c_b, p2.c_b, p3.c_b) {
            return Err(Error::ConditionL1(format!(
                "|b(x)| / (1 + |x|) keeps growing: {:.4e}, {:.4e}, {:.4e}",
                p1.c_b, p2.c_b, p3.c_b
            )));
        }
        Ok(p3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_condition() {
        assert!(Operator1D::laplacian().check_l1(10.0).is_ok());
        let fast = Operator1D::new(Coefficient::OnePlusSqPow { scale: 1.0, power: 2.0 }, 0.0);
        assert!(matches!(fast.check_l1(10.0), Err(Error::ConditionL1(_))));
        let drift = Operator1D::new(1.0, Coefficient::SignedOnePlusSqPow { scale: 1.0, power: 1.0 });
        assert!(matches!(drift.check_l1(10.0), Err(Error::ConditionL1(_))));
        let ok = Operator1D::new(Coefficient::Quadratic { c0: 1.0, c2: 1.0 }, Coefficient::Sin { amp: 3.0 });
        assert!(ok.check_l1(10.0).is_ok());
    }

    #[test]
    fn certificate_is_verified() {
        let op = Operator1D::laplacian().with_growth_cert(1.0, 0.0);
        assert!(op.check_nondegenerate(&[-1.0, 0.0, 5.0]).is_ok());
        let bad = Operator1D::new(2.0, 0.0).with_growth_cert(1.0, 0.0);
        assert!(matches!(bad.check_nondegenerate(&[0.0]), Err(Error::ConditionL1(_))));
        assert!(Operator1D::new(0.0, 0.0).check_nondegenerate(&[0.0]).is_err());
    }
}
