//! Spatial coefficient functions `x -> real` shared by reaction terms and
//! operators. Structured variants carry closed-form bounds on `|x| <= R`.

use std::fmt;
use std::sync::Arc;

pub type CoeffFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// `amp * sin(x)`
    Sin { amp: f64 },
    /// `c0 + c2 * x^2`
    Quadratic { c0: f64, c2: f64 },
    /// `scale * (1 + x^2)^power`
    OnePlusSqPow { scale: f64, power: f64 },
    /// `scale * sgn(x) * (1 + x^2)^power`, with `sgn(0) = 0`
    SignedOnePlusSqPow { scale: f64, power: f64 },
    Custom { name: String, f: CoeffFn },
}

impl Coefficient {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Sin { amp } => amp * x.sin(),
            Coefficient::Quadratic { c0, c2 } => c0 + c2 * x * x,
            Coefficient::OnePlusSqPow { scale, power } => scale * (1.0 + x * x).powf(*power),
            Coefficient::SignedOnePlusSqPow { scale, power } => {
                if x == 0.0 {
                    0.0
                } else {
                    scale * x.signum() * (1.0 + x * x).powf(*power)
                }
            }
            Coefficient::Custom { f, .. } => f(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }

    /// Exact `(inf, sup)` over `|x| <= radius` (`radius` may be infinite),
    /// or `None` when no closed form is known. Infinite bounds are reported
    /// as `±inf`.
    pub fn range_on(&self, radius: f64) -> Option<(f64, f64)> {
        let r = radius;
        match self {
            Coefficient::Constant(c) => Some((*c, *c)),
            Coefficient::Sin { amp } => {
                let a = amp.abs();
                let s = if r >= std::f64::consts::FRAC_PI_2 { 1.0 } else { r.sin() };
                Some((-a * s, a * s))
            }
            Coefficient::Quadratic { c0, c2 } => {
                let edge = if r.is_infinite() {
                    if *c2 == 0.0 {
                        *c0
                    } else {
                        c2.signum() * f64::INFINITY
                    }
                } else {
                    c0 + c2 * r * r
                };
                Some((c0.min(edge), c0.max(edge)))
            }
            Coefficient::OnePlusSqPow { scale, power } => {
                let edge = if r.is_infinite() {
                    if *power == 0.0 {
                        *scale
                    } else if *power > 0.0 {
                        scale.signum() * f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    scale * (1.0 + r * r).powf(*power)
                };
                Some((scale.min(edge), scale.max(edge)))
            }
            Coefficient::SignedOnePlusSqPow { .. } => None,
            Coefficient::Custom { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Coefficient::Constant(c) => format!("{c}"),
            Coefficient::Sin { amp } => format!("{amp}*sin(x)"),
            Coefficient::Quadratic { c0, c2 } => format!("{c0}+{c2}*x^2"),
            Coefficient::OnePlusSqPow { scale, power } => format!("{scale}*(1+x^2)^{power}"),
            Coefficient::SignedOnePlusSqPow { scale, power } => {
                format!("{scale}*sgn(x)*(1+x^2)^{power}")
            }
            Coefficient::Custom { name, .. } => name.clone(),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coefficient({})", self.describe())
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Coefficient::Constant(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_range() {
        let q = Coefficient::Quadratic { c0: 1.0, c2: 1.0 };
        assert_eq!(q.range_on(1.0), Some((1.0, 2.0)));
        assert_eq!(q.range_on(f64::INFINITY).unwrap().1, f64::INFINITY);
    }

    #[test]
    fn signed_power_is_odd() {
        let b = Coefficient::SignedOnePlusSqPow { scale: 1.0, power: 1.0 };
        assert_eq!(b.eval(0.0), 0.0);
        assert_eq!(b.eval(2.0), 5.0);
        assert_eq!(b.eval(-2.0), -5.0);
    }
}
