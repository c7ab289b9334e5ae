use serde::Serialize;

use super::term::{ReactionTerm, TermKind};
use crate::error::{Error, Result};
use crate::rate::Rate;

/// Probe radius used in place of an infinite ball for grid suprema.
pub const DEFAULT_INFINITE_PROBE_RADIUS: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EnvelopeMethod {
    ClosedForm,
    /// Supremum over `x_probes` uniform points on `[-probe_radius, probe_radius]`,
    /// polished by golden-section search around the best node.
    GridSup { x_probes: usize, probe_radius: f64 },
}

#[derive(Debug, Clone)]
enum Plan {
    XIndependent,
    Bounds { v_sup: f64, gamma_inf: f64 },
    Grid { xs: Vec<f64> },
}

/// `F_R(u) = sup_{|x| <= R} f(x, u)`; `R = inf` gives `F`.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub source: ReactionTerm,
    pub radius: f64,
    pub method: EnvelopeMethod,
    plan: Plan,
}

/// Envelope with the closed form when one is available, else a grid supremum.
pub fn envelope(term: &ReactionTerm, radius: f64, x_probe_count: usize) -> Result<Envelope> {
    check_radius(radius)?;
    if term.is_x_independent() {
        return Ok(Envelope {
            source: term.clone(),
            radius,
            method: EnvelopeMethod::ClosedForm,
            plan: Plan::XIndependent,
        });
    }
    if !matches!(term.kind, TermKind::Custom { .. }) && (term.v.is_constant() || term.gamma.is_constant()) {
        if let (Some((_, v_sup)), Some((gamma_inf, _))) = (term.v.range_on(radius), term.gamma.range_on(radius)) {
            if !v_sup.is_finite() {
                return Err(Error::UnboundedEnvelope(format!(
                    "{}: sup of V over |x| <= {radius} is infinite",
                    term.id
                )));
            }
            return Ok(Envelope {
                source: term.clone(),
                radius,
                method: EnvelopeMethod::ClosedForm,
                plan: Plan::Bounds { v_sup, gamma_inf },
            });
        }
    }
    grid_envelope(term, radius, x_probe_count)
}

/// Grid-supremum envelope regardless of closed-form availability.
pub fn grid_envelope(term: &ReactionTerm, radius: f64, x_probe_count: usize) -> Result<Envelope> {
    check_radius(radius)?;
    let n = x_probe_count.max(3);
    if radius.is_infinite() {
        // sup at u = 1 must settle as the probe ball grows
        let s: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&r| Envelope::grid(term, r, n).eval(1.0))
            .collect();
        let tol = 1e-6 * (1.0 + s[0].abs());
        if !s[2].is_finite() || (s[1] - s[0] > tol && s[2] - s[1] > tol) {
            return Err(Error::UnboundedEnvelope(format!(
                "{}: sup_x f(x, 1) grows with the probe radius: {:?}",
                term.id, s
            )));
        }
    }
    let probe_radius = if radius.is_infinite() { DEFAULT_INFINITE_PROBE_RADIUS } else { radius };
    let mut env = Envelope::grid(term, probe_radius, n);
    env.radius = radius;
    Ok(env)
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("envelope radius {radius} must be positive")))
    }
}

impl Envelope {
    fn grid(term: &ReactionTerm, probe_radius: f64, n: usize) -> Self {
        let xs = (0..n)
            .map(|i| -probe_radius + 2.0 * probe_radius * i as f64 / (n - 1) as f64)
            .collect();
        Envelope {
            source: term.clone(),
            radius: probe_radius,
            method: EnvelopeMethod::GridSup { x_probes: n, probe_radius },
            plan: Plan::Grid { xs },
        }
    }

    /// Sup over the grid of `h`, refined by golden-section search on the
    /// two cells adjacent to the best node.
    pub(crate) fn grid_sup(xs: &[f64], h: impl Fn(f64) -> f64) -> f64 {
        let vals: Vec<f64> = xs.iter().map(|&x| h(x)).collect();
        let (i, &best) = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        if !best.is_finite() {
            return best;
        }
        let lo = xs[i.saturating_sub(1)];
        let hi = xs[(i + 1).min(xs.len() - 1)];
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (h(c), h(d));
        let mut sup = best.max(fc).max(fd);
        for _ in 0..60 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = h(c);
                sup = sup.max(fc);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = h(d);
                sup = sup.max(fd);
            }
            if b - a < 1e-13 * (1.0 + a.abs()) {
                break;
            }
        }
        sup
    }

    pub fn eval(&self, u: f64) -> f64 {
        match &self.plan {
            Plan::XIndependent => self.source.eval(0.0, u),
            Plan::Bounds { v_sup, gamma_inf } => {
                if u < 0.0 {
                    return self.source.eval(0.0, u).max(Self::grid_sup(&[-self.radius.min(1e3), 0.0, self.radius.min(1e3)], |x| self.source.eval(x, u)));
                }
                v_sup * u - gamma_inf * self.source.absorption(u)
            }
            Plan::Grid { xs } => Self::grid_sup(xs, |x| self.source.eval(x, u)),
        }
    }

    /// `F(u) / u` from `ln u`.
    pub fn per_unit_ln(&self, ln_u: f64) -> f64 {
        match &self.plan {
            Plan::XIndependent => self.source.per_unit_ln(0.0, ln_u),
            Plan::Bounds { v_sup, gamma_inf } => v_sup - gamma_inf * self.source.absorption_per_unit_ln(ln_u),
            Plan::Grid { xs } => Self::grid_sup(xs, |x| self.source.per_unit_ln(x, ln_u)),
        }
    }

    pub fn is_closed_form(&self) -> bool {
        self.method == EnvelopeMethod::ClosedForm
    }

    /// Tolerance within which the envelope dominates the source on probes.
    pub fn dominance_tolerance(&self) -> f64 {
        if self.is_closed_form() {
            1e-12
        } else {
            1e-6
        }
    }
}

impl Rate for Envelope {
    fn eval(&self, u: f64) -> f64 {
        Envelope::eval(self, u)
    }

    fn per_unit_ln(&self, ln_u: f64) -> f64 {
        Envelope::per_unit_ln(self, ln_u)
    }

    fn label(&self) -> String {
        format!("F_{}[{}]", self.radius, self.source.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Coefficient;

    #[test]
    fn x_independent_is_identity() {
        let t = ReactionTerm::power("p", 1.0, 1.0, 2.0).unwrap();
        let e = envelope(&t, f64::INFINITY, 101).unwrap();
        assert!(e.is_closed_form());
        assert_eq!(e.eval(3.0), 3.0 - 9.0);
    }

    #[test]
    fn quadratic_gamma_on_unit_ball() {
        let t = ReactionTerm::power("q", 0.0, Coefficient::Quadratic { c0: 1.0, c2: 1.0 }, 2.0).unwrap();
        let e = envelope(&t, 1.0, 101).unwrap();
        assert!(e.is_closed_form());
        assert_eq!(e.eval(2.0), -4.0);
        let g = grid_envelope(&t, 1.0, 101).unwrap();
        assert!((g.eval(2.0) + 4.0).abs() < 1e-12);
    }

    #[test]
    fn sin_potential_grid_sup() {
        let t = ReactionTerm::power("s", Coefficient::Sin { amp: 1.0 }, 1.0, 2.0).unwrap();
        let g = grid_envelope(&t, f64::INFINITY, 2001).unwrap();
        for u in [0.1, 0.5, 2.0] {
            assert!((g.eval(u) - (u - u * u)).abs() < 1e-9, "{u}");
        }
    }

    #[test]
    fn growing_potential_is_unbounded() {
        let t = ReactionTerm::power("g", Coefficient::Quadratic { c0: 0.0, c2: 1.0 }, 1.0, 2.0).unwrap();
        assert!(matches!(envelope(&t, f64::INFINITY, 101), Err(Error::UnboundedEnvelope(_))));
        let c = ReactionTerm::custom("c", false, |x, u| x * x * u - u * u);
        assert!(matches!(envelope(&c, f64::INFINITY, 101), Err(Error::UnboundedEnvelope(_))));
        assert!(envelope(&c, 2.0, 101).is_ok());
    }
}
