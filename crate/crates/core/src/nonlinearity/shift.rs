use std::sync::Arc;

use serde::Serialize;

use super::envelope::{envelope, Envelope};
use super::term::ReactionTerm;
use crate::error::{Error, Result};
use crate::rate::Rate;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ShiftMethod {
    ConcaveShortcut,
    /// Sup over `x_probes` points of `[-x_radius, x_radius]` and `v_probes`
    /// log-spaced offsets in `[0, v_max]` (plus `0`).
    GridSup { x_radius: f64, x_probes: usize, v_max: f64, v_probes: usize },
}

#[derive(Debug, Clone)]
pub struct ShiftOptions {
    pub x_radius: f64,
    pub x_probes: usize,
    pub v_max: f64,
    pub v_probes: usize,
    /// Probe box for the concavity check.
    pub concavity_u_max: f64,
    pub concavity_tol: f64,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self {
            x_radius: 10.0,
            x_probes: 201,
            v_max: 1e6,
            v_probes: 200,
            concavity_u_max: 1e3,
            concavity_tol: 1e-8,
        }
    }
}

#[derive(Clone)]
enum Plan {
    Shortcut(Arc<Envelope>),
    Grid { term: Arc<ReactionTerm>, xs: Arc<Vec<f64>>, offsets: Arc<Vec<f64>> },
}

/// One shift envelope, `G` or `H`, usable as a [`Rate`].
/// Substituting `v -> v + u` turns the `G` supremum into the `H` one, so the
/// two evaluators agree; they differ only in the conditions imposed on them.
#[derive(Clone)]
pub struct ShiftRate {
    plan: Plan,
    label: String,
}

impl ShiftRate {
    pub fn eval(&self, u: f64) -> f64 {
        match &self.plan {
            Plan::Shortcut(env) => env.eval(u),
            Plan::Grid { term, xs, offsets } => Envelope::grid_sup(xs, |x| {
                // G runs over v = u + d, H over v = d: the same differences
                offsets
                    .iter()
                    .map(|&d| term.eval(x, u + d) - term.eval(x, d))
                    .fold(f64::NEG_INFINITY, f64::max)
            }),
        }
    }
}

impl Rate for ShiftRate {
    fn eval(&self, u: f64) -> f64 {
        ShiftRate::eval(self, u)
    }

    fn per_unit_ln(&self, ln_u: f64) -> f64 {
        match &self.plan {
            Plan::Shortcut(env) => env.per_unit_ln(ln_u),
            Plan::Grid { .. } => {
                let u = ln_u.exp();
                if u.is_finite() && u > 0.0 {
                    self.eval(u) / u
                } else {
                    f64::NAN
                }
            }
        }
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// `G(u) = sup_x sup_{v>=u} (f(x,v) - f(x,v-u))` and
/// `H(u) = sup_x sup_{v>=0} (f(x,u+v) - f(x,v))`.
#[derive(Clone)]
pub struct ShiftEnvelopes {
    pub method: ShiftMethod,
    pub g: ShiftRate,
    pub h: ShiftRate,
}

impl ShiftEnvelopes {
    pub fn g_eval(&self, u: f64) -> f64 {
        self.g.eval(u)
    }

    pub fn h_eval(&self, u: f64) -> f64 {
        self.h.eval(u)
    }
}

pub fn shift_envelopes(term: &ReactionTerm, concave_hint: bool, opts: &ShiftOptions) -> Result<ShiftEnvelopes> {
    let n = opts.x_probes.max(3);
    let xs: Vec<f64> = (0..n)
        .map(|i| -opts.x_radius + 2.0 * opts.x_radius * i as f64 / (n - 1) as f64)
        .collect();
    if concave_hint {
        let us: Vec<f64> = std::iter::once(0.0)
            .chain((0..120).map(|k| opts.concavity_u_max * 10f64.powf(-8.0 * (1.0 - k as f64 / 119.0))))
            .collect();
        let x_sub: Vec<f64> = xs.iter().step_by((n / 21).max(1)).cloned().collect();
        if !term.is_concave_on(&x_sub, &us, opts.concavity_tol) {
            return Err(Error::ConcavityMismatch(format!(
                "{}: second differences exceed {} on the probe box",
                term.id, opts.concavity_tol
            )));
        }
        term.check_invariants(&x_sub)?;
        let env = Arc::new(envelope(term, f64::INFINITY, n)?);
        let mk = |name: &str| ShiftRate {
            plan: Plan::Shortcut(env.clone()),
            label: format!("{name}[{}]", term.id),
        };
        return Ok(ShiftEnvelopes {
            method: ShiftMethod::ConcaveShortcut,
            g: mk("G"),
            h: mk("H"),
        });
    }
    let k = opts.v_probes.max(2);
    let offsets: Vec<f64> = std::iter::once(0.0)
        .chain((0..k).map(|i| opts.v_max * 10f64.powf(-9.0 * (1.0 - i as f64 / (k - 1) as f64))))
        .collect();
    let term = Arc::new(term.clone());
    let (xs, offsets) = (Arc::new(xs), Arc::new(offsets));
    let mk = |name: &str| ShiftRate {
        plan: Plan::Grid { term: term.clone(), xs: xs.clone(), offsets: offsets.clone() },
        label: format!("{name}[{}]", term.id),
    };
    Ok(ShiftEnvelopes {
        method: ShiftMethod::GridSup { x_radius: opts.x_radius, x_probes: n, v_max: opts.v_max, v_probes: k },
        g: mk("G"),
        h: mk("H"),
    })
}
