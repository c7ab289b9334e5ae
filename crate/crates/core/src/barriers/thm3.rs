//! Second family: `psi_R(x, t) = (phi_R(x) - 1) exp(K(t+1))` against an
//! envelope `F` (or the shift envelope `H`) split at `M0`:
//! `F(u) <= C0 u` on `(0, M0]` and `F(u) <= Q(u)` on `[M0, inf)`.

use rayon::prelude::*;
use serde::Serialize;

use super::report::{ResidualReport, Sweep, Thm3Diagnostics};
use super::search::{find_k, KRange};
use super::thm1::dominance_threshold_ln;
use super::{barrier_derivatives, ln_phi, BarrierParams, Family, GridSpec};
use crate::error::{Error, Result};
use crate::pde_lab::Operator1D;
use crate::rate::{PowerLogRate, Rate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitConstants {
    pub m0: f64,
    pub c0: f64,
}

/// Catalog defaults: `M0` from the dominance threshold against `Q`, `C0` the
/// probe supremum of `F(u)/u` on `(0, M0]` (at least 0).
pub fn split_constants<E: Rate + ?Sized>(env: &E, m: usize, eps: f64) -> Result<SplitConstants> {
    let q = PowerLogRate::growth_model(m, eps);
    let m0 = dominance_threshold_ln(env, &q)?.exp();
    if !m0.is_finite() {
        return Err(Error::Overflow("M0 exceeds f64 range".into()));
    }
    let c0 = (0..=96)
        .map(|k| m0 * 10f64.powf(-(k as f64) / 8.0))
        .map(|u| env.eval(u) / u)
        .fold(0.0, f64::max);
    Ok(SplitConstants { m0, c0 })
}

fn check_split<E: Rate + ?Sized>(env: &E, q: &PowerLogRate, c: &SplitConstants) -> Result<()> {
    for k in 0..=96 {
        let u = c.m0 * 10f64.powf(-(k as f64) / 8.0);
        if env.eval(u) > c.c0 * u * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::EnvelopeDominance(format!("F({u}) > C0 u with C0 = {}", c.c0)));
        }
    }
    let base = c.m0.ln();
    for k in 0..=120 {
        let y = base + 1e-3 * 2f64.powf(k as f64 / 4.0);
        let (e, g) = (env.per_unit_ln(y), q.per_unit_ln(y));
        if e.is_finite() && g.is_finite() && e > g + 1e-12 * g.abs() {
            return Err(Error::EnvelopeDominance(format!("F exceeds Q at ln u = {y:.4e} above M0 = {}", c.m0)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct PointOut {
    residual: f64,
    split: [f64; 5],
    aggregate: f64,
    below: bool,
    above: bool,
    c0: f64,
}

#[derive(Debug, Clone)]
pub struct Thm3Problem<E> {
    pub params: BarrierParams,
    pub op: Operator1D,
    pub env: E,
    pub eps: f64,
    pub grid: GridSpec,
    pub q: PowerLogRate,
    pub consts: SplitConstants,
}

/// Result of [`Thm3Problem::find_k_with_ladder`].
#[derive(Debug, Clone, Serialize)]
pub struct LadderResult {
    #[serde(rename = "K")]
    pub k: f64,
    pub reports: Vec<ResidualReport>,
    pub all_certified: bool,
}

impl<E: Rate + Clone> Thm3Problem<E> {
    /// `consts = None` computes the catalog defaults; supplied constants are
    /// checked on probes. The operator must pass the growth probes.
    pub fn new(params: BarrierParams, op: &Operator1D, env: E, eps: f64, grid: GridSpec, consts: Option<SplitConstants>) -> Result<Self> {
        if params.family != Family::Thm3Barrier {
            return Err(Error::Invalid("second-family residual needs Thm3Barrier parameters".into()));
        }
        params.validate(eps)?;
        op.check_nondegenerate(&grid.xs(params.r))?;
        op.check_l1(params.r.max(1.0))?;
        let q = PowerLogRate::growth_model(params.m, eps);
        let consts = match consts {
            Some(c) => {
                if !(c.m0 > 1.0) || !(c.c0 >= 0.0) {
                    return Err(Error::Invalid(format!("need M0 > 1 and C0 >= 0, got {c:?}")));
                }
                c
            }
            None => split_constants(&env, params.m, eps)?,
        };
        check_split(&env, &q, &consts)?;
        Ok(Self { params, op: op.clone(), env, eps, grid, q, consts })
    }

    /// Same problem on a different ball; constants and `K` are not retuned.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        let params = self.params.with_r(r);
        params.validate(self.eps)?;
        self.op.check_l1(r)?;
        Ok(Self { params, ..self.clone() })
    }

    fn point(&self, k: f64, x: f64, t: f64) -> Option<PointOut> {
        let p = self.params.with_k(k);
        let d = barrier_derivatives(&p, &self.op, x).ok()?;
        let lp = ln_phi(&p, x).ok()?;
        let frac = -(-lp).exp_m1();
        // phi / (phi - 1)
        let g = 1.0 / frac;
        let ln_psi = k * (t + 1.0) + lp + frac.ln();
        let ln_m0 = self.consts.m0.ln();
        let slack = 1e-9 * ln_m0.abs().max(1.0);
        let below = ln_psi <= ln_m0 + slack;
        let above = ln_psi >= ln_m0 - slack;
        let absorb = self.q.per_unit_ln(ln_psi);
        let mut split = [f64::NEG_INFINITY; 5];
        for (i, w) in d.terms.iter().enumerate() {
            let v = g * w;
            if below {
                split[i] = split[i].max(v - (k - self.consts.c0) / 5.0);
            }
            if above {
                split[i] = split[i].max(v - k / 5.0 + absorb / 5.0);
            }
        }
        let aggregate = g * d.ratio - k + self.env.per_unit_ln(ln_psi);
        let residual = split.iter().copied().fold(aggregate, f64::max);
        (residual.is_finite() && !aggregate.is_nan()).then_some(PointOut { residual, split, aggregate, below, above, c0: frac })
    }

    fn sweep(&self, k: f64, grid: &GridSpec) -> (Sweep, Thm3Diagnostics) {
        let outs: Vec<(f64, f64, Option<PointOut>)> = grid
            .points(self.params.r)
            .into_par_iter()
            .map(|(x, t)| (x, t, self.point(k, x, t)))
            .collect();
        let mut diag = Thm3Diagnostics {
            worst_w: [f64::NEG_INFINITY; 5],
            aggregate_max: f64::NEG_INFINITY,
            m0: self.consts.m0,
            c0_const: self.consts.c0,
            below_m0: 0,
            above_m0: 0,
            c0_empirical: None,
        };
        for o in outs.iter().filter_map(|(_, _, o)| o.as_ref()) {
            for i in 0..5 {
                diag.worst_w[i] = diag.worst_w[i].max(o.split[i]);
            }
            diag.aggregate_max = diag.aggregate_max.max(o.aggregate);
            diag.below_m0 += o.below as usize;
            diag.above_m0 += o.above as usize;
            if o.above {
                diag.c0_empirical = Some(diag.c0_empirical.map_or(o.c0, |c: f64| c.min(o.c0)));
            }
        }
        let sweep = Sweep::from_points(outs.into_iter().map(|(x, t, o)| (x, t, o.map(|o| o.residual))).collect());
        (sweep, diag)
    }

    /// Split inequalities and aggregate residual on the grid, refined 2x when
    /// the base grid passes.
    pub fn residual(&self, k: f64) -> ResidualReport {
        let p = self.params.with_k(k);
        let (base, mut diag) = self.sweep(k, &self.grid);
        let refined = if base.max <= 0.0 {
            let (s, d) = self.sweep(k, &self.grid.refined());
            for i in 0..5 {
                diag.worst_w[i] = diag.worst_w[i].max(d.worst_w[i]);
            }
            diag.aggregate_max = diag.aggregate_max.max(d.aggregate_max);
            diag.c0_empirical = match (diag.c0_empirical, d.c0_empirical) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            Some(s)
        } else {
            None
        };
        let mut rep = ResidualReport::assemble(&p, &self.grid, base, refined);
        if k < self.consts.c0 {
            rep.sign_certified = false;
        }
        rep.thm3 = Some(diag);
        rep
    }

    /// Smallest certifying `K` at the base radius, then the same `K` on the
    /// radii `R 2^j`, `j = 0..ladder`.
    pub fn find_k_with_ladder(&self, range: KRange, ladder: usize) -> Result<LadderResult> {
        let (k, base) = find_k(|k| self.residual(k), range)?;
        let mut reports = vec![base];
        for j in 1..=ladder {
            let r = self.params.r * 2f64.powi(j as i32);
            reports.push(self.with_radius(r)?.residual(k));
        }
        let all_certified = reports.iter().all(|r| r.sign_certified);
        Ok(LadderResult { k, reports, all_certified })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Coefficient;
    use crate::rate::ShiftedLogRate;

    fn problem(r: f64) -> Thm3Problem<ShiftedLogRate> {
        Thm3Problem::new(BarrierParams::thm3(r, 3.0, 0.0, 0), &Operator1D::laplacian(), ShiftedLogRate::new(1.0, 3.0), 1.0, GridSpec::new(41, 8, 1.0), None).unwrap()
    }

    #[test]
    fn constants_for_shifted_log() {
        let c = split_constants(&ShiftedLogRate::new(1.0, 3.0), 0, 1.0).unwrap();
        assert!(c.m0 > 1.0 && c.m0 < 1.01);
        assert_eq!(c.c0, 0.0);
    }

    #[test]
    fn origin_reduces_to_w4() {
        let pr = problem(2.0);
        let o = pr.point(30.0, 0.0, 0.5).unwrap();
        assert!(o.above);
        for i in [0, 1, 2, 4] {
            assert!(o.split[i] < 0.0);
        }
        // only W4 is nonzero at the origin
        let d = barrier_derivatives(&pr.params.with_k(30.0), &pr.op, 0.0).unwrap();
        assert!((d.ratio - d.terms[3]).abs() < 1e-15);
    }

    #[test]
    fn splice_evaluates_both_branches() {
        let pr = problem(2.0);
        let k = 30.0;
        let t = 0.5;
        // find x with psi = M0 by bisection on ln psi along x in [0, R)
        let lnpsi = |x: f64| {
            let p = pr.params.with_k(k);
            let lp = ln_phi(&p, x).unwrap();
            k * (t + 1.0) + lp + (-(-lp).exp_m1()).ln()
        };
        // psi(0) is above M0 for this K, so lower K until it is below
        let k_small = 0.5;
        let lnpsi_small = |x: f64| {
            let p = pr.params.with_k(k_small);
            let lp = ln_phi(&p, x).unwrap();
            k_small * (t + 1.0) + lp + (-(-lp).exp_m1()).ln()
        };
        let target = pr.consts.m0.ln();
        assert!(lnpsi(0.0) > target);
        assert!(lnpsi_small(0.0) < target);
        let (mut a, mut b) = (0.0, 1.99);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if lnpsi_small(m) < target {
                a = m;
            } else {
                b = m;
            }
        }
        let o = pr.point(k_small, a, t).unwrap();
        assert!(o.below && o.above);
    }

    #[test]
    fn k_monotone_and_large_k_certifies() {
        let pr = problem(2.0);
        assert!(!pr.residual(1.0).sign_certified);
        let r = pr.residual(3000.0);
        assert!(r.sign_certified, "{}", r.to_json());
        assert!(pr.residual(6000.0).sign_certified);
        assert!(r.thm3.as_ref().unwrap().c0_empirical.is_some());
    }

    #[test]
    fn growth_condition_is_required() {
        let op = Operator1D::new(Coefficient::OnePlusSqPow { scale: 1.0, power: 2.0 }, 0.0);
        let r = Thm3Problem::new(BarrierParams::thm3(2.0, 3.0, 0.0, 0), &op, ShiftedLogRate::new(1.0, 3.0), 1.0, GridSpec::new(11, 3, 1.0), None);
        assert!(matches!(r, Err(Error::ConditionL1(_))));
    }
}
