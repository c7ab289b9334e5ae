//! First family: `M_R(x, t) = exp(K(t+1)) phi_R(x) + v_inf(t)` where `v_inf`
//! solves `v' = Q(v)` from infinity, `Q(u) = -u (prod log^(i) u)^2 (log^(m+1) u)^(2+eps)`.

use rayon::prelude::*;

use super::report::{ResidualReport, Sweep};
use super::{barrier_derivatives, ln_phi, BarrierParams, Family, GridSpec};
use crate::error::{Error, Result};
use crate::nonlinearity::{envelope, ReactionTerm};
use crate::ode_oracle::v_infinity_ln;
use crate::pde_lab::Operator1D;
use crate::rate::{PowerLogRate, Rate};

const VINF_TOL: f64 = 1e-10;

/// `ln u0`: from the first probe `u0` on, `env(u) <= q(u)` holds on all
/// probes (compared as rates per unit). The probes are `ln u = ln u_min +
/// 1e-3 * 2^(k/4)` up to `ln u ~ 1e6`, with `u_min = max(1, domain of q)`.
pub fn dominance_threshold_ln<E: Rate + ?Sized, Q: Rate + ?Sized>(env: &E, q: &Q) -> Result<f64> {
    let base = q.domain_min().max(1.0).ln();
    let probes: Vec<f64> = (0..=120).map(|k| base + 1e-3 * 2f64.powf(k as f64 / 4.0)).collect();
    let mut last_fail = None;
    let mut last_checked = 0;
    let mut checked = 0;
    for (i, &y) in probes.iter().enumerate() {
        let (e, g) = (env.per_unit_ln(y), q.per_unit_ln(y));
        if e.is_nan() || g.is_nan() {
            continue;
        }
        checked += 1;
        last_checked = i;
        if e > g + 1e-12 * g.abs() {
            last_fail = Some(i);
        }
    }
    if checked < 16 {
        return Err(Error::EnvelopeDominance(format!("{}: too few evaluable probes ({checked})", env.label())));
    }
    match last_fail {
        None => Ok(probes[0]),
        Some(i) if i < last_checked => Ok(probes[i + 1]),
        Some(i) => Err(Error::EnvelopeDominance(format!(
            "{} exceeds {} at the largest evaluable probe ln u = {:.3e}",
            env.label(),
            q.label(),
            probes[i]
        ))),
    }
}

/// Alias kept for callers that think in `u` rather than `ln u`.
pub fn dominance_threshold<E: Rate + ?Sized, Q: Rate + ?Sized>(env: &E, q: &Q) -> Result<f64> {
    dominance_threshold_ln(env, q).map(f64::exp)
}

/// Residual certificate problem for the first family; the `v_inf` tables and
/// the dominance threshold are computed once and reused for every `K`.
#[derive(Debug, Clone)]
pub struct Thm1Problem {
    pub params: BarrierParams,
    pub op: Operator1D,
    pub term: ReactionTerm,
    pub eps: f64,
    pub grid: GridSpec,
    pub q: PowerLogRate,
    /// `ln u0` of the dominance `F_R <= Q` on `[u0, inf)`.
    pub ln_u0: f64,
    /// Largest time with `v_inf > 1` (infinite when `Q(1) = 0`).
    pub t0: f64,
    ln_v_base: Vec<f64>,
    ln_v_refined: Vec<f64>,
}

impl Thm1Problem {
    pub fn new(params: BarrierParams, op: &Operator1D, term: &ReactionTerm, eps: f64, grid: GridSpec) -> Result<Self> {
        if params.family != Family::Thm1Barrier {
            return Err(Error::Invalid("first-family residual needs Thm1Barrier parameters".into()));
        }
        params.validate(eps)?;
        op.check_nondegenerate(&grid.xs(params.r))?;
        let q = PowerLogRate::growth_model(params.m, eps);
        let env = envelope(term, params.r, 201)?;
        let ln_u0 = dominance_threshold_ln(&env, &q)?;
        let t0 = if q.eval(1.0) >= 0.0 {
            f64::INFINITY
        } else {
            crate::nonlinearity::tail_integral(&q, 0.0)?
        };
        if grid.t_max > t0 {
            return Err(Error::Invalid(format!("t_max = {} exceeds the window T0 = {t0}", grid.t_max)));
        }
        let table = |ts: Vec<f64>| -> Result<Vec<f64>> { ts.par_iter().map(|&t| v_infinity_ln(&q, t, VINF_TOL)).collect() };
        let ln_v_base = table(grid.ts())?;
        let ln_v_refined = table(grid.refined().ts())?;
        Ok(Self {
            params,
            op: op.clone(),
            term: term.clone(),
            eps,
            grid,
            q,
            ln_u0,
            t0,
            ln_v_base,
            ln_v_refined,
        })
    }

    /// `(L M + f(x, M) - M_t) / M` at one point, `None` when not representable.
    pub fn point(&self, k: f64, x: f64, t: f64, ln_v: f64) -> Option<f64> {
        let p = self.params.with_k(k);
        let d = barrier_derivatives(&p, &self.op, x).ok()?;
        let ln_a = k * (t + 1.0) + ln_phi(&p, x).ok()?;
        let (hi, lo) = if ln_a >= ln_v { (ln_a, ln_v) } else { (ln_v, ln_a) };
        let ln_m = hi + (lo - hi).exp().ln_1p();
        let share_a = (ln_a - ln_m).exp();
        let share_v = (ln_v - ln_m).exp();
        let r = share_a * (d.ratio - k) + self.term.per_unit_ln(x, ln_m) - self.q.per_unit_ln(ln_v) * share_v;
        r.is_finite().then_some(r)
    }

    fn sweep(&self, k: f64, grid: &GridSpec, ln_v: &[f64]) -> Sweep {
        let ts = grid.ts();
        let xs = grid.xs(self.params.r);
        let all: Vec<(f64, f64, Option<f64>)> = ts
            .par_iter()
            .zip(ln_v.par_iter())
            .flat_map_iter(|(&t, &lv)| xs.iter().map(move |&x| (x, t, self.point(k, x, t, lv))))
            .collect();
        Sweep::from_points(all)
    }

    /// Grid residual at `K`, with the 2x refinement check when the base grid
    /// passes. `exp(K) > u0` is part of the certificate.
    pub fn residual(&self, k: f64) -> ResidualReport {
        let p = self.params.with_k(k);
        let base = self.sweep(k, &self.grid, &self.ln_v_base);
        let refined = (base.max <= 0.0).then(|| self.sweep(k, &self.grid.refined(), &self.ln_v_refined));
        let mut rep = ResidualReport::assemble(&p, &self.grid, base, refined);
        if k <= self.ln_u0 {
            rep.sign_certified = false;
        }
        rep
    }

    /// `ln M(x, t)` for the barrier at `K`, with `v_inf` from the growth model.
    pub fn ln_majorant(&self, k: f64, x: f64, t: f64) -> Result<f64> {
        let p = self.params.with_k(k);
        let ln_a = k * (t + 1.0) + ln_phi(&p, x)?;
        let ln_v = v_infinity_ln(&self.q, t, VINF_TOL)?;
        let (hi, lo) = if ln_a >= ln_v { (ln_a, ln_v) } else { (ln_v, ln_a) };
        Ok(hi + (lo - hi).exp().ln_1p())
    }

    pub fn ln_v_infinity(&self) -> &[f64] {
        &self.ln_v_base
    }
}

/// `exp(K(t+1)) (L phi - (R^2 - x^2)^(-(2+eps) l) phi - K phi)` at `x = 0`,
/// the simplified majorant of the first-family residual (`m = 0`).
pub fn thm1_origin_majorant(p: &BarrierParams, op: &Operator1D, eps: f64, t: f64) -> Result<f64> {
    if p.family != Family::Thm1Barrier || p.m != 0 {
        return Err(Error::Invalid("origin majorant is defined for the first family with m = 0".into()));
    }
    let d = barrier_derivatives(p, op, 0.0)?;
    let lp = ln_phi(p, 0.0)?;
    let absorb = (p.r * p.r).powf(-(2.0 + eps) * p.l);
    Ok((p.k * (t + 1.0) + lp).exp() * (d.ratio - absorb - p.k))
}

/// Smallest `K` (to within `tol`) making the origin majorant negative, by
/// doubling then bisection.
pub fn origin_k_threshold(p: &BarrierParams, op: &Operator1D, eps: f64, tol: f64) -> Result<f64> {
    let neg = |k: f64| -> Result<bool> { Ok(thm1_origin_majorant(&p.with_k(k), op, eps, 0.0)? < 0.0) };
    if neg(0.0)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while !neg(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::KExhausted("origin majorant stays nonnegative up to K = 1e12".into()));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if neg(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(nx: usize, nt: usize) -> Thm1Problem {
        let term = ReactionTerm::shifted_log("f", 1.0, 3.0);
        Thm1Problem::new(BarrierParams::thm1(1.0, 3.0, 0.0, 0), &Operator1D::laplacian(), &term, 1.0, GridSpec::new(nx, nt, 1.0)).unwrap()
    }

    #[test]
    fn origin_majorant_closed_form() {
        let op = Operator1D::laplacian();
        for &(k, t) in &[(0.0, 0.5), (4.0, 0.1), (7.5, 1.0)] {
            let p = BarrierParams::thm1(1.0, 3.0, k, 0);
            let want = std::f64::consts::E * (k * (t + 1.0)).exp() * (6.0 - 1.0 - k);
            let got = thm1_origin_majorant(&p, &op, 1.0, t).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
        }
        let k = origin_k_threshold(&BarrierParams::thm1(1.0, 3.0, 0.0, 0), &op, 1.0, 1e-6).unwrap();
        assert!(k > 5.0 && k <= 5.0 + 1e-6);
    }

    #[test]
    fn dominance_threshold_examples() {
        let q = PowerLogRate::growth_model(0, 1.0);
        let f = crate::rate::ShiftedLogRate::new(1.0, 3.0);
        let ln_u0 = dominance_threshold_ln(&f, &q).unwrap();
        assert!(ln_u0 > 0.0 && ln_u0 < 0.01);
        let zero = |_u: f64| 0.0;
        assert!(matches!(dominance_threshold_ln(&zero, &q), Err(Error::EnvelopeDominance(_))));
    }

    #[test]
    fn zero_term_is_rejected() {
        let term = ReactionTerm::zero("0");
        let r = Thm1Problem::new(BarrierParams::thm1(1.0, 3.0, 0.0, 0), &Operator1D::laplacian(), &term, 1.0, GridSpec::new(21, 5, 1.0));
        assert!(matches!(r, Err(Error::EnvelopeDominance(_))));
    }

    #[test]
    fn small_k_fails_large_k_certifies() {
        let pr = problem(41, 10);
        let r0 = pr.residual(0.0);
        assert!(!r0.sign_certified && r0.max_residual > 0.0);
        let r = pr.residual(5000.0);
        assert!(r.sign_certified, "{}", r.to_json());
        assert!(r.refined_grid.is_some());
        assert_eq!(r.skipped, 0);
    }
}
