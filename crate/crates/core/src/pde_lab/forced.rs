//! Truncated problems: zero-Dirichlet runs on expanding intervals (minimal
//! solution) and the forced problems on `[-2m, 2m]` whose limits in `k` and
//! `m` decide between uniqueness and a nontrivial solution from zero data.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::operator::Operator1D;
use super::solver::{solve, Boundary, Domain, Profile, SolverOptions, Trajectory};
use crate::error::{Error, Result};
use crate::nonlinearity::ReactionTerm;

/// `3s^2 - 2s^3` clamped to `[0, 1]`.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// Plateau on `m + 1 <= |x| <= 2m` with unit collars on both sides.
fn annulus_profile(m: f64, x: f64) -> f64 {
    let r = x.abs();
    if r <= m || r >= 2.0 * m + 1.0 {
        0.0
    } else if r < m + 1.0 {
        smoothstep(r - m)
    } else if r <= 2.0 * m {
        1.0
    } else {
        1.0 - smoothstep(r - 2.0 * m)
    }
}

#[derive(Clone)]
pub struct ForcedProblemSpec {
    pub m: usize,
    pub k: f64,
    /// Reference stationary solution entering the initial data.
    pub w_ref: Profile,
    pub w_label: String,
}

impl std::fmt::Debug for ForcedProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ForcedProblemSpec {{ m: {}, k: {}, w_ref: {} }}", self.m, self.k, self.w_label)
    }
}

impl ForcedProblemSpec {
    pub fn new(m: usize, k: f64, w_label: impl Into<String>, w_ref: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if m == 0 || !(k >= 0.0) || !k.is_finite() {
            return Err(Error::Invalid(format!("need m >= 1 and finite k >= 0, got m = {m}, k = {k}")));
        }
        Ok(Self { m, k, w_ref: Arc::new(w_ref), w_label: w_label.into() })
    }

    /// `W_ref = 0`.
    pub fn zero_reference(m: usize, k: f64) -> Result<Self> {
        Self::new(m, k, "0", |_| 0.0)
    }

    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..self.clone() }
    }

    pub fn forcing(&self, x: f64) -> f64 {
        self.k * annulus_profile(self.m as f64, x)
    }

    /// `g_m`: zero on `B_m`, `m^2 W_ref` on the plateau.
    pub fn initial(&self, x: f64) -> f64 {
        let m = self.m as f64;
        let s = annulus_profile(m, x);
        if s == 0.0 {
            0.0
        } else {
            s * m * m * (self.w_ref)(x)
        }
    }

    pub fn half_width(&self) -> f64 {
        2.0 * self.m as f64
    }
}

/// `U_{m,k}` on `[-2m, 2m]` with zero Dirichlet data and spacing close to `dx`.
pub fn solve_forced(spec: &ForcedProblemSpec, op: &Operator1D, term: &ReactionTerm, times: &[f64], dx: f64, opts: &SolverOptions) -> Result<Trajectory> {
    let s = spec.clone();
    let forcing: Profile = Arc::new(move |x| s.forcing(x));
    let g = |x: f64| spec.initial(x);
    solve(&g, op, term, Some(&forcing), Domain::symmetric(spec.half_width(), dx), times, Boundary::Dirichlet(0.0, 0.0), opts)
}

fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderOptions {
    pub dx: f64,
    pub probe_x: f64,
    pub probe_t: f64,
    pub solver: SolverOptions,
}

impl Default for LadderOptions {
    fn default() -> Self {
        Self { dx: 0.02, probe_x: 0.0, probe_t: 1.0, solver: SolverOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalSolution {
    pub half_widths: Vec<f64>,
    /// Probe value per rung.
    pub probe_values: Vec<f64>,
    /// Sup-norm gaps between consecutive rungs on `|x| <= R_0 / 2` at `probe_t`.
    pub gaps: Vec<f64>,
    /// Each rung dominates the previous one up to `tol` on the smaller interval.
    pub monotone: bool,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

/// Zero-Dirichlet runs on `[-R, R]` for each `R` in the increasing ladder,
/// with `g` restricted. Errors with `Convergence` when the gaps neither fall
/// below `gap_tol` nor decay.
pub fn minimal_solution(
    g: &(dyn Fn(f64) -> f64 + Sync),
    op: &Operator1D,
    term: &ReactionTerm,
    ladder: &[f64],
    opts: &LadderOptions,
    gap_tol: f64,
) -> Result<MinimalSolution> {
    if ladder.len() < 2 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("domain ladder needs at least two increasing radii".into()));
    }
    let times = [opts.probe_t];
    let runs = par_map(ladder, |&r| solve(g, op, term, None, Domain::symmetric(r, opts.dx), &times, Boundary::Dirichlet(0.0, 0.0), &opts.solver));
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let probe_values: Vec<f64> = runs.iter().map(|t| t.value_at(0, opts.probe_x)).collect();
    let mut gaps = Vec::new();
    let mut monotone = true;
    for w in runs.windows(2) {
        let (small, big) = (&w[0], &w[1]);
        let mut gap = 0.0f64;
        for (i, &x) in small.xs.iter().enumerate() {
            let d = big.value_at(0, x) - small.frames[0][i];
            if d < -1e-8 * small.frames[0][i].abs().max(1.0) {
                monotone = false;
            }
            if x.abs() <= 0.5 * ladder[0] {
                gap = gap.max(d.abs());
            }
        }
        gaps.push(gap);
    }
    let last = *gaps.last().unwrap();
    let decaying = gaps.windows(2).all(|w| w[1] <= 0.5 * w[0]);
    if last > gap_tol && !(decaying && gaps.len() >= 2) {
        return Err(Error::Convergence(format!("ladder gaps {gaps:?} do not decay")));
    }
    let trajectory = runs.into_iter().last().unwrap();
    Ok(MinimalSolution { half_widths: ladder.to_vec(), probe_values, gaps, monotone, trajectory })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessOptions {
    pub ladder: LadderOptions,
    /// Witness threshold.
    pub theta: f64,
    /// Decay verdict needs the last probe below `theta * decay`.
    pub decay: f64,
    /// Successive rungs must shrink by at least this ratio for geometric decay.
    pub decay_ratio: f64,
    /// Largest ratio of successive probe changes counted as stabilizing.
    pub contraction: f64,
    /// Relative change in `k` accepted as converged.
    pub k_rel: f64,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        Self {
            ladder: LadderOptions { dx: 0.05, ..Default::default() },
            theta: 1e-3,
            decay: 1e-2,
            decay_ratio: 0.5,
            contraction: 0.75,
            k_rel: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ForcedRung {
    pub m: usize,
    /// `(k, probe value)` in the order tried.
    pub k_history: Vec<(f64, f64)>,
    pub k_used: f64,
    pub k_converged: bool,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UniquenessVerdict {
    NoNontrivialFound,
    NontrivialWitness(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub verdict: Option<UniquenessVerdict>,
    /// Geometric extrapolation of the probe in `m` from the last three rungs.
    pub extrapolated: Option<f64>,
    pub rungs: Vec<ForcedRung>,
    pub options: UniquenessOptions,
    pub w_ref: String,
}

/// Probe value of `U_{m,k}` with `k` walked up `forcing_ladder` until it
/// changes by less than `k_rel`.
fn forced_rung(base: &ForcedProblemSpec, op: &Operator1D, term: &ReactionTerm, forcing_ladder: &[f64], opts: &UniquenessOptions) -> Result<ForcedRung> {
    let lo = &opts.ladder;
    let mut hist: Vec<(f64, f64)> = Vec::new();
    let mut converged = false;
    for &k in forcing_ladder {
        let tr = solve_forced(&base.with_k(k), op, term, &[lo.probe_t], lo.dx, &lo.solver)?;
        let v = tr.value_at(0, lo.probe_x);
        if let Some(&(_, prev)) = hist.last() {
            if (v - prev).abs() <= opts.k_rel * v.abs().max(1e-300) || v == prev {
                hist.push((k, v));
                converged = true;
                break;
            }
        }
        hist.push((k, v));
    }
    let &(k_used, value) = hist.last().ok_or_else(|| Error::Invalid("empty forcing ladder".into()))?;
    Ok(ForcedRung { m: base.m, k_history: hist, k_used, k_converged: converged, value })
}

/// Runs the forced problems over both ladders and classifies the probe values:
/// a witness needs the last two probes above `theta`, contracting changes and
/// an extrapolated limit above `theta`; no nontrivial solution is reported when
/// the probes fall geometrically below `theta * decay`.
/// The report is returned in full; an undecided ladder gives `verdict = None`
/// and [`UniquenessReport::verdict`] as an `Inconclusive` error.
pub fn uniqueness_probe(
    op: &Operator1D,
    term: &ReactionTerm,
    w_ref: (&str, Profile),
    domain_ladder: &[usize],
    forcing_ladder: &[f64],
    opts: &UniquenessOptions,
) -> Result<UniquenessReport> {
    if domain_ladder.len() < 2 || domain_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("domain ladder needs at least two increasing m".into()));
    }
    if forcing_ladder.is_empty() || forcing_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("forcing ladder must be increasing".into()));
    }
    let specs = domain_ladder
        .iter()
        .map(|&m| {
            let w = w_ref.1.clone();
            ForcedProblemSpec::new(m, 0.0, w_ref.0, move |x| w(x))
        })
        .collect::<Result<Vec<_>>>()?;
    let rungs = par_map(&specs, |s| forced_rung(s, op, term, forcing_ladder, opts)).into_iter().collect::<Result<Vec<_>>>()?;
    let v: Vec<f64> = rungs.iter().map(|r| r.value).collect();
    let n = v.len();
    let extrapolated = (n >= 3).then(|| {
        let (d1, d2) = (v[n - 2] - v[n - 3], v[n - 1] - v[n - 2]);
        let r = if d1 != 0.0 { d2 / d1 } else { 0.0 };
        if (0.0..1.0).contains(&r) {
            v[n - 1] + d2 * r / (1.0 - r)
        } else {
            f64::NAN
        }
    });
    let contracting = extrapolated.is_some_and(|l| !l.is_nan()) && {
        let (d1, d2) = ((v[n - 2] - v[n - 3]).abs(), (v[n - 1] - v[n - 2]).abs());
        d2 <= opts.contraction * d1
    };
    let above = v[n - 2] > opts.theta && v[n - 1] > opts.theta;
    let verdict = if above && contracting && extrapolated.unwrap() > opts.theta {
        Some(UniquenessVerdict::NontrivialWitness(v[n - 1]))
    } else if v[n - 1] < opts.theta * opts.decay && v.windows(2).all(|w| w[1] <= opts.decay_ratio * w[0]) {
        Some(UniquenessVerdict::NoNontrivialFound)
    } else {
        None
    };
    Ok(UniquenessReport { verdict, extrapolated, rungs, options: *opts, w_ref: w_ref.0.to_string() })
}

impl UniquenessReport {
    pub fn verdict(&self) -> Result<UniquenessVerdict> {
        self.verdict.ok_or_else(|| {
            let vals: Vec<(usize, f64)> = self.rungs.iter().map(|r| (r.m, r.value)).collect();
            Error::Inconclusive(format!("probe values {vals:?} neither stabilize above {} nor decay", self.options.theta))
        })
    }
}
