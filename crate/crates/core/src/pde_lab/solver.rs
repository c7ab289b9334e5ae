//! Method of lines on a uniform grid: central differences for `a u_xx`,
//! upwinding for `b u_x`, and an implicit step (backward Euler or TR-BDF2)
//! solved by damped Newton with a tridiagonal Jacobian.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use super::operator::Operator1D;
use crate::error::{Error, Result};
use crate::nonlinearity::ReactionTerm;
use crate::tridiag;

pub type BoundaryFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Boundary {
    Dirichlet(f64, f64),
    TimeDependentDirichlet(BoundaryFn),
}

impl Boundary {
    pub fn at(&self, t: f64) -> (f64, f64) {
        match self {
            Boundary::Dirichlet(l, r) => (*l, *r),
            Boundary::TimeDependentDirichlet(f) => f(t),
        }
    }
}

impl std::fmt::Debug for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Dirichlet(l, r) => write!(f, "Dirichlet({l}, {r})"),
            Boundary::TimeDependentDirichlet(_) => write!(f, "TimeDependentDirichlet(..)"),
        }
    }
}

/// Grid function on `[x0, x1]` at time `t`; the end nodes carry boundary data.
#[derive(Debug, Clone)]
pub struct Field1D {
    pub x0: f64,
    pub x1: f64,
    pub t: f64,
    pub values: Vec<f64>,
    pub boundary: Boundary,
}

impl Field1D {
    /// Samples `g` at `nx` nodes; the end nodes take the boundary data at `t0`.
    pub fn new(x0: f64, x1: f64, nx: usize, t0: f64, g: impl Fn(f64) -> f64, boundary: Boundary) -> Result<Self> {
        if nx < 3 || !(x1 > x0) {
            return Err(Error::Invalid(format!("need nx >= 3 and x1 > x0, got nx = {nx}, [{x0}, {x1}]")));
        }
        let dx = (x1 - x0) / (nx - 1) as f64;
        let mut values: Vec<f64> = (0..nx).map(|i| g(x0 + dx * i as f64)).collect();
        let (l, r) = boundary.at(t0);
        values[0] = l;
        values[nx - 1] = r;
        let f = Self { x0, x1, t: t0, values, boundary };
        f.check(0.0)?;
        Ok(f)
    }

    pub fn nx(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.dx() * i as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx()).map(|i| self.x(i)).collect()
    }

    /// Finite everywhere and `>= -neg_tol max(1, max |u|)`.
    pub fn check(&self, neg_tol: f64) -> Result<()> {
        let scale = self.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (i, &v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Stability(format!("u = {v} at x = {} t = {}", self.x(i), self.t)));
            }
            if v < -neg_tol * scale {
                return Err(Error::Stability(format!("u = {v:e} < 0 at x = {} t = {}", self.x(i), self.t)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimeScheme {
    BackwardEuler,
    TrBdf2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub scheme: TimeScheme,
    pub dt0: f64,
    pub dt_max: f64,
    /// Step growth factor after an accepted step.
    pub growth: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Negativity tolerance relative to `max(1, max |u|)`.
    pub neg_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            scheme: TimeScheme::BackwardEuler,
            dt0: 1e-7,
            dt_max: 1e-3,
            growth: 1.1,
            newton_tol: 1e-10,
            max_newton: 40,
            neg_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub steps: usize,
    pub rejected: usize,
    pub newton_iterations: usize,
    pub min_value: f64,
    /// Initial data disagreed with the boundary data at `t0`.
    pub incompatible_boundary: bool,
}

/// Frozen coefficients of the semi-discrete right-hand side.
struct Disc<'a> {
    xs: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    s: Vec<f64>,
    dx: f64,
    term: &'a ReactionTerm,
}

impl<'a> Disc<'a> {
    fn new(field: &Field1D, op: &Operator1D, term: &'a ReactionTerm, forcing: Option<&Profile>) -> Result<Self> {
        let xs = field.xs();
        op.check_nondegenerate(&xs)?;
        let a = xs.iter().map(|&x| op.a(x)).collect();
        let b = xs.iter().map(|&x| op.b(x)).collect();
        let s = xs.iter().map(|&x| forcing.map_or(0.0, |f| f(x))).collect();
        Ok(Self { xs, a, b, s, dx: field.dx(), term })
    }

    /// `N(u)` at interior node `i` (needs `u[i-1..=i+1]`).
    #[inline]
    fn rhs(&self, u: &[f64], i: usize) -> f64 {
        let dx = self.dx;
        let diff = self.a[i] * (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (dx * dx);
        let b = self.b[i];
        let adv = if b > 0.0 { b * (u[i + 1] - u[i]) / dx } else { b * (u[i] - u[i - 1]) / dx };
        diff + adv + self.term.eval(self.xs[i], u[i]) + self.s[i]
    }

    /// Solves `u - h N(u) = rhs` on interior nodes; `u` holds the initial
    /// guess and the boundary values, and returns the solution.
    fn implicit_solve(&self, u: &mut [f64], rhs: &[f64], h: f64, opts: &SolverOptions) -> Result<usize> {
        let n = u.len();
        let m = n - 2;
        let dx2 = self.dx * self.dx;
        let resid = |u: &[f64]| -> Vec<f64> { (1..n - 1).map(|i| u[i] - h * self.rhs(u, i) - rhs[i]).collect() };
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut r = resid(u);
        let mut rn = norm(&r);
        for it in 0..opts.max_newton {
            let mut sub = vec![0.0; m];
            let mut diag = vec![0.0; m];
            let mut sup = vec![0.0; m];
            for k in 0..m {
                let i = k + 1;
                let b = self.b[i];
                let (bp, bm) = (b.max(0.0) / self.dx, (-b).max(0.0) / self.dx);
                let a = self.a[i] / dx2;
                sub[k] = -h * (a + bm);
                sup[k] = -h * (a + bp);
                diag[k] = 1.0 + h * (2.0 * a + bp + bm) - h * self.term.du(self.xs[i], u[i]);
            }
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let delta = tridiag::solve(&sub, &diag, &sup, &neg)?;
            let scale = u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let mut lambda = 1.0;
            loop {
                let mut trial = u.to_vec();
                for k in 0..m {
                    trial[k + 1] += lambda * delta[k];
                }
                let rt = resid(&trial);
                let rtn = norm(&rt);
                if rtn.is_finite() && (rtn <= (1.0 - 1e-4 * lambda) * rn || rtn <= opts.newton_tol * scale) {
                    u.copy_from_slice(&trial);
                    r = rt;
                    rn = rtn;
                    break;
                }
                lambda *= 0.5;
                if lambda < 1e-4 {
                    return Err(Error::NewtonDivergence(format!("line search failed, residual {rn:e}")));
                }
            }
            let step = lambda * norm(&delta);
            if step <= opts.newton_tol * scale || rn <= 1e-3 * opts.newton_tol * scale {
                return Ok(it + 1);
            }
        }
        Err(Error::NewtonDivergence(format!("no convergence in {} iterations, residual {rn:e}", opts.max_newton)))
    }
}

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

/// One step of size `dt`; errors leave the field untouched.
fn advance(disc: &Disc, field: &Field1D, dt: f64, opts: &SolverOptions) -> Result<(Field1D, usize)> {
    let n = field.nx();
    let u0 = &field.values;
    let t = field.t;
    let mut iters = 0;
    let with_bc = |mut v: Vec<f64>, tb: f64| {
        let (l, r) = field.boundary.at(tb);
        v[0] = l;
        v[n - 1] = r;
        v
    };
    let next = match opts.scheme {
        TimeScheme::BackwardEuler => {
            let mut u = with_bc(u0.clone(), t + dt);
            iters += disc.implicit_solve(&mut u, u0, dt, opts)?;
            u
        }
        TimeScheme::TrBdf2 => {
            let h1 = 0.5 * GAMMA * dt;
            let mut rhs = u0.clone();
            for i in 1..n - 1 {
                rhs[i] = u0[i] + h1 * disc.rhs(u0, i);
            }
            let mut us = with_bc(u0.clone(), t + GAMMA * dt);
            iters += disc.implicit_solve(&mut us, &rhs, h1, opts)?;
            let c1 = 1.0 / (GAMMA * (2.0 - GAMMA));
            let c0 = (1.0 - GAMMA).powi(2) / (GAMMA * (2.0 - GAMMA));
            let h2 = (1.0 - GAMMA) / (2.0 - GAMMA) * dt;
            let rhs2: Vec<f64> = (0..n).map(|i| c1 * us[i] - c0 * u0[i]).collect();
            let mut u = with_bc(us.clone(), t + dt);
            iters += disc.implicit_solve(&mut u, &rhs2, h2, opts)?;
            u
        }
    };
    let out = Field1D { values: next, t: t + dt, ..field.clone() };
    out.check(opts.neg_tol)?;
    Ok((out, iters))
}

/// One implicit step of `u_t = L u + f(x, u)` with default options.
pub fn step(field: &Field1D, op: &Operator1D, term: &ReactionTerm, dt: f64) -> Result<Field1D> {
    step_with(field, op, term, None, dt, &SolverOptions::default())
}

/// One implicit step with a time-independent forcing `s(x)` added.
pub fn step_with(field: &Field1D, op: &Operator1D, term: &ReactionTerm, forcing: Option<&Profile>, dt: f64, opts: &SolverOptions) -> Result<Field1D> {
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("dt = {dt} must be positive")));
    }
    field.check(opts.neg_tol)?;
    let disc = Disc::new(field, op, term, forcing)?;
    advance(&disc, field, dt, opts).map(|(f, _)| f)
}

/// Output frames of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    pub frames: Vec<Vec<f64>>,
    pub stats: RunStats,
}

impl Trajectory {
    /// Linear interpolation of frame `k` at `x`.
    pub fn value_at(&self, k: usize, x: f64) -> f64 {
        let xs = &self.xs;
        let n = xs.len();
        let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        let s = ((x - xs[0]) / dx).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let w = s - i as f64;
        (1.0 - w) * self.frames[k][i] + w * self.frames[k][i + 1]
    }

    pub fn last(&self) -> &[f64] {
        self.frames.last().expect("non-empty trajectory")
    }

    /// `t,x,u` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,u\n");
        for (t, f) in self.times.iter().zip(&self.frames) {
            for (x, u) in self.xs.iter().zip(f) {
                let _ = writeln!(s, "{t:.17e},{x:.17e},{u:.17e}");
            }
        }
        s
    }

    /// Little-endian: `nx: u32, nt: u32, X: f64, T: f64`, then `nt * nx`
    /// values row-major by time. `X` is the right end of the domain and `T`
    /// the last output time.
    pub fn to_binary(&self) -> Vec<u8> {
        let nx = self.xs.len();
        let nt = self.times.len();
        let mut out = Vec::with_capacity(24 + 8 * nx * nt);
        out.extend_from_slice(&(nx as u32).to_le_bytes());
        out.extend_from_slice(&(nt as u32).to_le_bytes());
        out.extend_from_slice(&self.xs.last().copied().unwrap_or(0.0).to_le_bytes());
        out.extend_from_slice(&self.times.last().copied().unwrap_or(0.0).to_le_bytes());
        for f in &self.frames {
            for v in f {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Inverse of [`Trajectory::to_binary`]: `(nx, nt, X, T, values)`.
    pub fn parse_binary(bytes: &[u8]) -> Result<(usize, usize, f64, f64, Vec<f64>)> {
        let bad = || Error::Invalid("truncated trajectory binary".into());
        let u32_at = |o: usize| -> Result<u32> { Ok(u32::from_le_bytes(bytes.get(o..o + 4).ok_or_else(bad)?.try_into().unwrap())) };
        let f64_at = |o: usize| -> Result<f64> { Ok(f64::from_le_bytes(bytes.get(o..o + 8).ok_or_else(bad)?.try_into().unwrap())) };
        let nx = u32_at(0)? as usize;
        let nt = u32_at(4)? as usize;
        let x = f64_at(8)?;
        let t = f64_at(16)?;
        if bytes.len() != 24 + 8 * nx * nt {
            return Err(bad());
        }
        let vals = (0..nx * nt).map(|k| f64_at(24 + 8 * k)).collect::<Result<Vec<_>>>()?;
        Ok((nx, nt, x, t, vals))
    }
}

/// Grid on `[x0, x1]` with `nx` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
}

impl Domain {
    pub fn new(x0: f64, x1: f64, nx: usize) -> Self {
        Self { x0, x1, nx }
    }

    /// `[-half, half]` with spacing close to `dx` and a node at 0.
    pub fn symmetric(half: f64, dx: f64) -> Self {
        let cells = (2.0 * half / dx).round().max(2.0) as usize;
        let cells = cells + cells % 2;
        Self { x0: -half, x1: half, nx: cells + 1 }
    }
}

/// Runs from `g` to the increasing `output_times` (all `> 0`), with adaptive
/// steps: growth by `opts.growth` up to `opts.dt_max`, halving on Newton
/// failure or negativity.
pub fn solve(
    g: &dyn Fn(f64) -> f64,
    op: &Operator1D,
    term: &ReactionTerm,
    forcing: Option<&Profile>,
    domain: Domain,
    output_times: &[f64],
    boundary: Boundary,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    if output_times.is_empty() || output_times.windows(2).any(|w| w[1] <= w[0]) || !(output_times[0] > 0.0) {
        return Err(Error::Invalid("output times must be positive and increasing".into()));
    }
    let mut field = Field1D::new(domain.x0, domain.x1, domain.nx, 0.0, g, boundary)?;
    let mut stats = RunStats {
        min_value: field.values.iter().copied().fold(f64::INFINITY, f64::min),
        ..Default::default()
    };
    let (gl, gr) = (g(domain.x0), g(domain.x1));
    stats.incompatible_boundary = (gl - field.values[0]).abs() > 1e-12 * gl.abs().max(1.0)
        || (gr - field.values[domain.nx - 1]).abs() > 1e-12 * gr.abs().max(1.0);
    let disc = Disc::new(&field, op, term, forcing)?;
    let mut frames = Vec::with_capacity(output_times.len());
    let mut dt = opts.dt0.min(opts.dt_max);
    for &t_out in output_times {
        while field.t < t_out {
            let remaining = t_out - field.t;
            let last = dt >= remaining * (1.0 - 1e-12);
            let h = if last { remaining } else { dt };
            match advance(&disc, &field, h, opts) {
                Ok((next, iters)) => {
                    field = next;
                    if last {
                        field.t = t_out;
                    }
                    stats.steps += 1;
                    stats.newton_iterations += iters;
                    for &v in &field.values {
                        stats.min_value = stats.min_value.min(v);
                    }
                    if !last || h >= dt {
                        dt = (dt * opts.growth).min(opts.dt_max);
                    }
                }
                Err(e @ (Error::NewtonDivergence(_) | Error::Stability(_) | Error::Invalid(_))) => {
                    stats.rejected += 1;
                    dt = 0.5 * h;
                    if dt < 1e-14 * t_out.max(1.0) {
                        return Err(e);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        frames.push(field.values.clone());
    }
    Ok(Trajectory { xs: field.xs(), times: output_times.to_vec(), frames, stats })
}

/// Dirichlet problem without forcing.
pub fn solve_dirichlet(
    g: &dyn Fn(f64) -> f64,
    op: &Operator1D,
    term: &ReactionTerm,
    domain: Domain,
    output_times: &[f64],
    boundary: Boundary,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    solve(g, op, term, None, domain, output_times, boundary, opts)
}
