use std::fmt::Write as _;

use serde::Serialize;

use super::{BarrierParams, Family};

/// Residual grid on `|x| <= R (1 - x_margin)`, `t in [t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nt: usize,
    pub x_margin: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl GridSpec {
    pub fn new(nx: usize, nt: usize, t_max: f64) -> Self {
        Self { nx, nt, x_margin: 1e-3, t_min: 1e-3, t_max }
    }

    pub fn xs(&self, r: f64) -> Vec<f64> {
        let x_max = r * (1.0 - self.x_margin);
        uniform(-x_max, x_max, self.nx)
    }

    pub fn ts(&self) -> Vec<f64> {
        uniform(self.t_min, self.t_max, self.nt)
    }

    /// Halved spacing in both directions; contains the original nodes.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx.max(2) - 1,
            nt: 2 * self.nt.max(2) - 1,
            ..*self
        }
    }

    pub(crate) fn points(&self, r: f64) -> Vec<(f64, f64)> {
        let xs = self.xs(r);
        let ts = self.ts();
        ts.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).collect()
    }
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![b],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub x: f64,
    pub t: f64,
    pub residual: f64,
}

/// Per-term worst cases of the five-way split for the second family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm3Diagnostics {
    /// Worst value of each split inequality (divided by `psi`).
    pub worst_w: [f64; 5],
    /// Worst value of `(L psi - psi_t + F(psi)) / psi`.
    pub aggregate_max: f64,
    pub m0: f64,
    pub c0_const: f64,
    /// Points on each side of the `psi = M0` splice.
    pub below_m0: usize,
    pub above_m0: usize,
    /// Smallest `(phi - 1) / phi` over points with `psi >= M0`.
    pub c0_empirical: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub nx: usize,
    pub nt: usize,
    pub margins: Margins,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margins {
    pub x: f64,
    pub t: f64,
}

impl From<&GridSpec> for GridInfo {
    fn from(g: &GridSpec) -> Self {
        Self {
            nx: g.nx,
            nt: g.nt,
            margins: Margins { x: g.x_margin, t: g.t_min },
            t_max: g.t_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstPoint {
    pub x: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub schema: u32,
    pub family: Family,
    #[serde(rename = "R")]
    pub r: f64,
    pub l: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub m: usize,
    pub grid: GridInfo,
    /// Grid of the refinement check; absent when the base grid already fails.
    pub refined_grid: Option<GridInfo>,
    /// Largest `|x|` at which the barrier was representable.
    pub x_window: f64,
    /// Grid points skipped as not representable in floating point.
    pub skipped: usize,
    pub max_residual: f64,
    pub sign_certified: bool,
    pub worst_point: WorstPoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thm3: Option<Thm3Diagnostics>,
    #[serde(skip)]
    pub points: Vec<ResidualPoint>,
}

/// Max-reduction of one grid sweep.
#[derive(Debug, Clone)]
pub(crate) struct Sweep {
    pub points: Vec<ResidualPoint>,
    pub max: f64,
    pub worst: (f64, f64),
    pub x_window: f64,
    pub skipped: usize,
}

impl Sweep {
    pub fn from_points(all: Vec<(f64, f64, Option<f64>)>) -> Self {
        let mut s = Sweep { points: Vec::with_capacity(all.len()), max: f64::NEG_INFINITY, worst: (0.0, 0.0), x_window: 0.0, skipped: 0 };
        for (x, t, r) in all {
            match r {
                Some(r) if !r.is_nan() => {
                    if r > s.max {
                        s.max = r;
                        s.worst = (x, t);
                    }
                    s.x_window = s.x_window.max(x.abs());
                    s.points.push(ResidualPoint { x, t, residual: r });
                }
                _ => s.skipped += 1,
            }
        }
        s
    }
}

impl ResidualReport {
    pub(crate) fn assemble(p: &BarrierParams, grid: &GridSpec, base: Sweep, refined: Option<Sweep>) -> Self {
        let refined_grid = refined.as_ref().map(|_| GridInfo::from(&grid.refined()));
        let (max, worst, x_window, skipped, points) = match refined {
            Some(r) if r.max > base.max => (r.max, r.worst, base.x_window.min(r.x_window), base.skipped + r.skipped, base.points),
            Some(r) => (base.max, base.worst, base.x_window.min(r.x_window), base.skipped + r.skipped, base.points),
            None => (base.max, base.worst, base.x_window, base.skipped, base.points),
        };
        let certified = max <= 0.0 && refined_grid.is_some() && !points.is_empty() && (p.m >= 1 || skipped == 0);
        ResidualReport {
            schema: 1,
            family: p.family,
            r: p.r,
            l: p.l,
            k: p.k,
            m: p.m,
            grid: GridInfo::from(grid),
            refined_grid,
            x_window,
            skipped,
            max_residual: max,
            sign_certified: certified,
            worst_point: WorstPoint { x: worst.0, t: worst.1 },
            thm3: None,
            points,
        }
    }

    /// `x,t,residual` rows of the base grid.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,t,residual\n");
        for p in &self.points {
            let _ = writeln!(s, "{:.17e},{:.17e},{:.17e}", p.x, p.t, p.residual);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
