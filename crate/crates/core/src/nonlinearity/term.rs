use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::iter_exp;
use crate::coeff::Coefficient;
use crate::error::{Error, Result};
use crate::rate::ln_e_plus_exp;

pub type TermFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Structure of the absorption part of `f(x, u) = V(x) u - gamma(x) A(u)`.
#[derive(Clone)]
pub enum TermKind {
    /// `A(u) = u^p`, `p > 1`.
    LinearMinusPower { p: f64 },
    /// `A(u) = u (prod_{i<=m} log^(i) u)^2 (log^(m+1) u)^(2+eps)` above the
    /// splice point `2 exp^(m+1)(0)`, linear through the origin below it.
    LinearMinusIterLog { m: usize, eps: f64 },
    /// Tabulated `A(u)` with linear interpolation, `A(0) = 0` prepended when
    /// missing, and linear extrapolation past the last node.
    ExplicitTable { u: Vec<f64>, a: Vec<f64> },
    /// Arbitrary evaluator; `V` and `gamma` are ignored.
    Custom {
        eval: TermFn,
        /// `f(x, u) / u` given `(x, ln u)`, for huge arguments.
        per_unit_ln: Option<TermFn>,
        x_independent: bool,
    },
}

#[derive(Clone)]
pub struct ReactionTerm {
    pub id: String,
    pub kind: TermKind,
    pub v: Coefficient,
    pub gamma: Coefficient,
}

impl fmt::Debug for ReactionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            TermKind::LinearMinusPower { p } => format!("LinearMinusPower(p={p})"),
            TermKind::LinearMinusIterLog { m, eps } => format!("LinearMinusIterLog(m={m}, eps={eps})"),
            TermKind::ExplicitTable { u, .. } => format!("ExplicitTable({} nodes)", u.len()),
            TermKind::Custom { x_independent, .. } => format!("Custom(x_independent={x_independent})"),
        };
        f.debug_struct("ReactionTerm")
            .field("id", &self.id)
            .field("kind", &kind)
            .field("v", &self.v)
            .field("gamma", &self.gamma)
            .finish()
    }
}

impl ReactionTerm {
    /// `V(x) u - gamma(x) u^p`
    pub fn power(id: impl Into<String>, v: impl Into<Coefficient>, gamma: impl Into<Coefficient>, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Invalid(format!("power p = {p} must exceed 1")));
        }
        Ok(Self {
            id: id.into(),
            kind: TermKind::LinearMinusPower { p },
            v: v.into(),
            gamma: gamma.into(),
        })
    }

    /// `V(x) u - gamma(x) u (prod log^(i) u)^2 (log^(m+1) u)^(2+eps)`, spliced below.
    pub fn iter_log(id: impl Into<String>, v: impl Into<Coefficient>, gamma: impl Into<Coefficient>, m: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Invalid(format!("eps = {eps} must be positive")));
        }
        iter_exp(m + 1, 0.0)?;
        Ok(Self {
            id: id.into(),
            kind: TermKind::LinearMinusIterLog { m, eps },
            v: v.into(),
            gamma: gamma.into(),
        })
    }

    pub fn table(id: impl Into<String>, v: impl Into<Coefficient>, gamma: impl Into<Coefficient>, u: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if u.len() != a.len() || u.is_empty() {
            return Err(Error::Invalid("table needs equally many u and A nodes".into()));
        }
        if u.windows(2).any(|w| !(w[1] > w[0])) || u[0] < 0.0 {
            return Err(Error::Invalid("table u nodes must be nonnegative and strictly increasing".into()));
        }
        let (mut u, mut a) = (u, a);
        if u[0] > 0.0 {
            u.insert(0, 0.0);
            a.insert(0, 0.0);
        } else if a[0] != 0.0 {
            return Err(Error::Invalid("table must have A(0) = 0".into()));
        }
        if u.len() < 2 {
            return Err(Error::Invalid("table needs a positive node".into()));
        }
        Ok(Self {
            id: id.into(),
            kind: TermKind::ExplicitTable { u, a },
            v: v.into(),
            gamma: gamma.into(),
        })
    }

    pub fn custom(id: impl Into<String>, x_independent: bool, eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            id: id.into(),
            kind: TermKind::Custom {
                eval: Arc::new(eval),
                per_unit_ln: None,
                x_independent,
            },
            v: Coefficient::Constant(0.0),
            gamma: Coefficient::Constant(1.0),
        }
    }

    pub fn with_per_unit_ln(mut self, g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        if let TermKind::Custom { per_unit_ln, .. } = &mut self.kind {
            *per_unit_ln = Some(Arc::new(g));
        }
        self
    }

    /// `-coef * u * (ln(e + u))^pow`, x-independent, with a log-space evaluator.
    pub fn shifted_log(id: impl Into<String>, coef: f64, pow: f64) -> Self {
        Self::custom(id, true, move |_, u| {
            if u == 0.0 {
                0.0
            } else {
                -coef * u * (std::f64::consts::E + u.abs()).ln().powf(pow)
            }
        })
        .with_per_unit_ln(move |_, ln_u| -coef * ln_e_plus_exp(ln_u).powf(pow))
    }

    /// `rate * u`, x-independent.
    pub fn linear(id: impl Into<String>, rate: f64) -> Self {
        Self::custom(id, true, move |_, u| rate * u).with_per_unit_ln(move |_, _| rate)
    }

    pub fn zero(id: impl Into<String>) -> Self {
        Self::custom(id, true, |_, _| 0.0).with_per_unit_ln(|_, _| 0.0)
    }

    pub fn is_x_independent(&self) -> bool {
        match &self.kind {
            TermKind::Custom { x_independent, .. } => *x_independent,
            _ => self.v.is_constant() && self.gamma.is_constant(),
        }
    }

    /// Splice point of the iterated-log kind.
    pub fn splice_point(m: usize) -> f64 {
        2.0 * iter_exp(m + 1, 0.0).expect("small tower")
    }

    /// `A(u) / u` for the structured kinds, `u >= 0`, evaluated from `ln u`.
    pub(crate) fn absorption_per_unit_ln(&self, ln_u: f64) -> f64 {
        match &self.kind {
            TermKind::LinearMinusPower { p } => ((p - 1.0) * ln_u).exp(),
            TermKind::LinearMinusIterLog { m, eps } => {
                let us = Self::splice_point(*m);
                let l = if ln_u >= us.ln() { ln_u } else { us.ln() };
                iter_log_model_per_unit_ln(*m, *eps, l)
            }
            TermKind::ExplicitTable { .. } => {
                let u = ln_u.exp();
                if u == 0.0 {
                    self.table_slope0()
                } else {
                    self.absorption(u) / u
                }
            }
            TermKind::Custom { .. } => unreachable!("custom terms have no absorption split"),
        }
    }

    fn table_slope0(&self) -> f64 {
        match &self.kind {
            TermKind::ExplicitTable { u, a } => (a[1] - a[0]) / (u[1] - u[0]),
            _ => 0.0,
        }
    }

    /// `A(u)`, extended oddly to `u < 0`.
    pub fn absorption(&self, u: f64) -> f64 {
        if u < 0.0 {
            return -self.absorption(-u);
        }
        if u == 0.0 {
            return 0.0;
        }
        match &self.kind {
            TermKind::ExplicitTable { u: us, a } => {
                let n = us.len();
                let k = match us.iter().position(|&x| x > u) {
                    Some(0) => 0,
                    Some(k) => k - 1,
                    None => n - 2,
                };
                let t = (u - us[k]) / (us[k + 1] - us[k]);
                a[k] + t * (a[k + 1] - a[k])
            }
            TermKind::LinearMinusIterLog { m, .. } => {
                let us = Self::splice_point(*m);
                if u >= us {
                    u * self.absorption_per_unit_ln(u.ln())
                } else {
                    u * self.absorption_per_unit_ln(us.ln())
                }
            }
            TermKind::LinearMinusPower { p } => u.powf(*p),
            TermKind::Custom { .. } => unreachable!("custom terms have no absorption split"),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, u: f64) -> f64 {
        match &self.kind {
            TermKind::Custom { eval, .. } => eval(x, u),
            _ => self.v.eval(x) * u - self.gamma.eval(x) * self.absorption(u),
        }
    }

    /// `f(x, u) / u` at `u = exp(ln_u)`; finite far beyond `f64::MAX` for
    /// structured kinds and custom terms with a log-space evaluator.
    pub fn per_unit_ln(&self, x: f64, ln_u: f64) -> f64 {
        match &self.kind {
            TermKind::Custom { eval, per_unit_ln, .. } => match per_unit_ln {
                Some(g) => g(x, ln_u),
                None => {
                    let u = ln_u.exp();
                    if u.is_finite() && u > 0.0 {
                        eval(x, u) / u
                    } else {
                        f64::NAN
                    }
                }
            },
            _ => self.v.eval(x) - self.gamma.eval(x) * self.absorption_per_unit_ln(ln_u),
        }
    }

    /// `df/du` by central differences (one-sided at the origin).
    pub fn du(&self, x: f64, u: f64) -> f64 {
        let h = 1e-6 * u.abs().max(1e-3);
        if u - h < 0.0 && u >= 0.0 {
            (self.eval(x, u + h) - self.eval(x, u)) / h
        } else {
            (self.eval(x, u + h) - self.eval(x, u - h)) / (2.0 * h)
        }
    }

    /// Checks `gamma > 0` (structured kinds) and `f(x, 0) = 0` on the probes.
    pub fn check_invariants(&self, x_probes: &[f64]) -> Result<()> {
        for &x in x_probes {
            if !matches!(self.kind, TermKind::Custom { .. }) && !(self.gamma.eval(x) > 0.0) {
                return Err(Error::Invalid(format!("{}: gamma({x}) is not positive", self.id)));
            }
            let f0 = self.eval(x, 0.0);
            if f0 != 0.0 {
                return Err(Error::Invalid(format!("{}: f({x}, 0) = {f0} != 0", self.id)));
            }
        }
        Ok(())
    }

    /// Largest finite-difference slope `|f(x,u2) - f(x,u1)| / (u2 - u1)` over
    /// adjacent probe values; finite for locally Lipschitz terms.
    pub fn lipschitz_probe(&self, x_probes: &[f64], u_probes: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &x in x_probes {
            for w in u_probes.windows(2) {
                let s = (self.eval(x, w[1]) - self.eval(x, w[0])).abs() / (w[1] - w[0]);
                worst = worst.max(if s.is_nan() { f64::INFINITY } else { s });
            }
        }
        worst
    }

    /// Second-difference concavity test in `u` on the probe box.
    pub fn is_concave_on(&self, x_probes: &[f64], u_probes: &[f64], tol: f64) -> bool {
        x_probes.iter().all(|&x| {
            u_probes.windows(3).all(|w| {
                let (a, b, c) = (w[0], w[1], w[2]);
                let (fa, fb, fc) = (self.eval(x, a), self.eval(x, b), self.eval(x, c));
                // divided second difference
                let d2 = ((fc - fb) / (c - b) - (fb - fa) / (b - a)) / (c - a);
                let scale = 1.0 + fa.abs().max(fb.abs()).max(fc.abs()) / (c - a).powi(2);
                d2 <= tol * scale
            })
        })
    }

    pub fn from_spec(spec: &TermSpec) -> Result<Self> {
        let id = spec.id.clone().unwrap_or_else(|| spec.kind.clone());
        let v = spec.v.as_ref().map(CoeffSpec::to_coefficient).transpose()?.unwrap_or(Coefficient::Constant(0.0));
        let gamma = spec.gamma.as_ref().map(CoeffSpec::to_coefficient).transpose()?.unwrap_or(Coefficient::Constant(1.0));
        let need = |name: &str, x: Option<f64>| x.ok_or_else(|| Error::Invalid(format!("term `{id}`: missing `{name}`")));
        match spec.kind.as_str() {
            "linear_minus_power" => Self::power(id.clone(), v, gamma, need("p", spec.p)?),
            "linear_minus_iter_log" => {
                let m = spec.m.unwrap_or(0);
                Self::iter_log(id.clone(), v, gamma, m, need("eps", spec.eps)?)
            }
            "explicit_table" => Self::table(
                id.clone(),
                v,
                gamma,
                spec.table_u.clone().unwrap_or_default(),
                spec.table_a.clone().unwrap_or_default(),
            ),
            "shifted_log" => Ok(Self::shifted_log(id.clone(), spec.coef.unwrap_or(1.0), need("p", spec.p)?)),
            "linear" => Ok(Self::linear(id.clone(), need("rate", spec.rate)?)),
            "zero" => Ok(Self::zero(id.clone())),
            other => Err(Error::Invalid(format!("term `{id}`: unknown kind `{other}`"))),
        }
    }
}

/// `(prod_{i<=m} log^(i) u)^2 (log^(m+1) u)^(2+eps)` from `ln u`.
pub(crate) fn iter_log_model_per_unit_ln(m: usize, eps: f64, ln_u: f64) -> f64 {
    let mut acc = 0.0;
    let mut lg = ln_u;
    for i in 0..=m {
        if i > 0 {
            lg = lg.ln();
        }
        let p = if i < m { 2.0 } else { 2.0 + eps };
        acc += p * lg.ln();
    }
    acc.exp()
}

/// Declarative description of a catalog term. Deserializable from a TOML/JSON
/// table or parsed from `key = value` lines with [`TermSpec::parse_kv`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default)]
    pub id: Option<String>,
    pub kind: String,
    #[serde(default, rename = "V", alias = "v")]
    pub v: Option<CoeffSpec>,
    #[serde(default)]
    pub gamma: Option<CoeffSpec>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub coef: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub table_u: Option<Vec<f64>>,
    #[serde(default)]
    pub table_a: Option<Vec<f64>>,
}

impl TermSpec {
    /// Parses `key = value` lines. `#` starts a comment; lists are
    /// comma-separated inside brackets; quotes around strings are optional.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut spec = TermSpec::default();
        let mut have_kind = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim().trim_matches('"');
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Invalid(format!("line {}: `{key}` is not a number: {s}", lineno + 1)))
            };
            let list = |s: &str| -> Result<Vec<f64>> {
                s.trim_start_matches('[').trim_end_matches(']').split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
            };
            match key {
                "id" => spec.id = Some(value.to_string()),
                "kind" => {
                    spec.kind = value.to_string();
                    have_kind = true;
                }
                "V" | "v" => spec.v = Some(CoeffSpec::Expr(value.to_string())),
                "gamma" => spec.gamma = Some(CoeffSpec::Expr(value.to_string())),
                "p" => spec.p = Some(num(value)?),
                "m" => spec.m = Some(num(value)? as usize),
                "eps" => spec.eps = Some(num(value)?),
                "coef" => spec.coef = Some(num(value)?),
                "rate" => spec.rate = Some(num(value)?),
                "table_u" => spec.table_u = Some(list(value)?),
                "table_a" => spec.table_a = Some(list(value)?),
                other => return Err(Error::Invalid(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        if !have_kind {
            return Err(Error::Invalid("term block has no `kind`".into()));
        }
        Ok(spec)
    }
}

/// A coefficient as a number or a small expression:
/// `sin(amp)`, `quad(c0, c2)`, `opsq(scale, power)`, `sopsq(scale, power)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffSpec {
    Number(f64),
    Expr(String),
}

impl CoeffSpec {
    pub fn to_coefficient(&self) -> Result<Coefficient> {
        match self {
            CoeffSpec::Number(c) => Ok(Coefficient::Constant(*c)),
            CoeffSpec::Expr(s) => parse_coefficient(s),
        }
    }
}

pub fn parse_coefficient(s: &str) -> Result<Coefficient> {
    let s = s.trim();
    if let Ok(c) = s.parse::<f64>() {
        return Ok(Coefficient::Constant(c));
    }
    let bad = || Error::Invalid(format!("cannot parse coefficient `{s}`"));
    let (name, rest) = s.split_once('(').ok_or_else(bad)?;
    let args: Vec<f64> = rest
        .strip_suffix(')')
        .ok_or_else(bad)?
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match (name.trim(), args.as_slice()) {
        ("sin", [amp]) => Ok(Coefficient::Sin { amp: *amp }),
        ("quad", [c0, c2]) => Ok(Coefficient::Quadratic { c0: *c0, c2: *c2 }),
        ("opsq", [scale, power]) => Ok(Coefficient::OnePlusSqPow { scale: *scale, power: *power }),
        ("sopsq", [scale, power]) => Ok(Coefficient::SignedOnePlusSqPow { scale: *scale, power: *power }),
        _ => Err(bad()),
    }
}
