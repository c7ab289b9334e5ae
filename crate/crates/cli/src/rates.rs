//! Rate expressions for the ODE scenarios.
//!
//! * `power(p)`: `-u^p`
//! * `power_log(coef, u_pow, l1, l2, ...)`: `-coef u^u_pow prod (log^(i) u)^li`
//! * `growth_model(m, eps)`, `log_product(m)`
//! * `shifted_log(coef, pow)`: `-coef u ln(e + u)^pow`
//! * `poly(c0, c1, ...)`: `sum ci u^i`
//! * `term:<id>`: the envelope `sup_x f(x, u)` of a catalog term

use std::collections::BTreeMap;

use rdlab::nonlinearity::{envelope, Envelope, ReactionTerm};
use rdlab::rate::{PowerLogRate, Rate, ShiftedLogRate};

#[derive(Debug, Clone, PartialEq)]
pub enum RateExpr {
    PowerLog(f64, f64, Vec<f64>),
    GrowthModel(usize, f64),
    LogProduct(usize),
    ShiftedLog(f64, f64),
    Poly(Vec<f64>),
    Term(String),
}

impl RateExpr {
    pub fn parse(s: &str) -> Result<RateExpr, String> {
        let s = s.trim();
        if let Some(id) = s.strip_prefix("term:") {
            return Ok(RateExpr::Term(id.trim().to_string()));
        }
        let bad = || format!("cannot parse rate `{s}`");
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<f64> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let count = |v: f64| -> Result<usize, String> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(format!("`{s}`: {v} is not a count"))
            }
        };
        match (name.trim(), args.as_slice()) {
            ("power", [p]) => Ok(RateExpr::PowerLog(1.0, *p, vec![])),
            ("power_log", [c, q, logs @ ..]) => Ok(RateExpr::PowerLog(*c, *q, logs.to_vec())),
            ("growth_model", [m, eps]) => Ok(RateExpr::GrowthModel(count(*m)?, *eps)),
            ("log_product", [m]) => Ok(RateExpr::LogProduct(count(*m)?)),
            ("shifted_log", [c, q]) => Ok(RateExpr::ShiftedLog(*c, *q)),
            ("poly", cs) if !cs.is_empty() => Ok(RateExpr::Poly(cs.to_vec())),
            _ => Err(bad()),
        }
    }

    pub fn build(&self, terms: &BTreeMap<String, ReactionTerm>) -> rdlab::Result<BuiltRate> {
        Ok(match self {
            RateExpr::PowerLog(c, q, logs) => BuiltRate::PowerLog(PowerLogRate::new(*c, *q, logs.clone())),
            RateExpr::GrowthModel(m, eps) => BuiltRate::PowerLog(PowerLogRate::growth_model(*m, *eps)),
            RateExpr::LogProduct(m) => BuiltRate::PowerLog(PowerLogRate::log_product(*m)),
            RateExpr::ShiftedLog(c, q) => BuiltRate::ShiftedLog(ShiftedLogRate::new(*c, *q)),
            RateExpr::Poly(cs) => BuiltRate::Poly(cs.clone()),
            RateExpr::Term(id) => {
                let term = terms.get(id).ok_or_else(|| rdlab::Error::Invalid(format!("no term `{id}`")))?;
                BuiltRate::Envelope(Box::new(envelope(term, f64::INFINITY, 201)?))
            }
        })
    }
}

pub enum BuiltRate {
    PowerLog(PowerLogRate),
    ShiftedLog(ShiftedLogRate),
    Poly(Vec<f64>),
    Envelope(Box<Envelope>),
}

impl Rate for BuiltRate {
    fn eval(&self, u: f64) -> f64 {
        match self {
            BuiltRate::PowerLog(g) => g.eval(u),
            BuiltRate::ShiftedLog(g) => g.eval(u),
            BuiltRate::Poly(cs) => cs.iter().rev().fold(0.0, |acc, c| acc * u + c),
            BuiltRate::Envelope(g) => g.eval(u),
        }
    }

    fn per_unit_ln(&self, ln_u: f64) -> f64 {
        match self {
            BuiltRate::PowerLog(g) => g.per_unit_ln(ln_u),
            BuiltRate::ShiftedLog(g) => g.per_unit_ln(ln_u),
            BuiltRate::Envelope(g) => g.per_unit_ln(ln_u),
            BuiltRate::Poly(_) => {
                let u = ln_u.exp();
                if u.is_finite() && u > 0.0 {
                    self.eval(u) / u
                } else {
                    f64::NAN
                }
            }
        }
    }

    fn domain_min(&self) -> f64 {
        match self {
            BuiltRate::PowerLog(g) => g.domain_min(),
            BuiltRate::ShiftedLog(g) => g.domain_min(),
            BuiltRate::Envelope(g) => g.domain_min(),
            BuiltRate::Poly(_) => 0.0,
        }
    }

    fn label(&self) -> String {
        match self {
            BuiltRate::PowerLog(g) => g.label(),
            BuiltRate::ShiftedLog(g) => g.label(),
            BuiltRate::Envelope(g) => g.label(),
            BuiltRate::Poly(cs) => format!("poly{cs:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(RateExpr::parse("power(2)").unwrap(), RateExpr::PowerLog(1.0, 2.0, vec![]));
        assert_eq!(RateExpr::parse("power_log(1, 1, 3)").unwrap(), RateExpr::PowerLog(1.0, 1.0, vec![3.0]));
        assert_eq!(RateExpr::parse("term: sq").unwrap(), RateExpr::Term("sq".into()));
        assert!(RateExpr::parse("log_product(1.5)").is_err());
        assert!(RateExpr::parse("cosh(1)").is_err());
    }

    #[test]
    fn polynomial_values() {
        let g = RateExpr::parse("poly(0, -2, 3, -1)").unwrap().build(&BTreeMap::new()).unwrap();
        for u in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let want = -u * (u - 1.0) * (u - 2.0);
            assert!((g.eval(u) - want).abs() < 1e-12);
        }
    }
}
