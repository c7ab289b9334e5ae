//! Config parsing: term and operator catalogs plus `[scenario.<id>]` tables.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rdlab::nonlinearity::{CoeffSpec, ReactionTerm, TermSpec};
use rdlab::pde_lab::Operator1D;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::Value;

use crate::error::{io_err, CliError, Result};
use crate::rates::RateExpr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    ClassifyTerm,
    OsgoodDichotomy,
    VInfinityCurve,
    Thm1Certificate,
    Thm3Certificate,
    StationaryResiduals,
    UniversalCollapse,
    UniquenessProbe,
    NonuniquenessWitness,
    LongtimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Num,
    Int,
    Str,
    Bool,
    NumList,
    IntList,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Ty::Num => "number",
            Ty::Int => "integer",
            Ty::Str => "string",
            Ty::Bool => "bool",
            Ty::NumList => "number list",
            Ty::IntList => "integer list",
        };
        f.write_str(s)
    }
}

/// One scenario parameter. `default = None` means required; defaults are
/// TOML literals.
#[derive(Debug, Clone, Copy)]
pub struct ParamDef {
    pub name: &'static str,
    pub ty: Ty,
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

const fn p(name: &'static str, ty: Ty, default: Option<&'static str>, doc: &'static str) -> ParamDef {
    ParamDef { name, ty, default, doc }
}

fn certificate_params(r: &'static str) -> Vec<ParamDef> {
    vec![
        p("term", Ty::Str, None, "reaction term id"),
        p("operator", Ty::Str, Some("\"laplacian\""), "operator id"),
        p("R", Ty::Num, Some(r), "barrier radius"),
        p("l", Ty::Num, Some("3.0"), "barrier exponent"),
        p("m", Ty::Int, Some("0"), "iterated-log depth"),
        p("eps", Ty::Num, Some("1.0"), "growth exponent"),
        p("nx", Ty::Int, Some("201"), "x grid points"),
        p("nt", Ty::Int, Some("50"), "t grid points"),
        p("t_max", Ty::Num, Some("1.0"), "last residual time"),
        p("K", Ty::Num, Some("nan"), "fixed K; nan searches"),
        p("k_lo", Ty::Num, Some("0.0"), "K search lower end"),
        p("k_hi", Ty::Num, Some("1e6"), "K search upper end"),
        p("k_rel", Ty::Num, Some("1e-3"), "relative bisection tolerance"),
    ]
}

fn ladder_params() -> Vec<ParamDef> {
    vec![
        p("m_ladder", Ty::IntList, Some("[2, 4, 8]"), "annulus parameters m"),
        p("k0", Ty::Num, Some("10.0"), "first forcing level"),
        p("k_factor", Ty::Num, Some("4.0"), "forcing ladder ratio"),
        p("k_count", Ty::Int, Some("14"), "forcing ladder length"),
        p("dx", Ty::Num, Some("0.05"), "grid spacing"),
        p("probe_x", Ty::Num, Some("0.0"), "probe point"),
        p("probe_t", Ty::Num, Some("1.0"), "probe time"),
        p("dt_max", Ty::Num, Some("1e-3"), "largest time step"),
        p("theta", Ty::Num, Some("1e-3"), "nontrivial threshold"),
        p("decay", Ty::Num, Some("1e-2"), "vanishing factor below theta"),
        p("decay_ratio", Ty::Num, Some("0.5"), "per-rung decay ratio for vanishing"),
        p("contraction", Ty::Num, Some("0.75"), "per-rung contraction for a witness"),
        p("k_rel", Ty::Num, Some("1e-3"), "relative change stopping the forcing ladder"),
    ]
}

impl Kind {
    pub const ALL: [Kind; 10] = [
        Kind::ClassifyTerm,
        Kind::OsgoodDichotomy,
        Kind::VInfinityCurve,
        Kind::Thm1Certificate,
        Kind::Thm3Certificate,
        Kind::StationaryResiduals,
        Kind::UniversalCollapse,
        Kind::UniquenessProbe,
        Kind::NonuniquenessWitness,
        Kind::LongtimeLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::ClassifyTerm => "ClassifyTerm",
            Kind::OsgoodDichotomy => "OsgoodDichotomy",
            Kind::VInfinityCurve => "VInfinityCurve",
            Kind::Thm1Certificate => "Thm1Certificate",
            Kind::Thm3Certificate => "Thm3Certificate",
            Kind::StationaryResiduals => "StationaryResiduals",
            Kind::UniversalCollapse => "UniversalCollapse",
            Kind::UniquenessProbe => "UniquenessProbe",
            Kind::NonuniquenessWitness => "NonuniquenessWitness",
            Kind::LongtimeLimit => "LongtimeLimit",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn params(self) -> Vec<ParamDef> {
        match self {
            Kind::ClassifyTerm => vec![
                p("term", Ty::Str, None, "reaction term id"),
                p("radius", Ty::Num, Some("inf"), "envelope radius R"),
                p("m", Ty::Int, Some("0"), "iterated-log depth"),
                p("eps", Ty::Num, Some("1.0"), "growth exponent"),
                p("extended", Ty::Bool, Some("true"), "add probes beyond the f64 range"),
                p("x_probes", Ty::Int, Some("201"), "x probes for grid envelopes"),
                p("u0", Ty::Num, Some("10.0"), "lower limit of the tail integral"),
                p("expect", Ty::Str, Some("\"\""), "SatisfiesF2, FailsF2 or Inconclusive; empty skips"),
            ],
            Kind::OsgoodDichotomy => vec![
                p("rate", Ty::Str, None, "rate G"),
                p("u0", Ty::Num, Some("10.0"), "lower limit of the tail integral"),
                p("t", Ty::Num, Some("1.0"), "dichotomy time"),
                p("c_max", Ty::Num, Some("1e6"), "largest initial value"),
                p("c_count", Ty::Int, Some("7"), "initial values, log-spaced from 1"),
                p("tol", Ty::Num, Some("0.02"), "settling tolerance on ln v"),
                p("expect", Ty::Str, Some("\"\""), "Convergent or Divergent; empty skips"),
            ],
            Kind::VInfinityCurve => vec![
                p("rate", Ty::Str, None, "rate G"),
                p("t_min", Ty::Num, Some("0.01"), "first time"),
                p("t_max", Ty::Num, Some("2.0"), "last time"),
                p("nt", Ty::Int, Some("100"), "time points, log-spaced"),
                p("tol", Ty::Num, Some("1e-8"), "relative tolerance"),
            ],
            Kind::Thm1Certificate => certificate_params("1.0"),
            Kind::Thm3Certificate => {
                let mut v = certificate_params("2.0");
                v.push(p("ladder", Ty::Int, Some("3"), "radius doublings checked with the same K"));
                v.push(p("radius", Ty::Num, Some("inf"), "envelope radius"));
                v
            }
            Kind::StationaryResiduals => vec![
                p("witness", Ty::Str, None, "ex1, ex2 or ex3"),
                p("level", Ty::Int, Some("1"), "ex1 tower level"),
                p("shift", Ty::Num, Some("0.0"), "ex1 shift"),
                p("eps", Ty::Num, Some("1.0"), "ex2/ex3 exponent"),
                p("x_min", Ty::Num, Some("-3.0"), "grid start"),
                p("x_max", Ty::Num, Some("3.0"), "grid end"),
                p("n", Ty::Int, Some("601"), "grid points"),
                p("tol", Ty::Num, Some("1e-9"), "relative residual bound"),
            ],
            Kind::UniversalCollapse => vec![
                p("term", Ty::Str, None, "reaction term id"),
                p("operator", Ty::Str, Some("\"laplacian\""), "operator id"),
                p("amplitudes", Ty::NumList, Some("[1e2, 1e4, 1e6, 1e8]"), "constant data A"),
                p("half_width", Ty::Num, Some("1.0"), "domain [-h, h]"),
                p("nx", Ty::Int, Some("201"), "grid points"),
                p("t", Ty::Num, Some("0.1"), "probe time"),
                p("dt_max", Ty::Num, Some("1e-3"), "largest time step"),
                p("boundary", Ty::Str, Some("\"data\""), "data (u = A) or zero"),
                p("shrink", Ty::Num, Some("5.0"), "required shrink factor of successive gains"),
            ],
            Kind::UniquenessProbe => {
                let mut v = vec![
                    p("term", Ty::Str, None, "reaction term id"),
                    p("operator", Ty::Str, Some("\"laplacian\""), "operator id"),
                    p("expect", Ty::Str, Some("\"\""), "NoNontrivialFound or NontrivialWitness; empty skips"),
                ];
                v.extend(ladder_params());
                v
            }
            Kind::NonuniquenessWitness => {
                let mut v = vec![
                    p("witness", Ty::Str, None, "ex2 or ex3"),
                    p("eps", Ty::Num, Some("1.0"), "witness exponent"),
                    p("delta", Ty::Num, Some("1e-3"), "ex3 regularization near u = 0"),
                    p("check_upper_bound", Ty::Bool, Some("false"), "also require probe <= v_inf(probe_t)"),
                ];
                v.extend(ladder_params());
                v
            }
            Kind::LongtimeLimit => vec![
                p("rate", Ty::Str, None, "rate G"),
                p("tol", Ty::Num, Some("1e-5"), "settling tolerance"),
                p("fallback", Ty::Bool, Some("true"), "use v_c from c = 1e6 when v_inf does not exist"),
                p("agree_tol", Ty::Num, Some("1e-4"), "bound on |limit - c0|"),
            ],
        }
    }

    /// Artifact files written per scenario, relative to its directory.
    pub fn artifacts(self) -> &'static [&'static str] {
        match self {
            Kind::ClassifyTerm => &["classification.json"],
            Kind::OsgoodDichotomy => &["osgood.json", "dichotomy.csv"],
            Kind::VInfinityCurve => &["v_infinity.csv"],
            Kind::Thm1Certificate => &["residual.json", "residual.csv"],
            Kind::Thm3Certificate => &["ladder.json", "residual_R<r>.csv"],
            Kind::StationaryResiduals => &["residuals.json", "residuals.csv"],
            Kind::UniversalCollapse => &["collapse.json", "collapse.csv"],
            Kind::UniquenessProbe | Kind::NonuniquenessWitness => &["report.json", "ladder.csv"],
            Kind::LongtimeLimit => &["longtime.json"],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resolved parameters: every declared name is present, type-checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Params(BTreeMap<String, Value>);

impl Params {
    fn get(&self, name: &str) -> &Value {
        self.0.get(name).unwrap_or_else(|| panic!("parameter `{name}` is not declared"))
    }

    pub fn num(&self, name: &str) -> f64 {
        as_num(self.get(name)).expect("validated number")
    }

    pub fn int(&self, name: &str) -> usize {
        self.get(name).as_integer().expect("validated integer") as usize
    }

    pub fn str(&self, name: &str) -> &str {
        self.get(name).as_str().expect("validated string")
    }

    pub fn bool(&self, name: &str) -> bool {
        self.get(name).as_bool().expect("validated bool")
    }

    pub fn nums(&self, name: &str) -> Vec<f64> {
        self.get(name).as_array().expect("validated list").iter().map(|v| as_num(v).expect("validated number")).collect()
    }

    pub fn ints(&self, name: &str) -> Vec<usize> {
        self.get(name).as_array().expect("validated list").iter().map(|v| v.as_integer().expect("validated integer") as usize).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    /// Plain JSON copy for manifests.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.0).expect("toml values convert to json")
    }
}

fn as_num(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn type_ok(ty: Ty, v: &Value) -> bool {
    let nonneg_int = |v: &Value| v.as_integer().is_some_and(|i| i >= 0);
    match ty {
        Ty::Num => as_num(v).is_some(),
        Ty::Int => nonneg_int(v),
        Ty::Str => v.is_str(),
        Ty::Bool => v.is_bool(),
        Ty::NumList => v.as_array().is_some_and(|a| a.iter().all(|x| as_num(x).is_some())),
        Ty::IntList => v.as_array().is_some_and(|a| a.iter().all(nonneg_int)),
    }
}

fn literal(lit: &str) -> Value {
    let t: toml::Table = toml::from_str(&format!("v = {lit}")).expect("default literal parses");
    t["v"].clone()
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub kind: Kind,
    pub params: Params,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorSpec {
    #[serde(default)]
    a: Option<CoeffSpec>,
    #[serde(default)]
    b: Option<CoeffSpec>,
}

#[derive(Debug, Clone)]
pub struct Config {
    /// sha256 of the config bytes, lowercase hex.
    pub sha256: String,
    pub terms: BTreeMap<String, ReactionTerm>,
    pub operators: BTreeMap<String, Operator1D>,
    /// Sorted by id.
    pub scenarios: Vec<Scenario>,
}

pub const WITNESSES: [&str; 3] = ["ex1", "ex2", "ex3"];

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| cfg_err(format!("{}: not UTF-8", path.display())))?;
        let mut cfg = Config::parse(&text)?;
        cfg.sha256 = sha256_hex(&bytes);
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Config> {
        let root: toml::Table = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        for key in root.keys() {
            if !matches!(key.as_str(), "term" | "operator" | "scenario") {
                return Err(cfg_err(format!("unknown top-level key `{key}`")));
            }
        }
        let section = |name: &str| -> Result<toml::Table> {
            match root.get(name) {
                None => Ok(toml::Table::new()),
                Some(Value::Table(t)) => Ok(t.clone()),
                Some(_) => Err(cfg_err(format!("`{name}` must be a table of tables"))),
            }
        };

        let mut terms = BTreeMap::new();
        for (id, v) in section("term")? {
            let mut spec: TermSpec = v.try_into().map_err(|e| cfg_err(format!("term.{id}: {e}")))?;
            spec.id.get_or_insert_with(|| id.clone());
            let term = ReactionTerm::from_spec(&spec).map_err(|e| cfg_err(format!("term.{id}: {e}")))?;
            terms.insert(id, term);
        }

        let mut operators = BTreeMap::new();
        operators.insert("laplacian".to_string(), Operator1D::laplacian());
        for (id, v) in section("operator")? {
            let spec: OperatorSpec = v.try_into().map_err(|e| cfg_err(format!("operator.{id}: {e}")))?;
            let coef = |c: Option<CoeffSpec>, d: f64, key: &str| {
                c.unwrap_or(CoeffSpec::Number(d)).to_coefficient().map_err(|e| cfg_err(format!("operator.{id}.{key}: {e}")))
            };
            let op = Operator1D::new(coef(spec.a, 1.0, "a")?, coef(spec.b, 0.0, "b")?);
            operators.insert(id, op);
        }

        let mut scenarios = Vec::new();
        for (id, v) in section("scenario")? {
            if !valid_id(&id) {
                return Err(cfg_err(format!("scenario.{id}: ids use letters, digits, `_` and `-`")));
            }
            let Value::Table(table) = v else {
                return Err(cfg_err(format!("scenario.{id} must be a table")));
            };
            let kind_name = table
                .get("kind")
                .and_then(Value::as_str)
                .ok_or_else(|| cfg_err(format!("scenario.{id}.kind: missing or not a string")))?;
            let kind = Kind::parse(kind_name).ok_or_else(|| {
                let all: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
                cfg_err(format!("scenario.{id}.kind: unknown kind `{kind_name}` (expected one of {})", all.join(", ")))
            })?;
            let defs = kind.params();
            let mut resolved = BTreeMap::new();
            for (key, value) in &table {
                if key == "kind" {
                    continue;
                }
                let def = defs
                    .iter()
                    .find(|d| d.name == key)
                    .ok_or_else(|| cfg_err(format!("scenario.{id}.{key}: unknown parameter for {kind}")))?;
                if !type_ok(def.ty, value) {
                    return Err(cfg_err(format!("scenario.{id}.{key}: expected {}", def.ty)));
                }
                resolved.insert(key.clone(), value.clone());
            }
            for def in &defs {
                if !resolved.contains_key(def.name) {
                    let lit = def.default.ok_or_else(|| cfg_err(format!("scenario.{id}.{}: required parameter missing", def.name)))?;
                    resolved.insert(def.name.to_string(), literal(lit));
                }
            }
            let params = Params(resolved);
            check_refs(&id, &params, &terms, &operators)?;
            scenarios.push(Scenario { id, kind, params });
        }
        Ok(Config { sha256: sha256_hex(text.as_bytes()), terms, operators, scenarios })
    }
}

fn check_refs(id: &str, params: &Params, terms: &BTreeMap<String, ReactionTerm>, ops: &BTreeMap<String, Operator1D>) -> Result<()> {
    for (key, value) in params.iter() {
        let Some(s) = value.as_str() else { continue };
        match key.as_str() {
            "term" if !terms.contains_key(s) => return Err(cfg_err(format!("scenario.{id}.term: no term `{s}` in the catalog"))),
            "operator" if !ops.contains_key(s) => {
                return Err(cfg_err(format!("scenario.{id}.operator: no operator `{s}` in the catalog")))
            }
            "witness" if !WITNESSES.contains(&s) => return Err(cfg_err(format!("scenario.{id}.witness: unknown witness `{s}`"))),
            "rate" => {
                let expr = RateExpr::parse(s).map_err(|e| cfg_err(format!("scenario.{id}.rate: {e}")))?;
                if let RateExpr::Term(t) = &expr {
                    if !terms.contains_key(t) {
                        return Err(cfg_err(format!("scenario.{id}.rate: no term `{t}` in the catalog")));
                    }
                }
            }
            "boundary" if !matches!(s, "data" | "zero") => return Err(cfg_err(format!("scenario.{id}.boundary: expected data or zero"))),
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = Config::parse(
            "[term.sq]\nkind = \"linear_minus_power\"\np = 2\n\n[scenario.a]\nkind = \"ClassifyTerm\"\nterm = \"sq\"\neps = 2\n",
        )
        .unwrap();
        let s = &cfg.scenarios[0];
        assert_eq!(s.kind, Kind::ClassifyTerm);
        assert_eq!(s.params.num("eps"), 2.0);
        assert!(s.params.num("radius").is_infinite());
        assert!(s.params.bool("extended"));
    }

    #[test]
    fn unknown_kind_names_the_key() {
        let e = Config::parse("[scenario.bad]\nkind = \"Nope\"\n").unwrap_err().to_string();
        assert!(e.contains("scenario.bad.kind"), "{e}");
        assert!(e.contains("Nope"), "{e}");
    }

    #[test]
    fn unknown_parameter_and_dangling_term() {
        let e = Config::parse("[scenario.x]\nkind = \"VInfinityCurve\"\nrate = \"power(2)\"\nfoo = 1\n").unwrap_err();
        assert!(e.to_string().contains("scenario.x.foo"));
        let e = Config::parse("[scenario.x]\nkind = \"ClassifyTerm\"\nterm = \"missing\"\n").unwrap_err();
        assert!(e.to_string().contains("no term `missing`"));
        let e = Config::parse("[scenario.x]\nkind = \"VInfinityCurve\"\nrate = \"power(2)\"\nnt = -1\n").unwrap_err();
        assert!(e.to_string().contains("expected integer"));
    }

    #[test]
    fn empty_config() {
        let cfg = Config::parse("").unwrap();
        assert!(cfg.scenarios.is_empty());
        assert!(cfg.operators.contains_key("laplacian"));
    }
}
