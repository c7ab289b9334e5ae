//! One executor per scenario kind. Executors are pure: they return artifact
//! bytes and a verdict, and never touch the file system.

use std::fmt::Write as _;
use std::sync::Arc;

use rdlab::barriers::{
    find_k, residual_stationary, BarrierParams, GridSpec, KRange, StationaryWitness, Thm1Problem, Thm3Problem, Witness,
};
use rdlab::nonlinearity::{check_f1, check_f2_ln, default_probes, envelope, osgood_report, shift_envelopes, OsgoodVerdict, ShiftOptions};
use rdlab::ode_oracle::{
    auto_search_hi, dichotomy_ln, largest_root, longtime_limit, longtime_limit_with_fallback, v_infinity, v_infinity_curve,
    DichotomyVerdict, LongtimeResult,
};
use rdlab::pde_lab::{
    solve_dirichlet, uniqueness_probe, Boundary, Domain, LadderOptions, Profile, SolverOptions, UniquenessOptions, UniquenessReport,
    UniquenessVerdict,
};
use rdlab::rate::{Rate, TabulatedRate};
use rdlab::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, Kind, Params, Scenario};
use crate::rates::{BuiltRate, RateExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct Output {
    pub status: Status,
    pub summary: String,
    /// `(file name, bytes)` in write order.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn new(status: Status, summary: impl Into<String>) -> Self {
        Self { status, summary: summary.into(), artifacts: Vec::new() }
    }

    fn with(mut self, name: impl Into<String>, bytes: Vec<u8>) -> Self {
        self.artifacts.push((name.into(), bytes));
        self
    }
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn rate(cfg: &Config, p: &Params) -> Result<BuiltRate> {
    RateExpr::parse(p.str("rate")).map_err(Error::Invalid)?.build(&cfg.terms)
}

/// Runs one scenario. `Inconclusive` errors from the library become an
/// `Inconclusive` status; every other error is returned.
pub fn execute(sc: &Scenario, cfg: &Config) -> Result<Output> {
    let p = &sc.params;
    let r = match sc.kind {
        Kind::ClassifyTerm => classify(cfg, p),
        Kind::OsgoodDichotomy => osgood_dichotomy(cfg, p),
        Kind::VInfinityCurve => vinf_curve(cfg, p),
        Kind::Thm1Certificate => thm1(cfg, p),
        Kind::Thm3Certificate => thm3(cfg, p),
        Kind::StationaryResiduals => stationary(p),
        Kind::UniversalCollapse => collapse(cfg, p),
        Kind::UniquenessProbe => uniqueness(cfg, p),
        Kind::NonuniquenessWitness => nonuniqueness(p),
        Kind::LongtimeLimit => longtime(cfg, p),
    };
    match r {
        Err(Error::Inconclusive(msg)) => Ok(Output::new(Status::Inconclusive, msg)),
        other => other,
    }
}

fn classify(cfg: &Config, p: &Params) -> Result<Output> {
    let id = p.str("term");
    let term = &cfg.terms[id];
    let env = envelope(term, p.num("radius"), p.int("x_probes"))?;
    let f1 = check_f1(&env);
    let f2 = check_f2_ln(&env, p.int("m"), p.num("eps"), &default_probes(p.bool("extended")));
    let osgood = match osgood_report(&env, p.num("u0")) {
        Ok(r) => to_json(&r),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let verdict = format!("{:?}", f2.verdict);
    let expect = p.str("expect");
    let status = if !expect.is_empty() {
        pass_if(verdict == expect)
    } else if verdict == "Inconclusive" {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    let doc = json!({
        "schema": 1,
        "term": id,
        "envelope_method": format!("{:?}", env.method),
        "F1": f1,
        "F2": f2.record(id),
        "F2_reason": f2.reason,
        "osgood": osgood,
    });
    Ok(Output::new(status, format!("{id}: {verdict} (m = {}, eps = {})", f2.m, f2.eps)).with("classification.json", json_bytes(&doc)))
}

fn osgood_dichotomy(cfg: &Config, p: &Params) -> Result<Output> {
    let g = rate(cfg, p)?;
    let os = osgood_report(&g, p.num("u0"))?;
    let convergent = matches!(os.verdict, OsgoodVerdict::Convergent(_));
    let n = p.int("c_count");
    let ln_c: Vec<f64> = linspace(0.0, p.num("c_max").ln(), n);
    let d = dichotomy_ln(&g, p.num("t"), &ln_c, p.num("tol"))?;
    let bounded = matches!(d.verdict, DichotomyVerdict::Bounded(_));
    let expect = p.str("expect");
    let name = if convergent { "Convergent" } else { "Divergent" };
    let ok = bounded == convergent && (expect.is_empty() || expect == name);
    let mut csv = String::from("ln_c,ln_v\n");
    for (c, v) in d.ln_c.iter().zip(&d.ln_values) {
        let _ = writeln!(csv, "{c:.17e},{v:.17e}");
    }
    let doc = json!({ "schema": 1, "rate": g.label(), "osgood": os, "dichotomy": d.verdict, "ln_v_infinity": d.ln_v_infinity });
    Ok(Output::new(pass_if(ok), format!("{}: osgood {name}, dichotomy {:?}", g.label(), d.verdict))
        .with("osgood.json", json_bytes(&doc))
        .with("dichotomy.csv", csv.into_bytes()))
}

fn vinf_curve(cfg: &Config, p: &Params) -> Result<Output> {
    let g = rate(cfg, p)?;
    let (a, b, n) = (p.num("t_min"), p.num("t_max"), p.int("nt"));
    if !(a > 0.0 && b > a) {
        return Err(Error::Invalid(format!("need 0 < t_min < t_max, got {a}, {b}")));
    }
    let ts: Vec<f64> = linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect();
    let sol = v_infinity_curve(&g, &ts, p.num("tol"))?;
    Ok(Output::new(Status::Pass, format!("{}: v_inf({b}) = {:.6e}", g.label(), sol.last())).with("v_infinity.csv", sol.to_csv().into_bytes()))
}

fn grid(p: &Params) -> GridSpec {
    GridSpec::new(p.int("nx"), p.int("nt"), p.num("t_max"))
}

fn k_range(p: &Params) -> KRange {
    KRange { lo: p.num("k_lo"), hi: p.num("k_hi"), rel_tol: p.num("k_rel") }
}

fn thm1(cfg: &Config, p: &Params) -> Result<Output> {
    let term = &cfg.terms[p.str("term")];
    let op = &cfg.operators[p.str("operator")];
    let params = BarrierParams::thm1(p.num("R"), p.num("l"), 0.0, p.int("m"));
    let pr = Thm1Problem::new(params, op, term, p.num("eps"), grid(p))?;
    let fixed = p.num("K");
    let (k, rep) = if fixed.is_nan() { find_k(|k| pr.residual(k), k_range(p))? } else { (fixed, pr.residual(fixed)) };
    let mut json = rep.to_json();
    json.push('\n');
    Ok(Output::new(
        pass_if(rep.sign_certified),
        format!("K = {k}, max residual {:.3e}, certified {}", rep.max_residual, rep.sign_certified),
    )
    .with("residual.json", json.into_bytes())
    .with("residual.csv", rep.to_csv().into_bytes()))
}

fn thm3(cfg: &Config, p: &Params) -> Result<Output> {
    let term = &cfg.terms[p.str("term")];
    let op = &cfg.operators[p.str("operator")];
    let env = envelope(term, p.num("radius"), 201)?;
    let params = BarrierParams::thm3(p.num("R"), p.num("l"), 0.0, p.int("m"));
    let pr = Thm3Problem::new(params, op, env, p.num("eps"), grid(p), None)?;
    let fixed = p.num("K");
    let (k, reports, all) = if fixed.is_nan() {
        let l = pr.find_k_with_ladder(k_range(p), p.int("ladder"))?;
        (l.k, l.reports, l.all_certified)
    } else {
        let mut reports = Vec::new();
        let mut r = p.num("R");
        for _ in 0..=p.int("ladder") {
            reports.push(pr.with_radius(r)?.residual(fixed));
            r *= 2.0;
        }
        let all = reports.iter().all(|r| r.sign_certified);
        (fixed, reports, all)
    };
    let doc = json!({ "schema": 1, "K": k, "all_certified": all, "reports": reports });
    let radii: Vec<String> = reports.iter().map(|r| format!("R={} {}", r.r, r.sign_certified)).collect();
    let mut out = Output::new(pass_if(all), format!("K = {k}; {}", radii.join(", "))).with("ladder.json", json_bytes(&doc));
    for rep in &reports {
        out = out.with(format!("residual_R{}.csv", rep.r), rep.to_csv().into_bytes());
    }
    Ok(out)
}

fn witness(name: &str, p: &Params) -> Result<Witness> {
    match name {
        "ex1" => Ok(Witness::Ex1DoubleExp { level: p.int("level"), shift: p.num("shift") }),
        "ex2" => Ok(Witness::Ex2Quadratic { eps: p.num("eps") }),
        "ex3" => Ok(Witness::Ex3Drifted { eps: p.num("eps") }),
        other => Err(Error::Invalid(format!("unknown witness `{other}`"))),
    }
}

fn stationary(p: &Params) -> Result<Output> {
    let name = p.str("witness");
    let w = StationaryWitness::new(witness(name, p)?)?;
    let xs = linspace(p.num("x_min"), p.num("x_max"), p.int("n"));
    let worst = residual_stationary(&w, &xs)?;
    let mut csv = String::from("x,relative_residual\n");
    for &x in xs.iter().filter(|x| x.abs() >= w.exclude_radius) {
        let _ = writeln!(csv, "{x:.17e},{:.17e}", w.relative_residual(x)?);
    }
    let tol = p.num("tol");
    let doc = json!({
        "schema": 1,
        "witness": w.which,
        "max_relative_residual": worst,
        "tol": tol,
        "points": xs.len(),
        "exclude_radius": w.exclude_radius,
    });
    Ok(Output::new(pass_if(worst <= tol), format!("{name}: max relative residual {worst:.3e} (tol {tol:e})"))
        .with("residuals.json", json_bytes(&doc))
        .with("residuals.csv", csv.into_bytes()))
}

fn collapse(cfg: &Config, p: &Params) -> Result<Output> {
    let term = &cfg.terms[p.str("term")];
    let op = &cfg.operators[p.str("operator")];
    let amps = p.nums("amplitudes");
    if amps.len() < 3 || amps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("need at least three increasing amplitudes".into()));
    }
    let h = p.num("half_width");
    let t = p.num("t");
    let opts = SolverOptions { dt_max: p.num("dt_max"), ..Default::default() };
    let zero = p.str("boundary") == "zero";
    let values = amps
        .iter()
        .map(|&a| {
            let bc = if zero { Boundary::Dirichlet(0.0, 0.0) } else { Boundary::Dirichlet(a, a) };
            Ok(solve_dirichlet(&|_| a, op, term, Domain::new(-h, h, p.int("nx")), &[t], bc, &opts)?.value_at(0, 0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let gains: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let shrink: Vec<f64> = gains.windows(2).map(|w| w[0] / w[1]).collect();
    let need = p.num("shrink");
    let ok = gains.iter().all(|&g| g > 0.0) && shrink.iter().all(|&s| s >= need);
    let mut csv = String::from("A,u\n");
    for (a, u) in amps.iter().zip(&values) {
        let _ = writeln!(csv, "{a:.17e},{u:.17e}");
    }
    let doc = json!({
        "schema": 1,
        "term": term.id,
        "t": t,
        "amplitudes": amps,
        "values": values,
        "gains": gains,
        "shrink_factors": shrink,
        "required_shrink": need,
    });
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    Ok(Output::new(pass_if(ok), format!("u(0,{t}) = [{}]; shrink factors [{}] (need >= {need})", fmt(&values), fmt(&shrink)))
        .with("collapse.json", json_bytes(&doc))
        .with("collapse.csv", csv.into_bytes()))
}

fn ladder_options(p: &Params) -> (UniquenessOptions, Vec<usize>, Vec<f64>) {
    let opts = UniquenessOptions {
        ladder: LadderOptions {
            dx: p.num("dx"),
            probe_x: p.num("probe_x"),
            probe_t: p.num("probe_t"),
            solver: SolverOptions { dt_max: p.num("dt_max"), ..Default::default() },
        },
        theta: p.num("theta"),
        decay: p.num("decay"),
        decay_ratio: p.num("decay_ratio"),
        contraction: p.num("contraction"),
        k_rel: p.num("k_rel"),
    };
    let (k0, f) = (p.num("k0"), p.num("k_factor"));
    let ks = (0..p.int("k_count")).map(|i| k0 * f.powi(i as i32)).collect();
    (opts, p.ints("m_ladder"), ks)
}

fn verdict_name(v: &Option<UniquenessVerdict>) -> &'static str {
    match v {
        Some(UniquenessVerdict::NoNontrivialFound) => "NoNontrivialFound",
        Some(UniquenessVerdict::NontrivialWitness(_)) => "NontrivialWitness",
        None => "Inconclusive",
    }
}

fn ladder_csv(r: &UniquenessReport) -> Vec<u8> {
    let mut csv = String::from("m,k,value\n");
    for rung in &r.rungs {
        for (k, v) in &rung.k_history {
            let _ = writeln!(csv, "{},{k:.17e},{v:.17e}", rung.m);
        }
    }
    csv.into_bytes()
}

fn probes(r: &UniquenessReport) -> String {
    r.rungs.iter().map(|g| format!("m={}: {:.4e}", g.m, g.value)).collect::<Vec<_>>().join(", ")
}

fn uniqueness(cfg: &Config, p: &Params) -> Result<Output> {
    let term = &cfg.terms[p.str("term")];
    let op = &cfg.operators[p.str("operator")];
    let (opts, ms, ks) = ladder_options(p);
    let zero: Profile = Arc::new(|_| 0.0);
    let r = uniqueness_probe(op, term, ("0", zero), &ms, &ks, &opts)?;
    let name = verdict_name(&r.verdict);
    let expect = p.str("expect");
    let status = match (r.verdict, expect.is_empty()) {
        (None, _) => Status::Inconclusive,
        (_, true) => Status::Pass,
        (_, false) => pass_if(name == expect),
    };
    let doc = json!({ "schema": 1, "verdict": name, "report": r });
    Ok(Output::new(status, format!("{name}; {}", probes(&r))).with("report.json", json_bytes(&doc)).with("ladder.csv", ladder_csv(&r)))
}

fn nonuniqueness(p: &Params) -> Result<Output> {
    let name = p.str("witness");
    let which = witness(name, p)?;
    if matches!(which, Witness::Ex1DoubleExp { .. }) {
        return Err(Error::Invalid("the tower witness has no bounded-data forcing problem; use ex2 or ex3".into()));
    }
    let w = Arc::new(StationaryWitness::new(which)?);
    let term = w.evolution_term(p.num("delta"));
    let (opts, ms, ks) = ladder_options(p);
    let wf = w.clone();
    let profile: Profile = Arc::new(move |x| wf.ln_w(x).map(f64::exp).unwrap_or(0.0));
    let label = if name == "ex2" { "1+x^2" } else { "x^2" };
    let r = uniqueness_probe(&w.operator, &term, (label, profile.clone()), &ms, &ks, &opts)?;

    // upper comparison: v_inf of the shift envelope G at the probe time
    let t = opts.ladder.probe_t;
    let shift = ShiftOptions { x_probes: 3, x_radius: 1.0, ..Default::default() };
    let concave = name == "ex2";
    let env = shift_envelopes(&term, concave, &shift)?;
    let v_inf = if concave {
        v_infinity(&env.g, t, 1e-8)?
    } else {
        v_infinity(&TabulatedRate::new(&env.g, 1e-10, 1e10, 2001), t, 1e-8)?
    };
    let lower = profile(opts.ladder.probe_x) - v_inf;
    let value = r.rungs.last().map_or(f64::NAN, |g| g.value);
    let bounded = value <= v_inf;
    let witness_found = matches!(r.verdict, Some(UniquenessVerdict::NontrivialWitness(_)));
    let status = match r.verdict {
        None => Status::Inconclusive,
        Some(_) => pass_if(witness_found && (!p.bool("check_upper_bound") || bounded)),
    };
    let doc = json!({
        "schema": 1,
        "witness": name,
        "verdict": verdict_name(&r.verdict),
        "report": r,
        "v_infinity": v_inf,
        "lower_bound": lower,
        "bounded_above": bounded,
    });
    Ok(Output::new(
        status,
        format!("{}; {}; v_inf({t}) = {v_inf:.4}, W - v_inf = {lower:.4}", verdict_name(&r.verdict), probes(&r)),
    )
    .with("report.json", json_bytes(&doc))
    .with("ladder.csv", ladder_csv(&r)))
}

fn longtime(cfg: &Config, p: &Params) -> Result<Output> {
    let g = rate(cfg, p)?;
    let tol = p.num("tol");
    let res = if p.bool("fallback") {
        longtime_limit_with_fallback(&g, tol)?
    } else {
        let c0 = largest_root(&g, auto_search_hi(&g)?)?.c0;
        LongtimeResult { limit: longtime_limit(&g, tol)?, c0, t_final: f64::NAN, fallback: false }
    };
    let err = (res.limit - res.c0).abs();
    let doc = json!({ "schema": 1, "rate": g.label(), "result": res, "abs_error": err });
    Ok(Output::new(
        pass_if(err <= p.num("agree_tol")),
        format!("{}: limit {:.8}, c0 {:.8}, fallback {}", g.label(), res.limit, res.c0, res.fallback),
    )
    .with("longtime.json", json_bytes(&doc)))
}
