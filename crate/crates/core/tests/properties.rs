use proptest::prelude::*;

use rdlab::barriers::{BarrierParams, GridSpec, Thm1Problem};
use rdlab::coeff::Coefficient;
use rdlab::nonlinearity::{check_f2, envelope, osgood_test, parse_coefficient as coeff, OsgoodVerdict, ReactionTerm, Verdict};
use rdlab::ode_oracle::{solve_ivp_on, v_infinity};
use rdlab::pde_lab::{solve, solve_dirichlet, Boundary, Domain, Operator1D, Profile, SolverOptions, TimeScheme};
use rdlab::rate::{PowerLogRate, Rate};

fn catalog() -> Vec<ReactionTerm> {
    vec![
        ReactionTerm::power("sq", 0.0, 1.0, 2.0).unwrap(),
        ReactionTerm::power("sin_v", coeff("sin(1)").unwrap(), 1.0, 2.0).unwrap(),
        ReactionTerm::power("quad_gamma", 0.5, coeff("quad(1, 0.5)").unwrap(), 3.0).unwrap(),
        ReactionTerm::iter_log("il0", 0.0, 1.0, 0, 1.0).unwrap(),
        ReactionTerm::iter_log("il1", 1.0, 2.0, 1, 0.5).unwrap(),
        ReactionTerm::shifted_log("sl", 1.0, 3.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn envelope_dominates_term(which in 0usize..6, x in -1.0f64..1.0, lu in -5.0f64..14.0) {
        let term = &catalog()[which];
        let env = envelope(term, 1.0, 201).unwrap();
        let u = lu.exp();
        let f = term.eval(x, u);
        prop_assert!(env.eval(u) >= f - env.dominance_tolerance() * f.abs().max(1.0), "{} x={x} u={u}", term.id);
    }

    #[test]
    fn f2_implies_osgood_for_the_model(m in 0usize..=1, eps in 0.2f64..3.0, scale in 1.0f64..4.0) {
        let term = ReactionTerm::iter_log("t", 0.0, scale, m, eps).unwrap();
        let env = envelope(&term, 1.0, 21).unwrap();
        let probes: Vec<f64> = (1..=12).map(|k| 10f64.powi(k)).collect();
        if check_f2(&env, m, eps, &probes).verdict == Verdict::SatisfiesF2 {
            let q = PowerLogRate::growth_model(m, eps);
            let u0 = 2.0 * q.domain_min().max(1.0) + 1.0;
            prop_assert!(matches!(osgood_test(&q, u0).unwrap(), OsgoodVerdict::Convergent(_)));
        }
    }

    #[test]
    fn f2_survives_stronger_absorption(m in 0usize..=1, eps in 0.2f64..2.0, c in 1.0f64..50.0) {
        let term = ReactionTerm::iter_log("t", 0.0, 1.0, m, eps).unwrap();
        let env = envelope(&term, 1.0, 21).unwrap();
        let probes: Vec<f64> = (1..=12).map(|k| 10f64.powi(k)).collect();
        if check_f2(&env, m, eps, &probes).verdict == Verdict::SatisfiesF2 {
            let lower = |u: f64| c * env.eval(u);
            prop_assert_eq!(check_f2(&lower, m, eps, &probes).verdict, Verdict::SatisfiesF2);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ode_solutions_are_ordered_and_dominated(c1 in 0.0f64..50.0, dc in 0.0f64..1e4) {
        let g = |u: f64| -u * u;
        let ts: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();
        let tol = 1e-8;
        let a = solve_ivp_on(&g, c1, &ts, tol).unwrap();
        let b = solve_ivp_on(&g, c1 + dc, &ts, tol).unwrap();
        for (k, &t) in ts.iter().enumerate() {
            prop_assert!(a.values[k] <= b.values[k] + 10.0 * tol);
            prop_assert!(b.values[k] <= v_infinity(&g, t, tol).unwrap() + 10.0 * tol);
        }
    }

    #[test]
    fn v_infinity_is_a_trajectory(t1 in 0.05f64..1.0, dt in 0.05f64..2.0) {
        let g = PowerLogRate::new(1.0, 1.0, vec![3.0]);
        let tol = 1e-8;
        let v1 = v_infinity(&g, t1, tol).unwrap();
        let later = solve_ivp_on(&g, v1, &[dt], tol).unwrap().values[0];
        let v2 = v_infinity(&g, t1 + dt, tol).unwrap();
        prop_assert!((later - v2).abs() <= 10.0 * tol * v2.max(1.0));
    }
}

#[test]
fn certificates_are_monotone_in_k() {
    let term = ReactionTerm::shifted_log("sl", 1.0, 3.0);
    let pr = Thm1Problem::new(BarrierParams::thm1(1.0, 3.0, 0.0, 0), &Operator1D::laplacian(), &term, 1.0, GridSpec::new(41, 8, 1.0)).unwrap();
    let ks = [100.0, 400.0, 1000.0, 1600.0, 2500.0, 4000.0, 8000.0];
    let cert: Vec<bool> = ks.iter().map(|&k| pr.residual(k).sign_certified).collect();
    let first = cert.iter().position(|&c| c).expect("some K certifies");
    assert!(cert[first..].iter().all(|&c| c), "{cert:?}");
}

fn bump(h: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| c + h * (1.0 - x * x).max(0.0).powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn comparison_with_ordered_data(h in 0.0f64..20.0, dh in 0.0f64..20.0, c in 0.0f64..2.0, dc in 0.0f64..2.0, s in 0.0f64..5.0, ds in 0.0f64..5.0) {
        let term = ReactionTerm::power("sq", 0.0, 1.0, 2.0).unwrap();
        let op = Operator1D::laplacian();
        let opts = SolverOptions { dt_max: 1e-3, ..Default::default() };
        let dom = Domain::new(-1.0, 1.0, 41);
        let f_lo: Profile = std::sync::Arc::new(move |_| s);
        let f_hi: Profile = std::sync::Arc::new(move |_| s + ds);
        let lo = solve(&bump(h, c), &op, &term, Some(&f_lo), dom, &[0.02, 0.1], Boundary::Dirichlet(c, c), &opts).unwrap();
        let hi = solve(&bump(h + dh, c + dc), &op, &term, Some(&f_hi), dom, &[0.02, 0.1], Boundary::Dirichlet(c + dc, c + dc), &opts).unwrap();
        let dx: f64 = 2.0 / 40.0;
        let tol = 10.0 * (dx * dx + opts.dt_max);
        for (a, b) in lo.frames.iter().flatten().zip(hi.frames.iter().flatten()) {
            prop_assert!(*a <= b + tol);
        }
    }
}

#[test]
fn interior_tracks_the_ode() {
    let term = ReactionTerm::shifted_log("sl", 1.0, 3.0);
    let g = |u: f64| term.eval(0.0, u);
    let opts = SolverOptions { dt_max: 1e-4, ..Default::default() };
    let x_half = 10.0;
    let t_end = 0.1 * x_half * x_half / 1.0f64.min(10.0);
    let times = [0.05, 0.1, 0.2];
    assert!(times.iter().all(|&t| t <= t_end));
    let tr = solve_dirichlet(&|_| 5.0, &Operator1D::laplacian(), &term, Domain::symmetric(x_half, 0.05), &times, Boundary::Dirichlet(5.0, 5.0), &opts).unwrap();
    let ode = solve_ivp_on(&g, 5.0, &times, 1e-10).unwrap();
    for k in 0..times.len() {
        assert!((tr.value_at(k, 0.0) - ode.values[k]).abs() <= 1e-3, "{} vs {}", tr.value_at(k, 0.0), ode.values[k]);
    }
}

#[test]
fn second_order_under_refinement() {
    let term = ReactionTerm::power("sq", 0.0, 1.0, 2.0).unwrap();
    let g = |x: f64| (std::f64::consts::PI * x).sin();
    let probe = |n: usize, dt: f64| {
        let opts = SolverOptions { scheme: TimeScheme::TrBdf2, dt0: dt, dt_max: dt, growth: 1.0, ..Default::default() };
        let tr = solve_dirichlet(&g, &Operator1D::laplacian(), &term, Domain::new(0.0, 1.0, n), &[0.1], Boundary::Dirichlet(0.0, 0.0), &opts).unwrap();
        tr.value_at(0, 0.3)
    };
    let (a, b, c) = (probe(21, 0.01), probe(41, 0.005), probe(81, 0.0025));
    let order = ((a - b).abs() / (b - c).abs()).log2();
    assert!(order >= 1.7, "observed order {order}");
}

#[test]
fn growing_coefficient_probe() {
    let op = Operator1D::new(Coefficient::OnePlusSqPow { scale: 1.0, power: 2.0 }, 0.0);
    assert!(op.check_l1(4.0).is_err());
    assert!(Operator1D::laplacian().check_l1(4.0).is_ok());
}

#[test]
fn solutions_stay_below_the_barrier() {
    use rdlab::barriers::{find_k, KRange};
    let term = ReactionTerm::shifted_log("sl", 1.0, 3.0);
    let op = Operator1D::laplacian();
    let pr = Thm1Problem::new(BarrierParams::thm1(1.0, 3.0, 0.0, 0), &op, &term, 1.0, GridSpec::new(101, 20, 1.0)).unwrap();
    let (k, rep) = find_k(|k| pr.residual(k), KRange::default()).unwrap();
    assert!(rep.sign_certified);
    let times = [0.01, 0.05, 0.1, 0.5];
    let opts = SolverOptions { dt_max: 1e-3, ..Default::default() };
    for a in [1e2, 1e5, 1e8] {
        let tr = solve_dirichlet(&|_| a, &op, &term, Domain::new(-1.0, 1.0, 101), &times, Boundary::Dirichlet(a, a), &opts).unwrap();
        for (j, &t) in times.iter().enumerate() {
            for &x in &[-0.9, -0.5, 0.0, 0.3, 0.8] {
                let ln_m = pr.ln_majorant(k, x, t).unwrap();
                assert!(tr.value_at(j, x).ln() <= ln_m, "A={a} x={x} t={t}");
            }
        }
    }
}
