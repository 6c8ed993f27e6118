use proptest::prelude::*;

use rvdecay_core::classifier::{
    self, estimate_L, lambda_defect, lambda_star, LimitGrid, LimitVerdict,
};
use rvdecay_core::exprdsl::{numeric_derivative, parse};
use rvdecay_core::grid::GeometricGrid;
use rvdecay_core::integrator::{self, Controls};
use rvdecay_core::rvkit;
use rvdecay_core::{FlowMap, FunctionSpec, ProblemSpec};

fn state(src: &str) -> FunctionSpec {
    FunctionSpec::state(src).unwrap()
}

fn time(src: &str) -> FunctionSpec {
    FunctionSpec::time(src).unwrap()
}

fn source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("e".to_string()),
        (0u32..1000).prop_map(|n| format!("{}", n as f64 / 8.0)),
        (1u32..9, -12i32..12).prop_map(|(m, k)| format!("{}e{}", m, k)),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({} + {})", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{} - {}", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{}*{}", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{}/({})", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({})^{}", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{}^-({})", a, b)),
            inner.clone().prop_map(|a| format!("-{}", a)),
            (
                inner.clone(),
                prop::sample::select(vec!["exp", "log", "sqrt", "abs", "sgn", "loglog"])
            )
                .prop_map(|(a, f)| format!("{}({})", f, a)),
            (inner.clone(), 0u32..40).prop_map(|(a, b)| format!(
                "signed_pow({}, {})",
                a,
                b as f64 / 8.0
            )),
            (inner, 1u32..4).prop_map(|(a, k)| format!("iterlog({}, {})", a, k)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn print_then_parse_is_stable(src in source()) {
        let ast = parse(&src).unwrap();
        let printed = ast.to_string();
        let again = parse(&printed).unwrap();
        prop_assert_eq!(&again, &ast, "{} printed as {}", src, printed);
        prop_assert_eq!(again.to_string(), printed);
    }

    #[test]
    fn eval_is_deterministic(src in source(), v in -50.0f64..50.0) {
        let ast = parse(&src).unwrap();
        let a = ast.eval(v).map(f64::to_bits);
        let b = ast.clone().eval(v).map(f64::to_bits);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cubic_derivatives(c in prop::array::uniform4(-5.0f64..5.0), v in -10.0f64..10.0) {
        let src = format!("{:?} + {:?}*x + {:?}*x^2 + {:?}*x^3", c[0], c[1], c[2], c[3]);
        let ast = parse(&src).unwrap();
        let exact = c[1] + 2.0 * c[2] * v + 3.0 * c[3] * v * v;
        // Relative to the size of the terms, so cancellation near a critical
        // point does not count as error.
        let size = c[1].abs() + (2.0 * c[2] * v).abs() + (3.0 * c[3] * v * v).abs();
        let d = numeric_derivative(&ast, v, 1e-5).unwrap();
        prop_assert!((d - exact).abs() <= 1e-6 * size.max(1e-300), "{}: {} vs {}", src, d, exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn composition_of_indices(beta in 0.2f64..4.0, theta in 0.2f64..3.0) {
        let h = time(&format!("(t^-{:?})^{:?}", theta, beta));
        let e = rvkit::estimate_index_at_infinity(&h, &GeometricGrid::INFINITY_SIDE).unwrap();
        prop_assert!((e.index + theta * beta).abs() <= 1e-3, "{} vs {}", e.index, -theta * beta);
    }

    #[test]
    fn index_of_inverse(eta in 0.2f64..6.0) {
        let inv = state(&format!("x^(1/{:?})", eta));
        let e = rvkit::estimate_index_at_zero(&inv, &GeometricGrid::ZERO_SIDE).unwrap();
        prop_assert!((e.index - 1.0 / eta).abs() <= 1e-3);
    }

    #[test]
    fn shifted_ratio_tends_to_one(theta in 0.1f64..5.0, c in -50.0f64..50.0) {
        let h = time(&format!("t^-{:?}*log(t)", theta));
        let pts = GeometricGrid::new(1e6, 1e8, 4).points().unwrap();
        for r in rvkit::shift_ratio_curve(&h, c, &pts).unwrap() {
            prop_assert!((r - 1.0).abs() <= 1e-3, "{}", r);
        }
    }

    #[test]
    fn karamata_residual_decreases(beta in 1.2f64..5.0) {
        // Exact residual is -x^(β-1); below NOISE quadrature round-off dominates.
        const NOISE: f64 = 1e-9;
        let fm = FlowMap::new(state(&format!("x^{:?}", beta)));
        let mut prev = f64::INFINITY;
        for x in GeometricGrid::new(1e-2, 1e-8, 4).points().unwrap() {
            let r = rvkit::karamata_residual(&fm, beta, x).unwrap().abs();
            if x.powf(beta - 1.0) > 10.0 * NOISE {
                prop_assert!(r < prev, "not decreasing at {}", x);
            }
            prop_assert!(r <= 1.001 * x.powf(beta - 1.0) + NOISE);
            prev = r;
        }
    }

    #[test]
    fn index_is_scale_invariant(beta in 0.5f64..5.0, c in 1e-3f64..1e3) {
        let f = state(&format!("x^{:?}*(1 + x)", beta));
        let a = rvkit::estimate_index_at_zero(&f, &GeometricGrid::ZERO_SIDE).unwrap();
        let b = rvkit::estimate_index_at_zero(&f.scaled(c), &GeometricGrid::ZERO_SIDE).unwrap();
        prop_assert!((a.index - b.index).abs() <= 1e-9, "{} vs {}", a.index, b.index);
        prop_assert_eq!(a.verdict.is_rapid(), b.verdict.is_rapid());
    }

    #[test]
    fn flow_round_trip(k in 0usize..5, u in -3.0f64..8.0) {
        // Representable F(x) for x/log(1/x) stops near 2.4e5.
        let cases = [
            ("x^2", 1e8),
            ("sgn(x)*exp(-1/abs(x))", 1e8),
            ("x/log(1/x)", 2e5),
            ("signed_pow(2)*exp(-x)", 1e8),
            ("x^3", 1e8),
        ];
        let (f, top) = cases[k];
        let t = (10f64.powf(u)).min(top);
        let fm = FlowMap::new(state(f));
        let x = fm.invert_F(t).unwrap();
        let back = fm.compute_F(x).unwrap();
        prop_assert!((back - t).abs() <= 1e-8 * t.max(1.0), "{}: {} vs {}", f, back, t);
    }

    #[test]
    fn inverse_is_decreasing(beta in 1.1f64..4.0) {
        let fm = FlowMap::new(state(&format!("x^{:?}", beta)));
        let mut prev = f64::INFINITY;
        for t in GeometricGrid::new(1e-3, 1e8, 4).points().unwrap() {
            let x = fm.invert_F(t).unwrap();
            prop_assert!(x < prev);
            prev = x;
        }
    }

    #[test]
    fn flow_property(zeta in 0.01f64..5.0, s in 0.0f64..1e3, t in 0.0f64..1e3) {
        let fm = FlowMap::new(state("x^2*(1 + x)"));
        let direct = fm.unperturbed_solution(zeta, s + t).unwrap();
        let mid = fm.unperturbed_solution(zeta, s).unwrap();
        let composed = fm.unperturbed_solution(mid, t).unwrap();
        prop_assert!((direct - composed).abs() <= 1e-8 * direct, "{} vs {}", direct, composed);
    }

    #[test]
    fn karamata_consistency(beta in 1.2f64..5.0) {
        let fm = FlowMap::new(state(&format!("x^{:?}", beta))).with_beta_hint(Some(beta));
        let t = 1e8;
        let v = fm.f_of_finv(t).unwrap() * ((beta - 1.0) * t).powf(beta / (beta - 1.0));
        prop_assert!((v - 1.0).abs() <= 1e-3, "{}", v);
    }

    #[test]
    fn lambda_star_solves_its_equation(l in -3.0f64..3.0, beta in 1.05f64..20.0) {
        let l = 10f64.powf(l);
        let lam = lambda_star(l, beta, false).unwrap();
        prop_assert!((lambda_defect(lam, beta) - l).abs() <= 1e-9 * l.max(1.0));
    }

    #[test]
    fn lambda_star_decreases(a in -6.0f64..6.0, d in 0.01f64..2.0, beta in 1.05f64..20.0) {
        let lo = lambda_star(10f64.powf(a), beta, false).unwrap();
        let hi = lambda_star(10f64.powf(a + d), beta, false).unwrap();
        prop_assert!(hi < lo);
        prop_assert!(lo > 0.0 && lo < 1.0);
    }

    #[test]
    fn rapid_branch_is_the_large_beta_limit(l in -3.0f64..3.0) {
        let l = 10f64.powf(l);
        let big = lambda_star(l, 1e4, false).unwrap();
        let rapid = lambda_star(l, 1e4, true).unwrap();
        prop_assert_eq!(rapid, 1.0 / (1.0 + l));
        prop_assert!((big - rapid).abs() <= 1e-3, "{} vs {}", big, rapid);
    }

    #[test]
    fn limit_scales_with_g(c in 0.01f64..100.0) {
        let fm = FlowMap::new(state("x^2"));
        let grid = LimitGrid::default();
        let one = estimate_L(&time("(2+t)^-2"), &fm, &grid).unwrap().value().unwrap();
        let scaled = estimate_L(&time(&format!("{:?}*(2+t)^-2", c)), &fm, &grid).unwrap();
        let v = scaled.value().unwrap();
        prop_assert!((v - c * one).abs() <= 1e-6 * c * one, "{} vs {}", v, c * one);
        for (g, expected) in [("(1+t)^-3", LimitVerdict::Zero), ("(1+t)^-1", LimitVerdict::Infinite)] {
            let base = estimate_L(&time(g), &fm, &grid).unwrap().verdict;
            let s = estimate_L(&time(g).scaled(c), &fm, &grid).unwrap().verdict;
            prop_assert_eq!(base, expected);
            prop_assert_eq!(s, expected);
        }
    }
}

fn problem(f: &str, g: &str, xi: f64) -> ProblemSpec {
    ProblemSpec::new(state(f), time(g), xi)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn halving_tolerances_is_consistent(beta in 1.5f64..3.0, a in 0.1f64..3.0, p in 1.2f64..3.0) {
        let pr = problem(&format!("x^{:?}", beta), &format!("{:?}*(1+t)^-{:?}", a, p), 1.0);
        let coarse = Controls { rtol: 1e-7, atol: 1e-18, ..Controls::default().with_horizon(1e4) };
        let fine = Controls { rtol: 5e-8, atol: 5e-19, ..coarse };
        let x1 = integrator::integrate(&pr, &coarse).unwrap();
        let x2 = integrator::integrate(&pr, &fine).unwrap();
        for (u, v) in x1.points.iter().zip(&x2.points) {
            prop_assert!((u.1 - v.1).abs() <= 10.0 * (coarse.rtol * v.1.abs() + coarse.atol), "t = {}", u.0);
        }
    }

    #[test]
    fn comparison_principle(beta in 1.5f64..3.0, a in 0.0f64..2.0, p in 1.2f64..3.0, b in 0.01f64..2.0, q in 0.5f64..3.0, xi in 0.1f64..3.0) {
        let f = format!("x^{:?}", beta);
        let g1 = format!("{:?}*(1+t)^-{:?}", a, p);
        let g2 = format!("{} + {:?}*(1+t)^-{:?}", g1, b, q);
        let c = Controls::default().with_horizon(1e4);
        let lo = integrator::integrate(&problem(&f, &g1, xi), &c).unwrap();
        let hi = integrator::integrate(&problem(&f, &g2, xi), &c).unwrap();
        prop_assert_eq!(lo.points.len(), hi.points.len());
        for (l, h) in lo.points.iter().zip(&hi.points) {
            prop_assert!(l.1 <= h.1 + 1e-8, "t = {}: {} > {}", l.0, l.1, h.1);
        }
    }

    #[test]
    fn unperturbed_trajectory_follows_the_flow(beta in 1.2f64..4.0, xi in 0.05f64..5.0) {
        let f = format!("x^{:?}*(1 + x)", beta);
        let tr = integrator::integrate(&problem(&f, "0", xi), &Controls::default().with_horizon(1e5)).unwrap();
        let fm = FlowMap::new(state(&f));
        let atol = tr.controls.atol;
        for &(t, x) in &tr.points {
            let y = fm.unperturbed_solution(xi, t).unwrap();
            prop_assert!((x - y).abs() <= 1e-6 * y + 100.0 * atol, "t = {}: {} vs {}", t, x, y);
        }
    }

    #[test]
    fn positive_data_stay_positive(beta in 1.1f64..4.0, a in 0.0f64..3.0, p in 0.5f64..3.0, xi in 1e-3f64..3.0) {
        let pr = problem(&format!("x^{:?}", beta), &format!("{:?}*(1+t)^-{:?}", a, p), xi);
        let tr = integrator::integrate(&pr, &Controls::default().with_horizon(1e6)).unwrap();
        prop_assert!(tr.points.iter().all(|p| p.1 > 0.0));
    }
}

#[test]
fn lambda_star_limits() {
    for beta in [1.5, 2.0, 3.0, 10.0] {
        assert!(1.0 - lambda_star(1e-12, beta, false).unwrap() < 1e-6);
        assert!(lambda_star(1e12, beta, false).unwrap() < 1e-4);
    }
}

#[test]
fn classify_rejects_index_one() {
    let g = "exp(-sqrt(2)*(1+t)^0.5 + (1+t)^(1/3))*(1+t)^(-2/3)\
             *(5*sqrt(2)/6 - (1+t)^(-1/6)/3)/(sqrt(2) - (1+t)^(-1/6))";
    let r = classifier::classify(&problem("x/log(1/x)", g, (1.0 - 2f64.sqrt()).exp()));
    assert_eq!(r.regime.reason(), Some(classifier::REJECT_SCOPE));
}
