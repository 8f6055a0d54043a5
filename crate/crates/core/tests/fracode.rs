use fracdecay_core::fracode::{
    lemma_envelope, sandwich_constants, solve_linear_mode, solve_semilinear, CaputoL1Operator,
    SemilinearParams, TimeGrid,
};
use fracdecay_core::special::gamma;
use fracdecay_core::specfun::{DecayFunction, SeriesAccuracy};
use fracdecay_core::{SemilinearParams64, TimeGrid64};
use proptest::prelude::*;

fn max_rel_error(op: &CaputoL1Operator<f64>, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    let t = op.grid().nodes();
    let u: Vec<f64> = t.iter().map(|&s| f(s)).collect();
    let d = op.apply(&u).unwrap();
    d.iter().zip(&t[1..]).map(|(&a, &s)| ((a - df(s)) / df(s)).abs()).fold(0.0, f64::max)
}

fn max_abs_error(op: &CaputoL1Operator<f64>, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    let t = op.grid().nodes();
    let u: Vec<f64> = t.iter().map(|&s| f(s)).collect();
    let d = op.apply(&u).unwrap();
    d.iter().zip(&t[1..]).map(|(&a, &s)| (a - df(s)).abs()).fold(0.0, f64::max)
}

#[test]
fn l1_reproduces_linear_function() {
    let op = CaputoL1Operator::new(TimeGrid64::uniform(1.0, 1024).unwrap(), 0.5).unwrap();
    let g = gamma(1.5);
    assert!(max_rel_error(&op, |t| t, |t| t.sqrt() / g) <= 1e-3);
}

#[test]
fn l1_on_power_function() {
    // d^a t^(a+b) = Gamma(a+b+1)/Gamma(b+1) t^b with a = b = 0.5
    let op = CaputoL1Operator::new(TimeGrid64::new(1.0, 1024, 2.0).unwrap(), 0.5).unwrap();
    let c = gamma(2.0) / gamma(1.5);
    let err = max_rel_error(&op, |t| t, |t| c * t.sqrt());
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn l1_order_on_uniform_grids() {
    // L1 is exact for piecewise-linear data, so the rate is observed on t^2.
    let alpha: f64 = 0.5;
    let c = 2.0 / gamma(3.0 - alpha);
    let err = |n| {
        let op = CaputoL1Operator::new(TimeGrid64::uniform(1.0, n).unwrap(), alpha).unwrap();
        max_abs_error(&op, |t| t * t, |t| c * t.powf(2.0 - alpha))
    };
    let (e1, e2) = (err(256), err(512));
    assert!(e1 / e2 >= 2f64.powf(1.4), "ratio {}", e1 / e2);
}

#[test]
fn zero_rate_keeps_initial_value() {
    let g = TimeGrid64::new(5.0, 100, 3.0).unwrap();
    let tr = solve_linear_mode(0.5, 0.5, 0.0, 1.7, &g).unwrap();
    assert!(tr.values.iter().all(|&u| u == 1.7));
}

#[test]
fn backward_euler_branch() {
    let g = TimeGrid64::uniform(5.0, 2048).unwrap();
    let tr = solve_linear_mode(1.0, 0.0, 1.0, 1.0, &g).unwrap();
    let err = tr.times.iter().zip(&tr.values).map(|(t, u)| (u - (-t).exp()).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-3, "{err}");
}

#[test]
fn linear_mode_matches_closed_form() {
    let g = TimeGrid64::new(10.0, 4096, 2.0).unwrap();
    let tr = solve_linear_mode(0.5, 0.5, 1.0, 1.0, &g).unwrap();
    let f = DecayFunction::new(0.5, 2.0, 10.0, SeriesAccuracy::default()).unwrap();
    for (&t, &u) in tr.times.iter().zip(&tr.values).filter(|(&t, _)| t >= 0.1) {
        let exact = f.eval(t).unwrap().value;
        assert!((u / exact - 1.0).abs() <= 5e-3, "t={t}: {u} vs {exact}");
    }
}

#[test]
fn semilinear_with_unit_power_is_linear() {
    let g = TimeGrid64::new(10.0, 600, 3.0).unwrap();
    let p = SemilinearParams64 { nu: 1.3, delta: 1.0, beta: 0.5, h0: 0.8 };
    let a = solve_semilinear(&p, 0.5, &g).unwrap();
    let b = solve_linear_mode(0.5, 0.5, 1.3, 0.8, &g).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
    }
}

#[test]
fn semilinear_below_super_solution() {
    let g = TimeGrid64::new(100.0, 2000, 3.0).unwrap();
    let p = SemilinearParams64 { nu: 1.0, delta: 2.0, beta: 0.0, h0: 1.0 };
    let tr = solve_semilinear(&p, 0.5, &g).unwrap();
    let env = lemma_envelope(&p, 0.5).unwrap();
    for (&t, &h) in tr.times.iter().zip(&tr.values) {
        assert!(h <= env.super_solution(t) * (1.0 + 1e-12), "t={t}");
    }
    let s = sandwich_constants(&tr, &env);
    assert!(s.holds() && s.c1 <= 1.0 && s.c2 >= 1.0);
}

#[test]
fn invalid_parameters_are_rejected() {
    let g = TimeGrid64::uniform(1.0, 10).unwrap();
    assert!(solve_linear_mode(0.5, -0.5, 1.0, 1.0, &g).is_err());
    assert!(solve_linear_mode(1.5, 0.0, 1.0, 1.0, &g).is_err());
    let p = SemilinearParams64 { nu: 1.0, delta: 0.0, beta: 0.0, h0: 1.0 };
    assert!(solve_semilinear(&p, 0.5, &g).is_err());
}

#[test]
fn works_in_single_precision() {
    let g = TimeGrid::<f32>::new(2.0, 200, 2.0).unwrap();
    let tr = solve_linear_mode(0.5f32, 0.5, 1.0, 1.0, &g).unwrap();
    let (_, last) = tr.last().unwrap();
    assert!(last > 0.0 && last < 1.0);
}

fn envelope_params() -> impl Strategy<Value = (f64, SemilinearParams<f64>)> {
    (0.05f64..0.95, 0.0f64..1.0, 0.2f64..3.0, 0.1f64..5.0, 0.1f64..5.0).prop_flat_map(|(a, bf, d, nu, h0)| {
        // beta ranges over (-alpha, 2)
        let beta = -a * 0.95 + bf * (2.0 + 0.95 * a);
        Just((a, SemilinearParams64 { nu, delta: d, beta, h0 }))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn sub_solution_is_continuous_at_switch((alpha, p) in envelope_params()) {
        let e = lemma_envelope(&p, alpha).unwrap();
        let left = p.h0 - p.nu * gamma(1.0 - alpha) * p.h0.powf(p.delta) * e.t1.powf(alpha + p.beta);
        let right = e.sub_solution(e.t1 * (1.0 + 1e-15));
        prop_assert!((left - right).abs() <= 1e-9 * p.h0.max(1.0), "{} vs {}", left, right);
        prop_assert!((left - 0.5 * p.h0).abs() <= 1e-9 * p.h0.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn linear_mode_positive_and_nonincreasing(alpha in 0.1f64..1.0, bf in 0.0f64..1.0, lambda in 0.0f64..50.0, u0 in 0.01f64..10.0) {
        let beta = -0.9 * alpha + 2.0 * bf;
        let g = TimeGrid64::new(20.0, 300, TimeGrid64::default_grading(alpha)).unwrap();
        let tr = solve_linear_mode(alpha, beta, lambda, u0, &g).unwrap();
        prop_assert!(tr.values.iter().all(|&u| u > 0.0));
        prop_assert!(tr.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn semilinear_positive_nonincreasing_and_sandwiched(alpha in 0.2f64..0.9, bf in 0.0f64..1.0, delta in 1.0f64..3.0, nu in 0.2f64..3.0) {
        let beta = -0.8 * alpha + bf;
        let p = SemilinearParams64 { nu, delta, beta, h0: 1.0 };
        let g = TimeGrid64::new(30.0, 400, TimeGrid64::default_grading(alpha)).unwrap();
        let tr = solve_semilinear(&p, alpha, &g).unwrap();
        prop_assert!(tr.values.iter().all(|&u| u > 0.0));
        prop_assert!(tr.values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
        let env = lemma_envelope(&p, alpha).unwrap();
        let s = sandwich_constants(&tr, &env);
        prop_assert!(s.holds() && s.c1 <= 1.0 && 1.0 <= s.c2);
    }
}
