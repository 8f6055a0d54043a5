use std::f64::consts::PI;

use fracdecay_core::decayfit::{check_envelope, fit_power_tail, ExponentTag, FitWindow, Verdict};
use fracdecay_core::fracode::TimeGrid;
use fracdecay_core::nonlinear::{
    check_energy_inequality, discretize_operator, predict_exponent, predict_exponent_in, run_scenario,
    solve_nonlinear, NonlinearError, NonlinearOptions, NonlinearProblem, OperatorSpec, PowerLaw, Scenario,
    ScenarioParams, SourceSpec, SpatialGrid1D,
};
use fracdecay_core::spectral::{solve_subdiffusion, BoundaryKind, CoefficientSpec, EigenSystem, Geometry};
use fracdecay_core::{OperatorSpec64, SpatialGrid1D64};
use proptest::prelude::*;

fn problem(operator: OperatorSpec64, source: SourceSpec<f64>, points: usize) -> NonlinearProblem<f64> {
    NonlinearProblem {
        operator,
        source,
        alpha: 0.5,
        coefficient: CoefficientSpec::Power { kappa: 1.0, beta: 0.5 },
        space: SpatialGrid1D::new(PI, points).unwrap(),
    }
}

fn sine(space: &SpatialGrid1D64, amp: f64) -> Vec<f64> {
    space.sample(|x| amp * x.sin())
}

#[test]
fn laplace_stencil_on_sine() {
    let g = SpatialGrid1D64::new(PI, 255).unwrap();
    let u = sine(&g, 1.0);
    let lap = discretize_operator(&OperatorSpec::Laplace, &g, &u).unwrap();
    let err = lap.iter().zip(&u).fold(0.0f64, |a, (l, v)| a.max((l + v).abs()));
    assert!(err <= 1e-4, "{err}");
    let p2 = discretize_operator(&OperatorSpec::PLaplace { p: 2.0 }, &g, &u).unwrap();
    assert!(p2.iter().zip(&lap).all(|(a, b)| (a - b).abs() <= 1e-12));
    let k = discretize_operator(&OperatorSpec::kirchhoff_affine(1.0, 0.0, 2.0, 2.0), &g, &u).unwrap();
    assert!(k.iter().zip(&lap).all(|(a, b)| (a - b).abs() <= 1e-12));
    let pm = discretize_operator(&OperatorSpec::porous_medium(0.0), &g, &u).unwrap();
    assert!(pm.iter().zip(&lap).all(|(a, b)| (a - b).abs() <= 1e-12));
}

#[test]
fn mean_curvature_small_gradient() {
    let g = SpatialGrid1D64::new(PI, 255).unwrap();
    let u = sine(&g, 1e-6);
    let lap = discretize_operator(&OperatorSpec::Laplace, &g, &u).unwrap();
    let mc = discretize_operator(&OperatorSpec::MeanCurvature, &g, &u).unwrap();
    let scale = lap.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = mc.iter().zip(&lap).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    assert!(err <= 1e-5 * scale);
}

#[test]
fn p_laplace_below_two_has_finite_values() {
    let g = SpatialGrid1D64::new(PI, 31).unwrap();
    let mut u = sine(&g, 1.0);
    u[15] = u[14]; // a flat cell
    let v = discretize_operator(&OperatorSpec::PLaplace { p: 1.5 }, &g, &u).unwrap();
    assert!(v.iter().all(|x| x.is_finite()));
    assert!(matches!(
        discretize_operator(&OperatorSpec::Laplace, &g, &[f64::NAN; 31]),
        Err(NonlinearError::NonFiniteState { .. })
    ));
}

#[test]
fn exponent_predictions() {
    let p = predict_exponent(&OperatorSpec::PLaplace { p: 3.0 }, 0.5, 0.5).unwrap();
    assert_eq!(p.tag, ExponentTag::PLaplace);
    assert!((p.value - 0.5).abs() < 1e-15);
    let p = predict_exponent(&OperatorSpec::porous_medium(0.0), 0.3, 0.4).unwrap();
    assert!((p.value - 0.7).abs() < 1e-15);
    let p = predict_exponent(&OperatorSpec::kirchhoff_affine(1.0, 1.0, 2.0, 2.0), 0.5, 0.5).unwrap();
    assert_eq!(p.tag, ExponentTag::Kirchhoff);
    assert!((p.value - 0.5).abs() < 1e-15);
    let p = predict_exponent(&OperatorSpec::degenerate(1.0), 0.5, 0.5).unwrap();
    assert!((p.value - 0.5).abs() < 1e-15);
    assert!(predict_exponent(&OperatorSpec::PLaplace { p: 1.1 }, 0.5, 0.5).is_ok());
    assert!(matches!(
        predict_exponent_in(&OperatorSpec::PLaplace { p: 1.1 }, 0.5, 0.5, 3),
        Err(NonlinearError::UnsupportedRegime(_))
    ));
    assert!(matches!(
        predict_exponent(&OperatorSpec::<f64>::Laplace, 0.5, -0.5),
        Err(NonlinearError::HypothesisViolated { hypothesis: "H", .. })
    ));
}

#[test]
fn zero_data_stays_zero() {
    let pb = problem(OperatorSpec::PLaplace { p: 3.0 }, SourceSpec::None, 31);
    let grid = TimeGrid::new(10.0, 64, 2.0).unwrap();
    let run = solve_nonlinear(&pb, &[0.0; 31], &grid, &NonlinearOptions::default()).unwrap();
    assert!(run.trace.energy.iter().all(|&e| e == 0.0));
    assert_eq!(check_envelope(&run.trace.energy_trace(), 0.5, false).verdict, Verdict::Degenerate);
}

#[test]
fn laplace_matches_spectral_closed_form() {
    let pb = problem(OperatorSpec::Laplace, SourceSpec::None, 255);
    let grid = TimeGrid::new(10.0, 2048, 3.0).unwrap();
    let u0 = sine(&pb.space, 1.0);
    let run = solve_nonlinear(&pb, &u0, &grid, &NonlinearOptions::default()).unwrap();
    let sys = EigenSystem::new(Geometry::Interval { length: PI }, BoundaryKind::Dirichlet, 1).unwrap();
    let exact = solve_subdiffusion(&sys, 0.5, 0.5, &[(PI / 2.0).sqrt()], grid.nodes()).unwrap();
    for ((t, e), x) in grid.nodes().iter().zip(&run.trace.energy).zip(&exact.energy) {
        if *t >= 0.1 {
            assert!((e / x - 1.0).abs() <= 5e-3, "t={t}: {e} vs {x}");
        }
    }
}

#[test]
fn fisher_kpp_stays_in_unit_interval() {
    let r = run_scenario(Scenario::FisherKpp, &ScenarioParams { steps: 512, points: 63, ..Default::default() }).unwrap();
    assert!(r.report.verdict.is_ok(), "{}", r.report.summary_line());
    for u in r.trace.fields.as_ref().unwrap() {
        assert!(u.iter().all(|&v| v > 0.0 && v <= 1.0));
    }
}

#[test]
fn pme_without_source_is_porous_medium_run() {
    let params = ScenarioParams { mu: 0.0, steps: 512, points: 63, amplitude: 1.0, ..Default::default() };
    let a = run_scenario(Scenario::SemilinearPme, &params).unwrap();
    let pb = NonlinearProblem {
        operator: OperatorSpec::PorousMedium { g: PowerLaw::pure(2.0, 1.0), m: 1.0, c0: 2.0 },
        ..problem(OperatorSpec::Laplace, SourceSpec::None, 63)
    };
    let grid = TimeGrid::new(100.0, 512, TimeGrid::default_grading(0.5)).unwrap();
    let b = solve_nonlinear(&pb, &sine(&pb.space, 1.0), &grid, &NonlinearOptions::default()).unwrap();
    assert_eq!(a.trace.energy, b.trace.energy);
    assert_eq!(a.report.verdict, Verdict::UpperOnlyOk);
}

#[test]
fn toy_model_is_normal_diffusion() {
    let params = ScenarioParams { horizon: 1e3, points: 63, ..Default::default() };
    let r = run_scenario(Scenario::ToyModel, &params).unwrap();
    assert_eq!(r.report.verdict, Verdict::SandwichOk, "{}", r.report.summary_line());
    assert!((r.report.fit.unwrap().s - 1.0).abs() <= 0.05);
}

#[test]
fn invalid_inputs() {
    let grid = TimeGrid::new(1.0, 8, 1.0).unwrap();
    let mut pb = problem(OperatorSpec::Laplace, SourceSpec::None, 7);
    pb.coefficient = CoefficientSpec::Power { kappa: 1.0, beta: -0.5 };
    assert!(matches!(
        solve_nonlinear(&pb, &[0.0; 7], &grid, &NonlinearOptions::default()),
        Err(NonlinearError::HypothesisViolated { .. })
    ));
    let pb = problem(OperatorSpec::PLaplace { p: 1.0 }, SourceSpec::None, 7);
    assert!(solve_nonlinear(&pb, &[0.0; 7], &grid, &NonlinearOptions::default()).is_err());
    assert!(SpatialGrid1D::new(1.0, 2).is_err());
    let pb = problem(OperatorSpec::Laplace, SourceSpec::None, 7);
    assert!(solve_nonlinear(&pb, &[0.0; 6], &grid, &NonlinearOptions::default()).is_err());
    let opts = NonlinearOptions { sweeps: 11, ..Default::default() };
    assert!(solve_nonlinear(&pb, &[0.0; 7], &grid, &opts).is_err());
    assert!(run_scenario(Scenario::FisherKpp, &ScenarioParams { amplitude: 1.5, ..Default::default() }).is_err());
    assert!("heat".parse::<Scenario>().is_err());
    assert_eq!("toy_model".parse::<Scenario>().unwrap(), Scenario::ToyModel);
}

#[test]
fn porous_medium_positivity_loss_is_reported() {
    // strong negative absorption blows the solution through zero from a one-signed start
    let pb = problem(OperatorSpec::porous_medium(1.0), SourceSpec::PowerAbsorption { mu: -50.0, p: 2.0 }, 15);
    let grid = TimeGrid::new(10.0, 64, 2.0).unwrap();
    let out = solve_nonlinear(&pb, &sine(&pb.space, 1.0), &grid, &NonlinearOptions::default());
    assert!(out.is_err(), "{out:?}");
}

#[test]
fn energy_inequality_diagnostic() {
    let pb = problem(OperatorSpec::Laplace, SourceSpec::None, 63);
    let grid = TimeGrid::new(10.0, 256, 3.0).unwrap();
    let run = solve_nonlinear(&pb, &sine(&pb.space, 1.0), &grid, &NonlinearOptions::default()).unwrap();
    let ineq = check_energy_inequality(&run.trace, 0.5).unwrap();
    assert!(ineq.min_margin() >= -1e-8);

    let mut frozen = run.trace.clone();
    let u0 = frozen.fields.as_ref().unwrap()[0].clone();
    frozen.fields.as_mut().unwrap().iter_mut().for_each(|u| *u = u0.clone());
    frozen.energy.iter_mut().for_each(|e| *e = run.trace.energy[0]);
    let ineq = check_energy_inequality(&frozen, 0.5).unwrap();
    assert!(ineq.lhs.iter().chain(&ineq.rhs).all(|v| v.abs() < 1e-15));

    let pb = problem(OperatorSpec::PLaplace { p: 3.0 }, SourceSpec::None, 63);
    let run = solve_nonlinear(&pb, &sine(&pb.space, 1.0), &grid, &NonlinearOptions::default()).unwrap();
    let ineq = check_energy_inequality(&run.trace, 0.5).unwrap();
    assert!(ineq.margin[1..].iter().all(|&m| m >= -1e-12));

    let mut bare = run.trace.clone();
    bare.fields = None;
    assert!(check_energy_inequality(&bare, 0.5).is_err());
}

#[test]
fn exponent_conformance_coarse() {
    // the tail fit over [10, 1e3] is past the pre-asymptotic range
    let grid = TimeGrid::new(1e3, 1024, 3.0).unwrap();
    for op in [
        OperatorSpec::PLaplace { p: 3.0 },
        OperatorSpec::porous_medium(1.0),
        OperatorSpec::degenerate(1.0),
        OperatorSpec::MeanCurvature,
        OperatorSpec::kirchhoff_affine(1.0, 1.0, 2.0, 2.0),
    ] {
        let pb = problem(op, SourceSpec::None, 63);
        let run = solve_nonlinear(&pb, &sine(&pb.space, 1.0), &grid, &NonlinearOptions::default()).unwrap();
        let s = predict_exponent(&op, 0.5, 0.5).unwrap().value;
        let r = check_envelope(&run.trace.energy_trace(), s, false);
        assert_eq!(r.verdict, Verdict::UpperOnlyOk, "{}: {}", op.name(), r.summary_line());
        let fit = fit_power_tail(&run.trace.energy_trace(), FitWindow::default()).unwrap();
        assert!(fit.s >= 0.9 * s, "{}: {} vs {s}", op.name(), fit.s);
        let ineq = check_energy_inequality(&run.trace, 0.5).unwrap();
        assert!(ineq.min_margin() >= -1e-8, "{}", op.name());
    }
}

#[test]
fn more_sweeps_agree_with_one() {
    let pb = problem(OperatorSpec::PLaplace { p: 3.0 }, SourceSpec::None, 31);
    let grid = TimeGrid::new(10.0, 256, 3.0).unwrap();
    let u0 = sine(&pb.space, 1.0);
    let one = solve_nonlinear(&pb, &u0, &grid, &NonlinearOptions::default()).unwrap();
    let ten = solve_nonlinear(&pb, &u0, &grid, &NonlinearOptions { sweeps: 10, ..Default::default() }).unwrap();
    for (a, b) in one.trace.energy.iter().zip(&ten.trace.energy).skip(1) {
        assert!((a / b - 1.0).abs() < 2e-2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn larger_coefficient_means_smaller_energy(kappa in 1.05f64..4.0, p in prop_oneof![Just(2.0f64), Just(3.0)]) {
        let grid = TimeGrid::new(20.0, 200, 3.0).unwrap();
        let base = problem(OperatorSpec::PLaplace { p }, SourceSpec::None, 31);
        let strong = NonlinearProblem { coefficient: CoefficientSpec::Power { kappa, beta: 0.5 }, ..base.clone() };
        let u0 = sine(&base.space, 1.0);
        let a = solve_nonlinear(&base, &u0, &grid, &NonlinearOptions::default()).unwrap();
        let b = solve_nonlinear(&strong, &u0, &grid, &NonlinearOptions::default()).unwrap();
        for (ea, eb) in a.trace.energy.iter().zip(&b.trace.energy) {
            prop_assert!(*eb <= *ea * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fisher_order_preserved(amp in 0.01f64..=1.0, shift in 0.0f64..1.0) {
        let pb = problem(OperatorSpec::Laplace, SourceSpec::FisherKpp, 31);
        let grid = TimeGrid::new(20.0, 128, 3.0).unwrap();
        // strictly positive interior data below 1
        let u0 = pb.space.sample(|x| amp * (0.5 + 0.5 * (x + shift).sin().abs()).min(1.0) * x.sin().max(1e-3));
        let run = solve_nonlinear(&pb, &u0, &grid, &NonlinearOptions::default()).unwrap();
        for u in run.trace.fields.as_ref().unwrap() {
            prop_assert!(u.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn porous_medium_nonnegative(m in 0.0f64..3.0, amp in 0.1f64..3.0) {
        let pb = problem(OperatorSpec::porous_medium(m), SourceSpec::None, 31);
        let grid = TimeGrid::new(20.0, 128, 3.0).unwrap();
        let u0 = pb.space.sample(|x| amp * x.sin().powi(2));
        let run = solve_nonlinear(&pb, &u0, &grid, &NonlinearOptions::default()).unwrap();
        for u in run.trace.fields.as_ref().unwrap() {
            prop_assert!(u.iter().all(|&v| v >= -1e-10));
        }
    }
}
