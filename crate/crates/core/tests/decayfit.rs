use fracdecay_core::decayfit::{
    check_envelope, fit_model_select, fit_power_tail, DecayFitError, DecayModel, FitWindow, ModelKind, Verdict,
};
use fracdecay_core::spectral::log_sample_times;
use fracdecay_core::ScalarTrace64;
use proptest::prelude::*;

fn synth(t_max: f64, f: impl Fn(f64) -> f64) -> ScalarTrace64 {
    let times = log_sample_times(1e-2, t_max, 40);
    let values = times.iter().map(|&t| f(t)).collect();
    ScalarTrace64 { times, values }
}

#[test]
fn inverse_square_tail() {
    let tr = synth(1e3, |t| 1.0 / (1.0 + t * t));
    let f = fit_power_tail(&tr, FitWindow::default()).unwrap();
    assert!((f.s - 2.0).abs() <= 0.02, "{}", f.s);
    assert!(f.t_lo < f.t_hi && f.residual >= 0.0);
    assert!(f.is_power_like());
}

#[test]
fn exponential_is_not_power_like() {
    let tr = synth(30.0, |t| (-t).exp());
    let f = fit_power_tail(&tr, FitWindow::default()).unwrap();
    assert!(!f.is_power_like(), "{}", f.residual);
    let sel = fit_model_select(&tr).unwrap();
    assert_eq!(sel.model.kind(), ModelKind::Exponential);
}

#[test]
fn degenerate_traces() {
    let tr = synth(1e3, |_| 0.0);
    assert!(matches!(fit_power_tail(&tr, FitWindow::default()), Err(DecayFitError::DegenerateTrace(_))));
    let short = ScalarTrace64 { times: vec![1.0, 2.0, 3.0], values: vec![1.0, 0.5, 0.3] };
    assert!(matches!(fit_power_tail(&short, FitWindow::default()), Err(DecayFitError::DegenerateTrace(_))));
    assert_eq!(check_envelope(&tr, 1.0, true).verdict, Verdict::Degenerate);
}

#[test]
fn envelope_examples() {
    let exact = synth(1e3, |t| 1.0 / (1.0 + t));
    let r = check_envelope(&exact, 1.0, true);
    assert_eq!(r.verdict, Verdict::SandwichOk);
    assert!((r.upper_constant - 1.0).abs() < 1e-12);
    assert!((r.lower_constant.unwrap() - 1.0).abs() < 1e-12);

    let fast = synth(1e3, |t| 1.0 / (1.0 + t * t));
    let r = check_envelope(&fast, 1.0, true);
    assert_eq!(r.verdict, Verdict::Violated);
    assert!(r.upper_ok && !r.lower_ok);
    assert_eq!(check_envelope(&fast, 1.0, false).verdict, Verdict::UpperOnlyOk);

    let slow = synth(1e3, |t| 1.0 / (1.0 + t.sqrt()));
    let r = check_envelope(&slow, 1.0, false);
    assert_eq!(r.verdict, Verdict::Violated);
}

#[test]
fn catalog_selection_margin() {
    let cases: [(ModelKind, Box<dyn Fn(f64) -> f64>); 3] = [
        (ModelKind::Exponential, Box::new(|t: f64| (-t * t).exp())),
        (ModelKind::Logarithmic, Box::new(|t: f64| (1.0 + t.ln_1p()).powi(-3))),
        (ModelKind::Power, Box::new(|t: f64| 1.0 / (1.0 + t))),
    ];
    for (kind, f) in &cases {
        let sel = fit_model_select(&synth(100.0, f)).unwrap();
        assert_eq!(sel.model.kind(), *kind);
        let second = sel.ranking[1].1;
        assert!(second - sel.residual >= 0.05 * second, "{kind}: {:?}", sel.ranking);
    }
}

#[test]
fn plateau_selection() {
    let sel = fit_model_select(&synth(1e3, |t| 2.0 + 1.0 / (1.0 + t))).unwrap();
    match sel.model {
        DecayModel::Plateau { level, .. } => assert!((level / 2.0 - 1.0).abs() < 0.01),
        m => panic!("{m:?}"),
    }
}

#[test]
fn window_widening_is_stable() {
    for s in [0.5, 1.0, 2.0] {
        let tr = synth(10f64.powf(12.0 / s), |t| 1.0 / (1.0 + t.powf(s)));
        let a = fit_power_tail(&tr, FitWindow::decades(2.0)).unwrap().s;
        let b = fit_power_tail(&tr, FitWindow::decades(3.0)).unwrap().s;
        assert!((a - b).abs() < 0.02 * a, "s={s}: {a} vs {b}");
    }
}

proptest! {
    #[test]
    fn exactness(s in 0.2f64..3.0, c in 0.01f64..100.0) {
        // horizon chosen so the tail stays above the energy floor
        let tr = synth(10f64.powf((11.0 / s).min(15.0)), |t| c / (1.0 + t.powf(s)));
        let f = fit_power_tail(&tr, FitWindow::decades(3.0)).unwrap();
        prop_assert!((f.s / s - 1.0).abs() <= 0.01, "{} vs {}", f.s, s);
    }

    #[test]
    fn scale_invariance(s in 0.2f64..3.0, k in 1e-3f64..1e3) {
        let tr = synth(1e4, |t| 1.0 / (1.0 + t.powf(s)));
        let mut scaled = tr.clone();
        scaled.values.iter_mut().for_each(|v| *v *= k);
        let a = fit_power_tail(&tr, FitWindow::default()).unwrap();
        let b = fit_power_tail(&scaled, FitWindow::default()).unwrap();
        prop_assert!((a.s - b.s).abs() <= 1e-12);
        prop_assert!((b.intercept - a.intercept - k.ln()).abs() <= 1e-9);
        let ea = check_envelope(&tr, s, true);
        let eb = check_envelope(&scaled, s, true);
        prop_assert_eq!(ea.verdict, eb.verdict);
        prop_assert!((eb.upper_constant / ea.upper_constant / k - 1.0).abs() <= 1e-12);
    }
}
