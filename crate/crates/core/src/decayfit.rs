//! Decay-profile extraction from energy traces and envelope verdicts.

use std::fmt;

use thiserror::Error;

use crate::scalar::Real;
use crate::trace::ScalarTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecayFitError {
    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),
    #[error("ambiguous model selection: {best} ({best_residual:.3e}) vs {second} ({second_residual:.3e})")]
    AmbiguousFit { best: ModelKind, best_residual: f64, second: ModelKind, second_residual: f64 },
}

pub type Result<T> = std::result::Result<T, DecayFitError>;

/// Energies below this are treated as numerically zero.
pub const ENERGY_FLOOR: f64 = 1e-14;
/// A power fit with larger log-space RMS is not considered a power law.
pub const POWER_RESIDUAL_LIMIT: f64 = 0.1;
/// Two model residuals closer than this relative margin are ambiguous.
pub const AMBIGUITY_MARGIN: f64 = 0.05;

/// Tail window used by fits and envelope trend checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    /// Number of decades of `t` kept below the last retained sample.
    pub decades: f64,
    /// Fraction of the final samples discarded before the window is placed.
    pub exclude_fraction: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { decades: 2.0, exclude_fraction: 0.05 }
    }
}

impl FitWindow {
    pub fn decades(decades: f64) -> Self {
        Self { decades, ..Self::default() }
    }

    /// Indices of the samples inside the window (positive times only).
    fn select<T: Real>(&self, times: &[T]) -> Vec<usize> {
        let positive: Vec<usize> = (0..times.len()).filter(|&i| times[i] > T::zero()).collect();
        if positive.is_empty() {
            return positive;
        }
        let drop = (self.exclude_fraction * positive.len() as f64).ceil() as usize;
        let keep = &positive[..positive.len().saturating_sub(drop).max(1)];
        let t_hi = times[*keep.last().unwrap()].to_f64_lossy();
        let t_lo = t_hi * 10f64.powf(-self.decades);
        keep.iter().copied().filter(|&i| times[i].to_f64_lossy() >= t_lo * (1.0 - 1e-12)).collect()
    }
}

/// Least-squares line `ln E = intercept - s ln t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub s: f64,
    pub intercept: f64,
    /// RMS of the log-space residuals.
    pub residual: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub points: usize,
}

impl PowerFit {
    pub fn is_power_like(&self) -> bool {
        self.residual <= POWER_RESIDUAL_LIMIT
    }
}

/// `(a, b, rms)` of the least-squares line `y = a + b x`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

fn to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

/// Power-law fit on the last `window.decades` decades of the trace.
pub fn fit_power_tail<T: Real>(trace: &ScalarTrace<T>, window: FitWindow) -> Result<PowerFit> {
    let idx = window.select(&trace.times);
    if idx.len() < 10 {
        return Err(DecayFitError::DegenerateTrace(format!(
            "{} samples in the fit window, at least 10 needed",
            idx.len()
        )));
    }
    let t = to_f64(&trace.times);
    let e = to_f64(&trace.values);
    if let Some(&i) = idx.iter().find(|&&i| !(e[i] >= ENERGY_FLOOR) || !e[i].is_finite()) {
        return Err(DecayFitError::DegenerateTrace(format!("E({}) = {} is below {ENERGY_FLOOR:e}", t[i], e[i])));
    }
    let x: Vec<f64> = idx.iter().map(|&i| t[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| e[i].ln()).collect();
    let (a, b, rms) = line_fit(&x, &y);
    Ok(PowerFit {
        s: -b,
        intercept: a,
        residual: rms,
        t_lo: t[idx[0]],
        t_hi: t[*idx.last().unwrap()],
        points: idx.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Power,
    Exponential,
    Logarithmic,
    Plateau,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Power => "power",
            ModelKind::Exponential => "exponential",
            ModelKind::Logarithmic => "logarithmic",
            ModelKind::Plateau => "plateau",
        })
    }
}

/// Fitted decay family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayModel {
    /// `E = c (1+t)^{-s}`.
    Power { s: f64, c: f64 },
    /// `E = c exp(-rate t^power)`.
    Exponential { rate: f64, power: f64, c: f64 },
    /// `E = c (1 + ln(1+t))^{-p}`.
    Logarithmic { p: f64, c: f64 },
    /// `E = level + amplitude (1+t)^{-s}`.
    Plateau { level: f64, amplitude: f64, s: f64 },
}

impl DecayModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            DecayModel::Power { .. } => ModelKind::Power,
            DecayModel::Exponential { .. } => ModelKind::Exponential,
            DecayModel::Logarithmic { .. } => ModelKind::Logarithmic,
            DecayModel::Plateau { .. } => ModelKind::Plateau,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            DecayModel::Power { s, c } => c * (1.0 + t).powf(-s),
            DecayModel::Exponential { rate, power, c } => c * (-rate * t.powf(power)).exp(),
            DecayModel::Logarithmic { p, c } => c * (1.0 + t.ln_1p()).powf(-p),
            DecayModel::Plateau { level, amplitude, s } => level + amplitude * (1.0 + t).powf(-s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSelection {
    pub model: DecayModel,
    pub residual: f64,
    /// Every family that produced a valid fit, best first.
    pub ranking: Vec<(DecayModel, f64)>,
}

fn log_rms(t: &[f64], ln_e: &[f64], model: &DecayModel) -> f64 {
    let mut s = 0.0;
    for (&ti, &yi) in t.iter().zip(ln_e) {
        let v = model.eval(ti);
        if !(v > 0.0) || !v.is_finite() {
            return f64::INFINITY;
        }
        s += (yi - v.ln()).powi(2);
    }
    (s / t.len() as f64).sqrt()
}

/// Minimizes `f` over `[lo, hi]` by golden-section search.
fn golden_min(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn fit_exponential(t: &[f64], y: &[f64]) -> DecayModel {
    let fit_at = |beta: f64| {
        let x: Vec<f64> = t.iter().map(|&s| s.powf(beta)).collect();
        let (a, b, rms) = line_fit(&x, y);
        (DecayModel::Exponential { rate: -b, power: beta, c: a.exp() }, rms)
    };
    let ln_beta = golden_min(0.1f64.ln(), 10f64.ln(), |lb| fit_at(lb.exp()).1);
    fit_at(ln_beta.exp()).0
}

/// Weighted (relative) least squares for `E = L + B (1+t)^{-s}` at fixed `s`.
fn plateau_at(t: &[f64], e: &[f64], s: f64) -> DecayModel {
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &ei) in t.iter().zip(e) {
        let w = 1.0 / (ei * ei);
        let phi = (1.0 + ti).powf(-s);
        s11 += w;
        s12 += w * phi;
        s22 += w * phi * phi;
        r1 += w * ei;
        r2 += w * ei * phi;
    }
    let det = s11 * s22 - s12 * s12;
    let (level, amplitude) = if det.abs() > 1e-300 {
        ((r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det)
    } else {
        (r1 / s11, 0.0)
    };
    DecayModel::Plateau { level, amplitude, s }
}

/// Fits the four decay families to all samples with `t > 0` and
/// `E >= ENERGY_FLOOR` and returns the one with the smallest log-space RMS.
pub fn fit_model_select<T: Real>(trace: &ScalarTrace<T>) -> Result<ModelSelection> {
    let mut t = Vec::new();
    let mut e = Vec::new();
    for (&ti, &ei) in trace.times.iter().zip(&trace.values) {
        let (ti, ei) = (ti.to_f64_lossy(), ei.to_f64_lossy());
        if !ei.is_finite() || !ti.is_finite() {
            return Err(DecayFitError::DegenerateTrace(format!("non-finite sample at t = {ti}")));
        }
        if ti > 0.0 && ei >= ENERGY_FLOOR {
            t.push(ti);
            e.push(ei);
        }
    }
    if t.len() < 10 {
        return Err(DecayFitError::DegenerateTrace(format!(
            "{} usable samples, at least 10 needed",
            t.len()
        )));
    }
    let (e_min, e_max) = e.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if (e_max - e_min) <= 1e-9 * e_max {
        let level = e.iter().sum::<f64>() / e.len() as f64;
        let model = DecayModel::Plateau { level, amplitude: 0.0, s: 0.0 };
        return Ok(ModelSelection { model, residual: 0.0, ranking: vec![(model, 0.0)] });
    }
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();

    let mut candidates = Vec::with_capacity(4);
    let x: Vec<f64> = t.iter().map(|s| s.ln_1p()).collect();
    let (a, b, _) = line_fit(&x, &y);
    candidates.push(DecayModel::Power { s: -b, c: a.exp() });
    candidates.push(fit_exponential(&t, &y));
    let x: Vec<f64> = t.iter().map(|s| s.ln_1p().ln_1p()).collect();
    let (a, b, _) = line_fit(&x, &y);
    candidates.push(DecayModel::Logarithmic { p: -b, c: a.exp() });
    let ln_s = golden_min(0.01f64.ln(), 10f64.ln(), |ls| log_rms(&t, &y, &plateau_at(&t, &e, ls.exp())));
    let plateau = plateau_at(&t, &e, ln_s.exp());
    if let DecayModel::Plateau { level, .. } = plateau {
        if level >= 0.5 * e_min {
            candidates.push(plateau);
        }
    }

    let mut ranking: Vec<(DecayModel, f64)> = candidates
        .into_iter()
        .map(|m| {
            let r = log_rms(&t, &y, &m);
            (m, r)
        })
        .filter(|(_, r)| r.is_finite())
        .collect();
    ranking.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, best_residual) = ranking[0];
    if let Some(&(second, second_residual)) = ranking.get(1) {
        if second_residual - best_residual < AMBIGUITY_MARGIN * second_residual {
            return Err(DecayFitError::AmbiguousFit {
                best: best.kind(),
                best_residual,
                second: second.kind(),
                second_residual,
            });
        }
    }
    Ok(ModelSelection { model: best, residual: best_residual, ranking })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    SandwichOk,
    UpperOnlyOk,
    Violated,
    Degenerate,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::SandwichOk => "sandwich_ok",
            Verdict::UpperOnlyOk => "upper_only_ok",
            Verdict::Violated => "violated",
            Verdict::Degenerate => "degenerate",
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::SandwichOk | Verdict::UpperOnlyOk)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Theoretical decay exponent with the formula it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedExponent {
    pub value: f64,
    pub tag: ExponentTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentTag {
    AlphaPlusBeta,
    PLaplace,
    PorousMedium,
    Degenerate,
    Kirchhoff,
    Semilinear,
}

impl ExponentTag {
    pub fn formula(&self) -> &'static str {
        match self {
            ExponentTag::AlphaPlusBeta => "(α+β)",
            ExponentTag::PLaplace => "(α+β)/(p−1)",
            ExponentTag::PorousMedium => "(α+β)/(m+1)",
            ExponentTag::Degenerate => "(α+β)/(q+1)",
            ExponentTag::Kirchhoff => "(α+β)/(γ+p−1)",
            ExponentTag::Semilinear => "(α+β)/δ",
        }
    }
}

/// Outcome of an envelope check against `E(t) ~ 1/(1 + rate t^s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub verdict: Verdict,
    /// Envelope exponent `s` the trace was checked against.
    pub exponent: f64,
    /// Multiplier of `t^s` in the envelope profile.
    pub rate: f64,
    /// Tightest `M` with `E(t) <= M / (1 + rate t^s)` on the samples.
    pub upper_constant: f64,
    /// Tightest `m` with `E(t) >= m / (1 + rate t^s)`; reported for two-sided checks.
    pub lower_constant: Option<f64>,
    pub upper_ok: bool,
    pub lower_ok: bool,
    /// Log-log slope of `E(t)(1 + rate t^s)` over the tail window.
    pub tail_trend: f64,
    pub fit: Option<PowerFit>,
    pub predicted: Option<PredictedExponent>,
    /// Asymptotic level for traces that do not decay to zero.
    pub plateau: Option<f64>,
    pub window: FitWindow,
    pub note: Option<String>,
}

impl DecayReport {
    fn degenerate(exponent: f64, rate: f64, window: FitWindow, note: String) -> Self {
        Self {
            verdict: Verdict::Degenerate,
            exponent,
            rate,
            upper_constant: f64::NAN,
            lower_constant: None,
            upper_ok: false,
            lower_ok: false,
            tail_trend: f64::NAN,
            fit: None,
            predicted: None,
            plateau: None,
            window,
            note: Some(note),
        }
    }

    pub fn with_prediction(mut self, p: PredictedExponent) -> Self {
        self.predicted = Some(p);
        self
    }

    /// One-line summary used by the CLI.
    pub fn summary_line(&self) -> String {
        let fit = self.fit.map_or("fit=n/a".to_string(), |f| format!("fit_s={:.6} residual={:.3e}", f.s, f.residual));
        let lower = self.lower_constant.map_or("n/a".to_string(), |m| format!("{m:.6e}"));
        format!(
            "verdict={} s={} M={:.6e} m={} trend={:.4} {}",
            self.verdict, self.exponent, self.upper_constant, lower, self.tail_trend, fit
        )
    }
}

/// Relative slack on the tail trend: the profile `E (1 + rate t^s)` may drift
/// by at most `TREND_TOLERANCE * s` in log-log slope.
pub const TREND_TOLERANCE: f64 = 0.1;

/// Checks `E` against `1/(1 + t^s)`.
pub fn check_envelope<T: Real>(trace: &ScalarTrace<T>, s: f64, two_sided: bool) -> DecayReport {
    check_envelope_with(trace, s, 1.0, two_sided, FitWindow::default())
}

/// Checks `E` against `1/(1 + rate t^s)`.
///
/// On a finite window `M` and `m` are always finite once `E > 0`, so the
/// verdict also looks at the log-log slope of `g = E (1 + rate t^s)` over the
/// tail window: a sandwich needs `g` flat, an upper bound needs `g` not growing,
/// each up to `TREND_TOLERANCE * s`.
pub fn check_envelope_with<T: Real>(
    trace: &ScalarTrace<T>,
    s: f64,
    rate: f64,
    two_sided: bool,
    window: FitWindow,
) -> DecayReport {
    let t = to_f64(&trace.times);
    let e = to_f64(&trace.values);
    if t.len() < 2 {
        return DecayReport::degenerate(s, rate, window, "fewer than two samples".into());
    }
    if e.iter().any(|v| !v.is_finite()) {
        return DecayReport::degenerate(s, rate, window, "non-finite energy".into());
    }
    if e.iter().all(|&v| v == 0.0) {
        return DecayReport::degenerate(s, rate, window, "zero solution".into());
    }
    let g: Vec<f64> = t.iter().zip(&e).map(|(&ti, &ei)| ei * (1.0 + rate * ti.powf(s))).collect();
    let upper_constant = g.iter().cloned().fold(0.0, f64::max);
    let lower_constant = g.iter().cloned().fold(f64::INFINITY, f64::min);

    let idx: Vec<usize> = window.select(&t).into_iter().filter(|&i| g[i] > 0.0).collect();
    let tail_trend = if idx.len() >= 2 {
        let x: Vec<f64> = idx.iter().map(|&i| t[i].ln()).collect();
        let y: Vec<f64> = idx.iter().map(|&i| g[i].ln()).collect();
        line_fit(&x, &y).1
    } else {
        f64::NAN
    };
    let slack = TREND_TOLERANCE * s;
    let upper_ok = upper_constant.is_finite() && upper_constant > 0.0 && tail_trend <= slack;
    let lower_ok = lower_constant > 0.0 && tail_trend >= -slack;
    let verdict = match (two_sided, upper_ok, lower_ok) {
        (true, true, true) => Verdict::SandwichOk,
        (false, true, _) => Verdict::UpperOnlyOk,
        _ => Verdict::Violated,
    };
    DecayReport {
        verdict,
        exponent: s,
        rate,
        upper_constant,
        lower_constant: two_sided.then_some(lower_constant),
        upper_ok,
        lower_ok,
        tail_trend,
        fit: fit_power_tail(trace, window).ok(),
        predicted: None,
        plateau: None,
        window,
        note: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_trace(lo: f64, hi: f64, per_decade: usize, f: impl Fn(f64) -> f64) -> ScalarTrace<f64> {
        let n = ((hi / lo).log10() * per_decade as f64).round() as usize;
        let times: Vec<f64> = (0..=n).map(|i| lo * 10f64.powf(i as f64 / per_decade as f64)).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        ScalarTrace { times, values }
    }

    #[test]
    fn power_tail_of_rational_profile() {
        let tr = log_trace(1e-2, 1e3, 40, |t| 1.0 / (1.0 + t * t));
        let f = fit_power_tail(&tr, FitWindow::default()).unwrap();
        assert!((f.s - 2.0).abs() <= 0.02, "{}", f.s);
        assert!(f.is_power_like());
    }

    #[test]
    fn exponential_is_not_power_like() {
        let tr = log_trace(1e-2, 30.0, 40, |t| (-t).exp());
        let f = fit_power_tail(&tr, FitWindow::default()).unwrap();
        assert!(!f.is_power_like(), "{}", f.residual);
        let sel = fit_model_select(&tr).unwrap();
        assert_eq!(sel.model.kind(), ModelKind::Exponential);
    }

    #[test]
    fn degenerate_inputs() {
        let tr = log_trace(1e-2, 1e3, 40, |_| 0.0);
        assert!(matches!(fit_power_tail(&tr, FitWindow::default()), Err(DecayFitError::DegenerateTrace(_))));
        assert_eq!(check_envelope(&tr, 1.0, true).verdict, Verdict::Degenerate);
        let short = ScalarTrace { times: vec![1.0, 2.0], values: vec![1.0, 0.5] };
        assert!(fit_power_tail(&short, FitWindow::default()).is_err());
    }

    #[test]
    fn envelope_examples() {
        let exact = log_trace(1e-2, 1e3, 40, |t| 1.0 / (1.0 + t));
        let r = check_envelope(&exact, 1.0, true);
        assert_eq!(r.verdict, Verdict::SandwichOk);
        assert!((r.upper_constant - 1.0).abs() < 1e-12 && (r.lower_constant.unwrap() - 1.0).abs() < 1e-12);

        let faster = log_trace(1e-2, 1e3, 40, |t| 1.0 / (1.0 + t * t));
        let r = check_envelope(&faster, 1.0, true);
        assert_eq!(r.verdict, Verdict::Violated);
        assert!(r.upper_ok && !r.lower_ok);
        assert_eq!(check_envelope(&faster, 1.0, false).verdict, Verdict::UpperOnlyOk);

        let slower = log_trace(1e-2, 1e3, 40, |t| 1.0 / (1.0 + t.sqrt()));
        let r = check_envelope(&slower, 1.0, false);
        assert_eq!(r.verdict, Verdict::Violated);
    }

    #[test]
    fn flat_trace_is_plateau() {
        let tr = log_trace(1e-2, 1e3, 40, |_| 1.772);
        let sel = fit_model_select(&tr).unwrap();
        assert!(matches!(sel.model, DecayModel::Plateau { level, .. } if (level - 1.772).abs() < 1e-12));
    }
}
