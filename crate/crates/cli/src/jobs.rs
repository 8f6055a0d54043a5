//! Typed jobs behind every solve subcommand and experiment-file run.
//!
//! [`plan`] parses and validates a parameter map without solving anything;
//! [`Job::execute`] does the work and renders the outputs.

use std::f64::consts::PI;
use std::fmt::Write as _;

use fracdecay_core::decayfit::{
    check_envelope_with, fit_model_select, DecayModel, DecayReport, ExponentTag, FitWindow, PredictedExponent, Verdict,
};
use fracdecay_core::fracode::{lemma_envelope, sandwich_constants, solve_linear_mode, solve_semilinear, TimeGrid};
use fracdecay_core::nonlinear::{
    check_energy_inequality, predict_exponent, run_scenario, solve_nonlinear, KirchhoffLaw, NonlinearOptions,
    NonlinearProblem, OperatorSpec, PowerLaw, Scenario, ScenarioParams, SourceSpec, SpatialGrid1D,
};
use fracdecay_core::specfun::{
    kilbas_saigo, kilbas_saigo_bounds, DecayFunction, KilbasSaigoParams, SeriesAccuracy,
};
use fracdecay_core::spectral::{
    log_sample_times, project_initial_data, solve_heat_general, solve_subdiffusion, verify_dirichlet_sandwich,
    verify_neumann, BoundaryKind, CoefficientSpec, EigenSystem, Geometry, SAMPLES_PER_DECADE,
};
use fracdecay_core::{
    CoefficientSpec64, EigenSystem64, NonlinearProblem64, SeriesAccuracy64, SemilinearParams64, TimeGrid64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csv::{Cell, Table};
use crate::error::{CliError, Result};
use crate::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Profile {
    #[default]
    Strict,
    Fast,
}

impl Profile {
    pub fn accuracy(&self) -> SeriesAccuracy64 {
        match self {
            Profile::Strict => SeriesAccuracy::default(),
            Profile::Fast => SeriesAccuracy::new(1e-10, 1e-8, 512).expect("valid accuracy"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Settings {
    pub seed: u64,
    pub profile: Profile,
}

/// Outcome class; ordered so that `max` picks the worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok,
    Degenerate,
    Violated,
}

impl Status {
    pub fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::SandwichOk | Verdict::UpperOnlyOk => Status::Ok,
            Verdict::Violated => Status::Violated,
            Verdict::Degenerate => Status::Degenerate,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violated => 3,
            Status::Degenerate => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobOutput {
    pub name: String,
    /// Main table first; the others carry a file-name suffix.
    pub tables: Vec<(Option<String>, Table)>,
    pub report: String,
    pub status: Status,
}

#[derive(Debug, Clone)]
pub enum Job {
    Specfun { alpha: f64, m: f64, l: f64, z: Vec<f64>, acc: SeriesAccuracy64 },
    Ode { alpha: f64, beta: f64, lambda: f64, u0: f64, grid: TimeGrid64, acc: SeriesAccuracy64 },
    Semilinear { alpha: f64, params: SemilinearParams64, grid: TimeGrid64 },
    Subdiffusion { alpha: f64, beta: f64, sys: EigenSystem64, u0: Vec<f64>, times: Vec<f64>, snapshots: usize },
    Heat { coefficient: CoefficientSpec64, sys: EigenSystem64, u0: Vec<f64>, times: Vec<f64>, snapshots: usize },
    Nonlinear { problem: NonlinearProblem64, beta: f64, u0: Vec<f64>, grid: TimeGrid64, opts: NonlinearOptions<f64>, snapshots: usize },
    Scenario { scenario: Scenario, params: ScenarioParams },
}

#[derive(Debug, Clone)]
pub struct JobPlan {
    pub name: String,
    pub kind: String,
    pub job: Job,
}

pub const KINDS: &[&str] =
    &["specfun", "ode", "semilinear", "subdiffusion", "heat", "nonlinear", "fisher_kpp", "semilinear_pme", "toy_model"];

/// Parses and validates; nothing is solved here.
pub fn plan(name: &str, params: &Params, settings: &Settings) -> Result<JobPlan> {
    let kind = params.opt_text("kind").ok_or_else(|| CliError::config("kind", "required parameter is missing"))?;
    let job = match kind.as_str() {
        "specfun" => plan_specfun(params, settings)?,
        "ode" => plan_ode(params, settings)?,
        "semilinear" => plan_semilinear(params)?,
        "subdiffusion" => plan_subdiffusion(params, settings)?,
        "heat" => plan_heat(params, settings)?,
        "nonlinear" => plan_nonlinear(params, settings)?,
        "fisher_kpp" | "semilinear_pme" | "toy_model" => plan_scenario(&kind, params)?,
        other => return Err(CliError::config("kind", format!("unknown kind '{other}', expected one of {KINDS:?}"))),
    };
    params.finish()?;
    Ok(JobPlan { name: name.to_string(), kind, job })
}

/// `alpha in (0, 1]` and hypothesis (H): `beta > -alpha`.
fn fractional_order(p: &Params) -> Result<(f64, f64)> {
    let alpha = p.num("alpha", 0.5)?;
    let beta = p.num("beta", 0.5)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CliError::config("alpha", format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if !(beta > -alpha) {
        return Err(CliError::config("beta", format!("hypothesis (H) requires beta > -alpha, got beta = {beta}, alpha = {alpha}")));
    }
    Ok((alpha, beta))
}

fn positive(p: &Params, key: &str, default: f64) -> Result<f64> {
    let v = p.num(key, default)?;
    if !(v > 0.0) {
        return Err(CliError::config(key, format!("{key} = {v} must be positive")));
    }
    Ok(v)
}

fn time_grid(p: &Params, alpha: f64, horizon: f64, steps: usize) -> Result<TimeGrid64> {
    let horizon = positive(p, "T", horizon)?;
    let steps = p.count("steps", steps)?;
    let grading = p.num("grading", TimeGrid::default_grading(alpha))?;
    TimeGrid::new(horizon, steps, grading).map_err(|e| CliError::config("steps", e.to_string()))
}

fn plan_specfun(p: &Params, settings: &Settings) -> Result<Job> {
    let alpha = positive(p, "alpha", 0.5)?;
    let m = positive(p, "m", 2.0)?;
    let l = p.num("l", m - 1.0)?;
    KilbasSaigoParams::new(alpha, m, l).map_err(|e| CliError::config("l", e.to_string()))?;
    let z = p.list("z")?.ok_or_else(|| CliError::config("z", "required parameter is missing"))?;
    let base = settings.profile.accuracy();
    let acc = SeriesAccuracy::new(
        p.num("abs_tol", base.abs_tol)?,
        p.num("rel_tol", base.rel_tol)?,
        p.count("max_terms", base.max_terms)?,
    )
    .map_err(|e| CliError::config("abs_tol", e.to_string()))?;
    Ok(Job::Specfun { alpha, m, l, z, acc })
}

fn plan_ode(p: &Params, settings: &Settings) -> Result<Job> {
    let (alpha, beta) = fractional_order(p)?;
    let lambda = p.num("lambda", 1.0)?;
    if !(lambda >= 0.0) {
        return Err(CliError::config("lambda", "lambda must be >= 0"));
    }
    let u0 = p.num("u0", 1.0)?;
    let grid = time_grid(p, alpha, 10.0, 4096)?;
    Ok(Job::Ode { alpha, beta, lambda, u0, grid, acc: settings.profile.accuracy() })
}

fn plan_semilinear(p: &Params) -> Result<Job> {
    let (alpha, beta) = fractional_order(p)?;
    let params = SemilinearParams64 {
        nu: p.num("nu", 1.0)?,
        delta: p.num("delta", 2.0)?,
        beta,
        h0: p.num("h0", 1.0)?,
    };
    params.validate(alpha).map_err(|e| CliError::config("delta", e.to_string()))?;
    let grid = time_grid(p, alpha, 100.0, 4096)?;
    Ok(Job::Semilinear { alpha, params, grid })
}

fn eigen_system(p: &Params) -> Result<EigenSystem64> {
    let length = positive(p, "L", PI)?;
    let geometry = match p.text("geometry", "interval").as_str() {
        "interval" => Geometry::Interval { length },
        "rectangle" => Geometry::Rectangle { lx: length, ly: positive(p, "Ly", PI)? },
        g => return Err(CliError::config("geometry", format!("unknown geometry '{g}'"))),
    };
    let boundary = match p.text("bc", "dirichlet").as_str() {
        "dirichlet" => BoundaryKind::Dirichlet,
        "neumann" => BoundaryKind::Neumann,
        b => return Err(CliError::config("bc", format!("unknown boundary condition '{b}'"))),
    };
    let modes = p.count("modes", 16)?;
    if modes == 0 {
        return Err(CliError::config("modes", "at least one mode is required"));
    }
    Ok(EigenSystem::new(geometry, boundary, modes)?)
}

type FieldFn = Box<dyn Fn(&[f64]) -> f64>;

/// `mode:K` / `modeK` (1-based), or a named initial profile.
fn mode_index(preset: &str) -> Option<usize> {
    let k = preset.strip_prefix("mode")?;
    k.trim_start_matches(':').parse::<usize>().ok().filter(|&k| k >= 1)
}

fn spectral_initial_data(p: &Params, sys: &EigenSystem64, settings: &Settings) -> Result<Vec<f64>> {
    let preset = p.text("u0", "mode1");
    let scale = p.num("u0_scale", 1.0)?;
    let n = sys.len();
    let is_list = preset.split(',').all(|v| v.trim().parse::<f64>().is_ok());
    let mut coeffs = match preset.as_str() {
        _ if is_list => {
            let mut c = p.list("u0")?.unwrap_or_default();
            if c.len() > n {
                return Err(CliError::config("u0", format!("{} coefficients given for {n} modes", c.len())));
            }
            c.resize(n, 0.0);
            c
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            (1..=n).map(|k| rng.gen_range(-1.0..1.0) / k as f64).collect()
        }
        other => {
            if let Some(k) = mode_index(other) {
                if k > n {
                    return Err(CliError::config("u0", format!("mode {k} exceeds the {n} modes")));
                }
                let mut c = vec![0.0; n];
                c[k - 1] = 1.0;
                c
            } else {
                let (lx, ly) = match sys.geometry() {
                    Geometry::Interval { length } => (length, None),
                    Geometry::Rectangle { lx, ly } => (lx, Some(ly)),
                };
                let f: FieldFn = match other {
                    "parabola" => Box::new(move |x: &[f64]| {
                        x[0] * (lx - x[0]) * ly.map_or(1.0, |ly| x[1] * (ly - x[1]))
                    }),
                    "mixed" => Box::new(move |x: &[f64]| {
                        x[0] * (lx - x[0]) * (1.0 + x[0].cos()) * ly.map_or(1.0, |ly| x[1] * (ly - x[1]))
                    }),
                    "constant" => Box::new(|_: &[f64]| 1.0),
                    "neumann_mix" => Box::new(move |x: &[f64]| 1.0 + (PI * x[0] / lx).cos()),
                    _ => {
                        return Err(CliError::config(
                            "u0",
                            format!("unknown preset '{other}' (modeK, parabola, mixed, constant, neumann_mix, random, or a coefficient list)"),
                        ))
                    }
                };
                project_initial_data(sys, f)?.coeffs
            }
        }
    };
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(coeffs)
}

fn sample_times(p: &Params, horizon: f64) -> Result<Vec<f64>> {
    let horizon = positive(p, "T", horizon)?;
    let t_min = positive(p, "t_min", 1e-2)?;
    if !(horizon > t_min) {
        return Err(CliError::config("T", format!("T = {horizon} must exceed t_min = {t_min}")));
    }
    let per_decade = p.count("per_decade", SAMPLES_PER_DECADE)?;
    Ok(log_sample_times(t_min, horizon, per_decade.max(1)))
}

fn plan_subdiffusion(p: &Params, settings: &Settings) -> Result<Job> {
    let (alpha, beta) = fractional_order(p)?;
    let sys = eigen_system(p)?;
    let u0 = spectral_initial_data(p, &sys, settings)?;
    let times = sample_times(p, 1e3)?;
    let snapshots = p.count("snapshots", 0)?;
    Ok(Job::Subdiffusion { alpha, beta, sys, u0, times, snapshots })
}

fn plan_heat(p: &Params, settings: &Settings) -> Result<Job> {
    let coefficient = match p.text("coefficient", "exponential").as_str() {
        "power" => {
            let beta = p.num("beta", 0.0)?;
            if !(beta > -1.0) {
                return Err(CliError::config("beta", format!("hypothesis (H) requires beta > -1 for the heat equation, got {beta}")));
            }
            CoefficientSpec::Power { kappa: positive(p, "kappa", 1.0)?, beta }
        }
        "exponential" => CoefficientSpec::ExponentialRate { beta: positive(p, "beta", 2.0)? },
        "logarithmic" => CoefficientSpec::Logarithmic { p: positive(p, "p", 3.0)? },
        "polynomial" => CoefficientSpec::Polynomial {
            q: positive(p, "q", 1.0)?,
            coeffs: p.list("poly")?.unwrap_or_else(|| vec![1.0, 1.0]),
        },
        "modulated" => CoefficientSpec::PowerModulated {
            beta: p.num("beta", 0.5)?,
            offset: p.num("offset", 2.0)?,
            amplitude: p.num("amplitude", 1.0)?,
            frequency: p.num("frequency", 1.0)?,
        },
        c => return Err(CliError::config("coefficient", format!("unknown coefficient kind '{c}'"))),
    };
    coefficient.validate().map_err(|e| CliError::config("coefficient", e.to_string()))?;
    let sys = eigen_system(p)?;
    let u0 = spectral_initial_data(p, &sys, settings)?;
    let times = sample_times(p, 100.0)?;
    let snapshots = p.count("snapshots", 0)?;
    Ok(Job::Heat { coefficient, sys, u0, times, snapshots })
}

fn operator(p: &Params) -> Result<OperatorSpec<f64>> {
    let op = match p.text("operator", "laplace").as_str() {
        "laplace" => OperatorSpec::Laplace,
        "p_laplace" => OperatorSpec::PLaplace { p: p.num("p", 3.0)? },
        "porous_medium" => {
            let m = p.num("m", 1.0)?;
            OperatorSpec::PorousMedium { g: PowerLaw::pure(p.num("c0", 1.0)?, m), m, c0: p.num("c0", 1.0)? }
        }
        "degenerate" => {
            let q = p.num("q", 1.0)?;
            OperatorSpec::Degenerate { f: PowerLaw::pure(p.num("c1", 1.0)?, q), q, c1: p.num("c1", 1.0)? }
        }
        "mean_curvature" => OperatorSpec::MeanCurvature,
        "kirchhoff" => {
            let (k1, k2) = (p.num("k1", 1.0)?, p.num("k2", 1.0)?);
            let gamma = p.num("gamma", 1.0)?;
            let law = match p.text("kirchhoff_law", "affine").as_str() {
                "affine" => KirchhoffLaw::Affine { k1, k2 },
                "power" => KirchhoffLaw::Power { b: k2, gamma },
                "exponential" => KirchhoffLaw::Exponential { k: k2 },
                "one_plus_power" => KirchhoffLaw::OnePlusPower { gamma },
                "constant" => KirchhoffLaw::Constant { k: k1 },
                l => return Err(CliError::config("kirchhoff_law", format!("unknown law '{l}'"))),
            };
            OperatorSpec::Kirchhoff { law, gamma, b: p.num("b", k2)?, p: p.num("p", 2.0)?, q: p.num("q", 2.0)? }
        }
        o => return Err(CliError::config("operator", format!("unknown operator '{o}'"))),
    };
    Ok(op)
}

fn plan_nonlinear(p: &Params, settings: &Settings) -> Result<Job> {
    let (alpha, beta) = fractional_order(p)?;
    let operator = operator(p)?;
    let source = match p.text("source", "none").as_str() {
        "none" => SourceSpec::None,
        "fisher_kpp" => SourceSpec::FisherKpp,
        "power_absorption" => SourceSpec::PowerAbsorption { mu: p.num("mu", 1.0)?, p: p.num("source_p", 2.0)? },
        s => return Err(CliError::config("source", format!("unknown source '{s}'"))),
    };
    let space = SpatialGrid1D::new(positive(p, "L", PI)?, p.count("points", 255)?)?;
    let problem = NonlinearProblem {
        operator,
        source,
        alpha,
        coefficient: CoefficientSpec::Power { kappa: positive(p, "kappa", 1.0)?, beta },
        space,
    };
    problem.validate()?;
    let amp = p.num("amplitude", 1.0)?;
    let k = PI / space.length();
    let preset = p.text("u0_preset", "sine");
    let u0 = match preset.as_str() {
        "sine" => space.sample(|x| amp * (k * x).sin()),
        "bump" => space.sample(|x| amp * (k * x).sin().powi(2)),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            let c: Vec<f64> = (1..=5).map(|j| rng.gen_range(0.0..1.0) / j as f64).collect();
            space.sample(|x| amp * c.iter().enumerate().map(|(j, cj)| cj * ((j + 1) as f64 * k * x).sin()).sum::<f64>())
        }
        other => match mode_index(other) {
            Some(j) => space.sample(|x| amp * (j as f64 * k * x).sin()),
            None => return Err(CliError::config("u0_preset", format!("unknown preset '{other}' (sine, bump, modeK, random)"))),
        },
    };
    if matches!(source, SourceSpec::FisherKpp) && !u0.iter().all(|&v| v > 0.0 && v <= 1.0) {
        return Err(CliError::config("amplitude", "Fisher-KPP needs 0 < u0 <= 1"));
    }
    let grid = time_grid(p, alpha, 100.0, 2048)?;
    let opts = NonlinearOptions { sweeps: p.count("sweeps", 1)?, ..Default::default() };
    if !(1..=10).contains(&opts.sweeps) {
        return Err(CliError::config("sweeps", "sweeps must lie in 1..=10"));
    }
    let snapshots = p.count("snapshots", 0)?;
    Ok(Job::Nonlinear { problem, beta, u0, grid, opts, snapshots })
}

fn plan_scenario(kind: &str, p: &Params) -> Result<Job> {
    let scenario: Scenario = kind.parse()?;
    let (alpha, beta) = fractional_order(p)?;
    let d = ScenarioParams::default();
    let params = ScenarioParams {
        alpha,
        beta,
        mu: p.num("mu", d.mu)?,
        m: p.num("m", d.m)?,
        p: p.num("p", d.p)?,
        length: positive(p, "L", d.length)?,
        points: p.count("points", d.points)?,
        horizon: positive(p, "T", d.horizon)?,
        steps: p.count("steps", d.steps)?,
        grading: p.opt_num("grading")?,
        amplitude: p.num("amplitude", d.amplitude)?,
    };
    match scenario {
        Scenario::FisherKpp if !(params.amplitude > 0.0 && params.amplitude <= 1.0) => {
            return Err(CliError::config("amplitude", "Fisher-KPP needs 0 < u0 <= 1"))
        }
        Scenario::SemilinearPme if !(params.mu >= 0.0) => return Err(CliError::config("mu", "pme needs mu >= 0")),
        Scenario::SemilinearPme if !(params.m >= 0.0) => return Err(CliError::config("m", "pme needs m >= 0")),
        Scenario::SemilinearPme if !(params.p > 1.0) => return Err(CliError::config("p", "pme needs p > 1")),
        _ => {}
    }
    Ok(Job::Scenario { scenario, params })
}

/// Multi-line report block for an envelope check.
pub fn render_report(name: &str, kind: &str, r: &DecayReport, extra: &[String]) -> String {
    let mut s = format!("[{name}] kind={kind}\n{}\n", r.summary_line());
    if let Some(p) = r.predicted {
        let _ = writeln!(s, "  predicted exponent: {} = {}", p.tag.formula(), p.value);
    }
    let _ = writeln!(s, "  envelope: E(t) against 1/(1 + {} t^{})", r.rate, r.exponent);
    let _ = writeln!(s, "  upper_ok={} lower_ok={} tail_trend={:.6}", r.upper_ok, r.lower_ok, r.tail_trend);
    if let Some(f) = r.fit {
        let _ = writeln!(
            s,
            "  tail fit: s={:.6} intercept={:.6} residual={:.3e} window=[{:.6e}, {:.6e}] points={}",
            f.s, f.intercept, f.residual, f.t_lo, f.t_hi, f.points
        );
    }
    let _ = writeln!(
        s,
        "  fit window: last {} decades, final {}% of samples excluded",
        r.window.decades,
        r.window.exclude_fraction * 100.0
    );
    if let Some(l) = r.plateau {
        let _ = writeln!(s, "  plateau: {l}");
    }
    if let Some(n) = &r.note {
        let _ = writeln!(s, "  note: {n}");
    }
    for line in extra {
        let _ = writeln!(s, "  {line}");
    }
    s
}

fn envelope_table(times: &[f64], energy: &[f64], r: &DecayReport, offset: f64) -> Table {
    let mut t = Table::new(&["t", "E", "bound_lower", "bound_upper"]);
    for (&ti, &e) in times.iter().zip(energy) {
        let prof = 1.0 + r.rate * ti.powf(r.exponent);
        let lower = r.lower_constant.map_or(f64::NAN, |m| offset + m / prof);
        t.push(vec![ti.into(), e.into(), lower.into(), (offset + r.upper_constant / prof).into()]);
    }
    t
}

fn model_line(m: &DecayModel) -> String {
    match *m {
        DecayModel::Power { s, c } => format!("power s={s:.6} c={c:.6}"),
        DecayModel::Exponential { rate, power, c } => format!("exponential rate={rate:.6} power={power:.6} c={c:.6}"),
        DecayModel::Logarithmic { p, c } => format!("logarithmic p={p:.6} c={c:.6}"),
        DecayModel::Plateau { level, amplitude, s } => format!("plateau level={level:.6} amplitude={amplitude:.6} s={s:.6}"),
    }
}

impl JobPlan {
    pub fn execute(&self) -> Result<JobOutput> {
        let (name, kind) = (self.name.as_str(), self.kind.as_str());
        match &self.job {
            Job::Specfun { alpha, m, l, z, acc } => {
                let params = KilbasSaigoParams::new(*alpha, *m, *l)?;
                let decay = (*l - (*m - 1.0)).abs() < 1e-12 && *m > 1.0;
                let z_max = z.iter().fold(0.0f64, |a, &v| a.max(-v));
                let dispatcher = if decay && z_max > 0.0 { Some(DecayFunction::new(*alpha, *m, z_max, *acc)?) } else { None };
                let mut table = Table::new(&["z", "value", "route", "lower", "upper"]);
                let mut report = format!("[{name}] kind={kind} alpha={alpha} m={m} l={l}\n");
                for &zi in z {
                    let (value, route) = match (&dispatcher, zi <= 0.0) {
                        (Some(d), true) => {
                            let v = d.eval(-zi)?;
                            (v.value, format!("{:?}", v.route).to_lowercase())
                        }
                        _ => (kilbas_saigo(&params, zi, acc)?, "series".to_string()),
                    };
                    let (lo, hi) = if decay && zi <= 0.0 {
                        kilbas_saigo_bounds(*alpha, *m, -zi).map_or((f64::NAN, f64::NAN), |b| (b.lower, b.upper))
                    } else {
                        (f64::NAN, f64::NAN)
                    };
                    let _ = writeln!(report, "  E({zi}) = {value:.17e} route={route}");
                    table.push(vec![zi.into(), value.into(), route.as_str().into(), lo.into(), hi.into()]);
                }
                Ok(JobOutput { name: name.into(), tables: vec![(None, table)], report, status: Status::Ok })
            }
            Job::Ode { alpha, beta, lambda, u0, grid, acc } => {
                let trace = solve_linear_mode(*alpha, *beta, *lambda, *u0, grid)?;
                let s = alpha + beta;
                let m = 1.0 + beta / alpha;
                let exact: Vec<f64> = if *lambda > 0.0 {
                    let f = DecayFunction::new(*alpha, m, lambda * grid.horizon().powf(s), *acc)?;
                    trace.times.iter().map(|&t| f.eval(lambda * t.powf(s)).map(|v| u0 * v.value)).collect::<std::result::Result<_, _>>()?
                } else {
                    vec![*u0; trace.len()]
                };
                let mut table = Table::new(&["t", "u", "exact"]);
                let mut max_rel = 0.0f64;
                for ((&t, &u), &x) in trace.times.iter().zip(&trace.values).zip(&exact) {
                    if t >= 0.1 && x != 0.0 {
                        max_rel = max_rel.max((u / x - 1.0).abs());
                    }
                    table.push(vec![t.into(), u.into(), x.into()]);
                }
                let extra = vec![format!("max relative error against the closed form for t >= 0.1: {max_rel:.3e}")];
                let (report, status) = if *lambda > 0.0 {
                    let pred = PredictedExponent { value: s, tag: ExponentTag::AlphaPlusBeta };
                    let mut abs = trace.clone();
                    abs.values.iter_mut().for_each(|v| *v = v.abs());
                    let r = check_envelope_with(&abs, s, *lambda, true, FitWindow::default()).with_prediction(pred);
                    (render_report(name, kind, &r, &extra), Status::from_verdict(r.verdict))
                } else {
                    (format!("[{name}] kind={kind}\nlambda = 0: constant solution\n  {}\n", extra[0]), Status::Ok)
                };
                Ok(JobOutput { name: name.into(), tables: vec![(None, table)], report, status })
            }
            Job::Semilinear { alpha, params, grid } => {
                let trace = solve_semilinear(params, *alpha, grid)?;
                let s = (alpha + params.beta) / params.delta;
                let pred = PredictedExponent { value: s, tag: ExponentTag::Semilinear };
                let r = check_envelope_with(&trace, s, 1.0, false, FitWindow::default()).with_prediction(pred);
                let mut table = Table::new(&["t", "H", "sub_envelope", "super_envelope"]);
                let mut extra = Vec::new();
                let mut status = Status::from_verdict(r.verdict);
                if *alpha < 1.0 {
                    let env = lemma_envelope(params, *alpha)?;
                    let sw = sandwich_constants(&trace, &env);
                    for (&t, &h) in trace.times.iter().zip(&trace.values) {
                        table.push(vec![t.into(), h.into(), env.sub_solution(t).into(), env.super_solution(t).into()]);
                    }
                    extra.push(format!("t1={:.6e} t2={:.6e}", env.t1, env.t2));
                    extra.push(format!("c*sub <= H <= C*super with c={:.6e} C={:.6e} holds={}", sw.c1, sw.c2, sw.holds()));
                    if !sw.holds() {
                        status = Status::Violated;
                    }
                } else {
                    for (&t, &h) in trace.times.iter().zip(&trace.values) {
                        table.push(vec![t.into(), h.into(), f64::NAN.into(), f64::NAN.into()]);
                    }
                    extra.push("alpha = 1: no lemma envelope".into());
                }
                Ok(JobOutput { name: name.into(), tables: vec![(None, table)], report: render_report(name, kind, &r, &extra), status })
            }
            Job::Subdiffusion { alpha, beta, sys, u0, times, snapshots } => {
                let trace = solve_subdiffusion(sys, *alpha, *beta, u0, times)?;
                let r = match sys.boundary() {
                    BoundaryKind::Dirichlet => verify_dirichlet_sandwich(&trace, sys, *alpha, *beta),
                    BoundaryKind::Neumann => {
                        verify_neumann(&trace, sys, *alpha, *beta, u0[0], u0.get(1).copied().unwrap_or(0.0))
                    }
                }
                .with_prediction(PredictedExponent { value: alpha + beta, tag: ExponentTag::AlphaPlusBeta });
                let extra = vec![
                    format!("modes={} first positive eigenvalue={}", sys.len(), sys.first_positive_eigenvalue()),
                    format!("E(0)={:.17e}", trace.energy[0]),
                ];
                let mut tables = vec![(None, envelope_table(&trace.times, &trace.energy, &r, r.plateau.unwrap_or(0.0)))];
                if *snapshots > 0 {
                    tables.push((Some("fields".into()), spectral_snapshots(&trace, sys, *snapshots)));
                }
                Ok(JobOutput {
                    name: name.into(),
                    tables,
                    report: render_report(name, kind, &r, &extra),
                    status: Status::from_verdict(r.verdict),
                })
            }
            Job::Heat { coefficient, sys, u0, times, snapshots } => {
                let trace = solve_heat_general(sys, coefficient, u0, times)?;
                let mut report = format!("[{name}] kind={kind} coefficient={coefficient:?}\n");
                // Exact envelopes: every mode decays between the slowest and the
                // fastest positive eigenvalue present in the data.
                let e0 = trace.energy[0];
                let still: f64 = sys.modes().iter().zip(u0).filter(|(m, _)| m.lambda == 0.0).map(|(_, c)| c * c).sum();
                let active = sys.modes().iter().zip(u0).filter(|(m, c)| m.lambda > 0.0 && **c != 0.0);
                let (lo_rate, hi_rate) = active.fold((f64::INFINITY, 0.0f64), |(lo, hi), (m, _)| (lo.min(m.lambda), hi.max(m.lambda)));
                let envelope = |rate: f64, t: f64| {
                    let decay = if rate.is_finite() { (-2.0 * rate * coefficient.primitive(t)).exp() } else { 0.0 };
                    (still + (e0 * e0 - still) * decay).max(0.0).sqrt()
                };
                let selection = fit_model_select(&trace.energy_trace());
                let status = match &selection {
                    Ok(sel) => {
                        let _ = writeln!(report, "model: {} residual={:.3e}", model_line(&sel.model), sel.residual);
                        for (m, res) in &sel.ranking {
                            let _ = writeln!(report, "  candidate {} residual={res:.3e}", model_line(m));
                        }
                        Status::Ok
                    }
                    Err(fracdecay_core::decayfit::DecayFitError::DegenerateTrace(why)) => {
                        let _ = writeln!(report, "model: none (degenerate trace: {why})");
                        Status::Degenerate
                    }
                    Err(e) => {
                        let _ = writeln!(report, "model: none ({e})");
                        Status::Violated
                    }
                };
                let mut table = Table::new(&["t", "E", "bound_lower", "bound_upper", "model"]);
                let mut inside = true;
                for (&t, &e) in trace.times.iter().zip(&trace.energy) {
                    let (lo, hi) = (envelope(hi_rate, t), envelope(lo_rate, t));
                    inside &= e >= lo * (1.0 - 1e-9) - 1e-14 && e <= hi * (1.0 + 1e-9) + 1e-14;
                    let model = selection.as_ref().map_or(f64::NAN, |sel| sel.model.eval(t));
                    table.push(vec![t.into(), e.into(), lo.into(), hi.into(), model.into()]);
                }
                let _ = writeln!(report, "  exact modal envelopes hold: {inside}");
                let status = if inside { status } else { Status::Violated };
                let mut tables = vec![(None, table)];
                if *snapshots > 0 {
                    tables.push((Some("fields".into()), spectral_snapshots(&trace, sys, *snapshots)));
                }
                Ok(JobOutput { name: name.into(), tables, report, status })
            }
            Job::Nonlinear { problem, beta, u0, grid, opts, snapshots } => {
                let run = solve_nonlinear(problem, u0, grid, opts)?;
                let pred = predict_exponent(&problem.operator, problem.alpha, *beta)?;
                let mut r = check_envelope_with(&run.trace.energy_trace(), pred.value, 1.0, false, FitWindow::default())
                    .with_prediction(pred);
                let ineq = check_energy_inequality(&run.trace, problem.alpha)?;
                let margin = ineq.min_margin();
                if margin < -1e-8 {
                    r.verdict = Verdict::Violated;
                    r.note = Some(format!("energy inequality margin {margin:.3e} below -1e-8"));
                }
                let extra = vec![
                    format!("operator={} source={:?}", problem.operator.name(), problem.source),
                    format!("energy inequality: min margin {margin:.3e}"),
                    format!("sup |u_x| over the run: {:.6e}", run.max_gradient),
                ];
                let mut table = Table::new(&["t", "E", "predicted_bound"]);
                for (&t, &e) in run.trace.times.iter().zip(&run.trace.energy) {
                    table.push(vec![t.into(), e.into(), (r.upper_constant / (1.0 + t.powf(pred.value))).into()]);
                }
                let mut tables = vec![(None, table)];
                if *snapshots > 0 {
                    tables.push((Some("fields".into()), snapshot_table(&run.trace, &problem.space, *snapshots)));
                }
                Ok(JobOutput {
                    name: name.into(),
                    tables,
                    report: render_report(name, kind, &r, &extra),
                    status: Status::from_verdict(r.verdict),
                })
            }
            Job::Scenario { scenario, params } => {
                let run = run_scenario(*scenario, params)?;
                let r = &run.report;
                let rate = r.rate;
                let mut table = Table::new(&["t", "E", "bound"]);
                for (&t, &e) in run.trace.times.iter().zip(&run.trace.energy) {
                    table.push(vec![t.into(), e.into(), (r.upper_constant / (1.0 + rate * t.powf(r.exponent))).into()]);
                }
                let extra = vec![format!("sup |u_x| over the run: {:.6e}", run.max_gradient)];
                Ok(JobOutput {
                    name: name.into(),
                    tables: vec![(None, table)],
                    report: render_report(name, kind, r, &extra),
                    status: Status::from_verdict(r.verdict),
                })
            }
        }
    }
}

fn snapshot_indices(len: usize, count: usize) -> Vec<usize> {
    let last = len - 1;
    if count == 1 {
        return vec![last];
    }
    let mut p: Vec<usize> = (0..count).map(|i| i * last / (count - 1)).collect();
    p.dedup();
    p
}

/// Fields on a uniform grid (129 points, or 33 x 33 on a rectangle).
fn spectral_snapshots(trace: &fracdecay_core::SolutionTrace64, sys: &EigenSystem64, count: usize) -> Table {
    let modal = trace.modal.as_ref().expect("spectral traces carry modes");
    let picks = snapshot_indices(modal.len(), count);
    let times = picks.iter().map(|&j| format!("t={}", crate::csv::format_number(trace.times[j])));
    let points: Vec<Vec<f64>> = match sys.geometry() {
        Geometry::Interval { length } => (0..129).map(|i| vec![length * i as f64 / 128.0]).collect(),
        Geometry::Rectangle { lx, ly } => (0..33 * 33)
            .map(|i| vec![lx * (i / 33) as f64 / 32.0, ly * (i % 33) as f64 / 32.0])
            .collect(),
    };
    let mut header: Vec<String> = ["x", "y"][..points[0].len()].iter().map(|s| s.to_string()).collect();
    header.extend(times);
    let mut table = Table { header, rows: Vec::new() };
    for x in &points {
        let mut row: Vec<Cell> = x.iter().map(|&v| Cell::Num(v)).collect();
        row.extend(picks.iter().map(|&j| Cell::Num(sys.reconstruct(&modal[j], x))));
        table.rows.push(row);
    }
    table
}

fn snapshot_table(trace: &fracdecay_core::SolutionTrace64, space: &SpatialGrid1D<f64>, count: usize) -> Table {
    let fields = trace.fields.as_ref().expect("nonlinear runs keep fields");
    let picks = snapshot_indices(fields.len(), count);
    let mut header = vec!["x".to_string()];
    header.extend(picks.iter().map(|&j| format!("t={}", crate::csv::format_number(trace.times[j]))));
    let mut table = Table { header, rows: Vec::new() };
    for (i, x) in space.nodes().into_iter().enumerate() {
        let mut row: Vec<Cell> = vec![x.into()];
        row.extend(picks.iter().map(|&j| Cell::Num(fields[j][i])));
        table.rows.push(row);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, &str)]) -> Params {
        let mut p = Params::default();
        for (k, v) in pairs {
            p.set(k, v);
        }
        p
    }

    #[test]
    fn hypothesis_h_is_named() {
        let p = params(&[("kind", "subdiffusion"), ("alpha", "0.5"), ("beta", "-0.5")]);
        match plan("x", &p, &Settings::default()) {
            Err(CliError::Config { key, message }) => {
                assert_eq!(key, "beta");
                assert!(message.contains("hypothesis (H)"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_kinds() {
        let p = params(&[("kind", "ode"), ("lamda", "1")]);
        assert!(matches!(plan("x", &p, &Settings::default()), Err(CliError::Config { key, .. }) if key == "lamda"));
        let p = params(&[("kind", "bogus")]);
        assert!(matches!(plan("x", &p, &Settings::default()), Err(CliError::Config { key, .. }) if key == "kind"));
    }

    #[test]
    fn random_preset_follows_seed() {
        let p = params(&[("kind", "subdiffusion"), ("u0", "random"), ("modes", "8")]);
        let a = plan("x", &p, &Settings { seed: 1, ..Default::default() }).unwrap();
        let b = plan("x", &p, &Settings { seed: 1, ..Default::default() }).unwrap();
        let c = plan("x", &p, &Settings { seed: 2, ..Default::default() }).unwrap();
        let coeffs = |j: &JobPlan| match &j.job {
            Job::Subdiffusion { u0, .. } => u0.clone(),
            _ => unreachable!(),
        };
        assert_eq!(coeffs(&a), coeffs(&b));
        assert_ne!(coeffs(&a), coeffs(&c));
    }

    #[test]
    fn small_jobs_execute() {
        let s = Settings::default();
        let p = params(&[("kind", "specfun"), ("alpha", "1"), ("m", "2"), ("z", "-1,0.5")]);
        let out = plan("sf", &p, &s).unwrap().execute().unwrap();
        let v = match &out.tables[0].1.rows[0][1] {
            Cell::Num(v) => *v,
            _ => unreachable!(),
        };
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
        let p = params(&[("kind", "ode"), ("steps", "256")]);
        assert_eq!(plan("o", &p, &s).unwrap().execute().unwrap().status, Status::Ok);
        let p = params(&[("kind", "subdiffusion"), ("modes", "4")]);
        let out = plan("sd", &p, &s).unwrap().execute().unwrap();
        assert_eq!(out.status, Status::Ok, "{}", out.report);
        let p = params(&[("kind", "nonlinear"), ("points", "15"), ("steps", "64"), ("snapshots", "3")]);
        let out = plan("nl", &p, &s).unwrap().execute().unwrap();
        assert_eq!(out.tables.len(), 2);
        assert_eq!(out.tables[1].1.header.len(), 4);
    }
}
