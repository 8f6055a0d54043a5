//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracdecay_core::decayfit::{
    check_envelope_with, fit_model_select, fit_power_tail, DecayFitError, FitWindow, ModelKind, Verdict,
};

use crate::csv::{format_number, read_trace, Cell};
use crate::error::{CliError, Result};
use crate::jobs::{plan, render_report, Profile, Settings, Status};
use crate::params::Params;
use crate::reproduce::{render_rows, reproduce_all, ReproduceOptions};
use crate::runner::{run_experiment, write_outputs};

#[derive(Debug, Parser)]
#[command(name = "fracdecay", version, about = "Decay estimates for time-fractional evolution equations")]
pub struct Cli {
    /// Directory for CSV and report files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for experiment files.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for randomized initial data [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Special-function tolerances for the solve subcommands [default: strict].
    #[arg(long, global = true, value_enum)]
    pub tolerance_profile: Option<Profile>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kilbas-Saigo function values and bounds.
    Specfun {
        #[command(subcommand)]
        cmd: SpecfunCmd,
    },
    /// Scalar fractional ODEs (semilinear by default, linear with --lambda).
    Ode {
        #[command(subcommand)]
        cmd: OdeCmd,
    },
    /// Linear subdiffusion by eigenfunction expansion.
    Subdiffusion {
        #[command(subcommand)]
        cmd: SpectralCmd,
    },
    /// Heat equation with a time-dependent coefficient.
    Heat {
        #[command(subcommand)]
        cmd: HeatCmd,
    },
    /// Nonlinear 1-D problems on a finite-volume grid.
    Nonlinear {
        #[command(subcommand)]
        cmd: NonlinearCmd,
    },
    /// Decay analysis of an existing trace.
    Decay {
        #[command(subcommand)]
        cmd: DecayCmd,
    },
    /// Runs the full acceptance matrix.
    Reproduce(ReproduceArgs),
    /// Runs an experiment file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SpecfunCmd {
    Eval(SpecfunArgs),
}

#[derive(Debug, Subcommand)]
pub enum OdeCmd {
    Solve(OdeArgs),
}

#[derive(Debug, Subcommand)]
pub enum SpectralCmd {
    Solve(SubdiffusionArgs),
}

#[derive(Debug, Subcommand)]
pub enum HeatCmd {
    Solve(HeatArgs),
}

#[derive(Debug, Subcommand)]
pub enum NonlinearCmd {
    Solve(NonlinearArgs),
}

#[derive(Debug, Subcommand)]
pub enum DecayCmd {
    Fit(FitArgs),
}

/// Copies every given flag into the parameter map under its key.
macro_rules! fill {
    ($p:expr, $s:expr; $($field:ident => $key:literal),* $(,)?) => {
        $( if let Some(v) = &$s.$field { $p.set($key, v); } )*
    };
}

#[derive(Debug, Args)]
pub struct SpecfunArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    l: Option<String>,
    /// One value or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Args)]
pub struct OdeArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    h0: Option<String>,
    /// Linear mode `D u = -lambda t^beta u` instead of the semilinear equation.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    u0: Option<String>,
    #[arg(long = "T")]
    t: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    grading: Option<String>,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Args)]
pub struct SpaceArgs {
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    modes: Option<String>,
    /// Named preset or a comma-separated coefficient list.
    #[arg(long, allow_hyphen_values = true)]
    u0: Option<String>,
    #[arg(long)]
    u0_scale: Option<String>,
    #[arg(long = "L")]
    l: Option<String>,
    #[arg(long = "Ly")]
    ly: Option<String>,
    #[arg(long = "T")]
    t: Option<String>,
    #[arg(long)]
    t_min: Option<String>,
    #[arg(long)]
    per_decade: Option<String>,
    /// Number of field snapshots written as CSV grids.
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    name: Option<String>,
}

impl SpaceArgs {
    fn fill(&self, p: &mut Params) {
        fill!(p, self; geometry => "geometry", bc => "bc", modes => "modes", u0 => "u0", u0_scale => "u0_scale",
            l => "L", ly => "Ly", t => "T", t_min => "t_min", per_decade => "per_decade", snapshots => "snapshots");
    }
}

#[derive(Debug, Args)]
pub struct SubdiffusionArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[command(flatten)]
    space: SpaceArgs,
}

#[derive(Debug, Args)]
pub struct HeatArgs {
    /// power, exponential, logarithmic, polynomial or modulated.
    #[arg(long)]
    coefficient: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    poly: Option<String>,
    #[arg(long)]
    offset: Option<String>,
    #[arg(long)]
    amplitude: Option<String>,
    #[arg(long)]
    frequency: Option<String>,
    #[command(flatten)]
    space: SpaceArgs,
}

#[derive(Debug, Args)]
pub struct NonlinearArgs {
    #[arg(long)]
    operator: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    k1: Option<String>,
    #[arg(long)]
    k2: Option<String>,
    #[arg(long)]
    kirchhoff_law: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    source: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    #[arg(long)]
    source_p: Option<String>,
    #[arg(long)]
    u0_preset: Option<String>,
    #[arg(long)]
    amplitude: Option<String>,
    #[arg(long = "L")]
    l: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long = "T")]
    t: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    grading: Option<String>,
    #[arg(long)]
    sweeps: Option<String>,
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    name: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FitModel {
    Auto,
    Power,
    Exponential,
    Logarithmic,
    Plateau,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FitModel::Auto)]
    model: FitModel,
    /// Fit window in decades.
    #[arg(long, default_value_t = 2.0)]
    window: f64,
    /// Envelope exponent; defaults to the fitted tail exponent.
    #[arg(long)]
    exponent: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Check only the upper envelope.
    #[arg(long)]
    one_sided: bool,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Multiplies the special-function series tolerances (negative testing).
    #[arg(long, default_value_t = 1.0, hide = true)]
    loosen_specfun: f64,
    #[arg(long, hide = true)]
    skip_determinism: bool,
}

fn settings(cli: &Cli) -> Settings {
    Settings { seed: cli.seed.unwrap_or_default(), profile: cli.tolerance_profile.unwrap_or_default() }
}

/// Plans, solves and emits one job. With `--out` the files go there and the
/// report to stdout; otherwise the main CSV goes to stdout and the report to
/// stderr.
fn run_single(cli: &Cli, name: &str, params: Params) -> Result<i32> {
    let job = plan(name, &params, &settings(cli))?;
    let output = job.execute()?;
    match &cli.out {
        Some(dir) => {
            write_outputs(dir, std::slice::from_ref(&output), false)?;
            print!("{}", output.report);
        }
        None => {
            print!("{}", output.tables[0].1.render());
            eprint!("{}", output.report);
        }
    }
    Ok(output.status.exit_code())
}

fn specfun_eval(cli: &Cli, a: &SpecfunArgs) -> Result<i32> {
    let mut p = Params::default();
    p.set("kind", "specfun");
    p.set("z", &a.z);
    fill!(p, a; alpha => "alpha", m => "m", l => "l");
    let name = a.name.clone().unwrap_or_else(|| "specfun".into());
    let output = plan(&name, &p, &settings(cli))?.execute()?;
    let mut stdout = std::io::stdout().lock();
    for row in &output.tables[0].1.rows {
        let num = |c: &Cell| match c {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        };
        let (value, lower, upper) = (num(&row[1]).unwrap_or(f64::NAN), num(&row[3]), num(&row[4]));
        let line = match (lower, upper) {
            (Some(lo), Some(hi)) if lo.is_finite() && hi.is_finite() => {
                format!("{}\t{}\t{}", format_number(value), format_number(lo), format_number(hi))
            }
            _ => format_number(value),
        };
        let _ = writeln!(stdout, "{line}");
    }
    if let Some(dir) = &cli.out {
        write_outputs(dir, std::slice::from_ref(&output), false)?;
    }
    Ok(0)
}

fn decay_fit(a: &FitArgs) -> Result<i32> {
    let trace = read_trace(&a.input)?;
    if !(a.window > 0.0) {
        return Err(CliError::config("window", "window must be a positive number of decades"));
    }
    let window = FitWindow::decades(a.window);
    let mut lines = Vec::new();
    match fit_model_select(&trace) {
        Ok(sel) => {
            let wanted = match a.model {
                FitModel::Auto => None,
                FitModel::Power => Some(ModelKind::Power),
                FitModel::Exponential => Some(ModelKind::Exponential),
                FitModel::Logarithmic => Some(ModelKind::Logarithmic),
                FitModel::Plateau => Some(ModelKind::Plateau),
            };
            let chosen = match wanted {
                None => Some((sel.model, sel.residual)),
                Some(k) => sel.ranking.iter().find(|(m, _)| m.kind() == k).copied(),
            };
            match chosen {
                Some((m, res)) => lines.push(format!("model: {m:?} residual={res:.3e}")),
                None => lines.push("model: requested family did not fit".into()),
            }
        }
        Err(e) => lines.push(format!("model selection: {e}")),
    }
    let exponent = match a.exponent {
        Some(s) => s,
        None => match fit_power_tail(&trace, window) {
            Ok(f) => f.s,
            Err(DecayFitError::DegenerateTrace(why)) => {
                println!("verdict=degenerate");
                println!("  note: {why}");
                return Ok(Status::Degenerate.exit_code());
            }
            Err(e) => return Err(e.into()),
        },
    };
    let r = check_envelope_with(&trace, exponent, a.rate, !a.one_sided, window);
    let name = a.input.file_stem().map_or("trace".into(), |s| s.to_string_lossy().into_owned());
    print!("{}", render_report(&name, "decay_fit", &r, &lines));
    Ok(match r.verdict {
        Verdict::SandwichOk | Verdict::UpperOnlyOk => 0,
        Verdict::Violated => 3,
        Verdict::Degenerate => 4,
    })
}

fn reproduce(cli: &Cli, a: &ReproduceArgs) -> Result<i32> {
    let opts = ReproduceOptions { loosen_specfun: a.loosen_specfun, skip_determinism: a.skip_determinism };
    let rep = reproduce_all(&opts);
    print!("{}", render_rows(&rep.rows));
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (file, table) in &rep.tables {
            crate::csv::write_atomic(&dir.join(file), &table.render())?;
        }
        crate::csv::write_atomic(&dir.join("summary.txt"), &render_rows(&rep.rows))?;
    }
    Ok(if rep.all_passed() { 0 } else { 3 })
}

fn run_config(cli: &Cli, path: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg = crate::config::parse(&text)?;
    let summary = run_experiment(&cfg, cli.out.as_deref(), cli.jobs, cli.seed, cli.tolerance_profile)?;
    for o in &summary.outputs {
        print!("{}", o.report);
    }
    Ok(summary.status.exit_code())
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Specfun { cmd: SpecfunCmd::Eval(a) } => specfun_eval(cli, a),
        Command::Ode { cmd: OdeCmd::Solve(a) } => {
            let mut p = Params::default();
            let linear = a.lambda.is_some();
            p.set("kind", if linear { "ode" } else { "semilinear" });
            fill!(p, a; alpha => "alpha", beta => "beta", lambda => "lambda", u0 => "u0", t => "T",
                steps => "steps", grading => "grading");
            if !linear {
                fill!(p, a; delta => "delta", nu => "nu", h0 => "h0");
            } else if a.delta.is_some() || a.nu.is_some() || a.h0.is_some() {
                return Err(CliError::config("lambda", "--lambda selects the linear mode; --delta, --nu and --h0 do not apply"));
            }
            run_single(cli, a.name.as_deref().unwrap_or("ode"), p)
        }
        Command::Subdiffusion { cmd: SpectralCmd::Solve(a) } => {
            let mut p = Params::default();
            p.set("kind", "subdiffusion");
            fill!(p, a; alpha => "alpha", beta => "beta");
            a.space.fill(&mut p);
            run_single(cli, a.space.name.as_deref().unwrap_or("subdiffusion"), p)
        }
        Command::Heat { cmd: HeatCmd::Solve(a) } => {
            let mut p = Params::default();
            p.set("kind", "heat");
            fill!(p, a; coefficient => "coefficient", beta => "beta", kappa => "kappa", p => "p", q => "q",
                poly => "poly", offset => "offset", amplitude => "amplitude", frequency => "frequency");
            a.space.fill(&mut p);
            run_single(cli, a.space.name.as_deref().unwrap_or("heat"), p)
        }
        Command::Nonlinear { cmd: NonlinearCmd::Solve(a) } => {
            let mut p = Params::default();
            p.set("kind", "nonlinear");
            fill!(p, a; operator => "operator", p => "p", m => "m", q => "q", gamma => "gamma", k1 => "k1",
                k2 => "k2", kirchhoff_law => "kirchhoff_law", alpha => "alpha", beta => "beta", kappa => "kappa",
                source => "source", mu => "mu", source_p => "source_p", u0_preset => "u0_preset",
                amplitude => "amplitude", l => "L", points => "points", t => "T", steps => "steps",
                grading => "grading", sweeps => "sweeps", snapshots => "snapshots");
            run_single(cli, a.name.as_deref().unwrap_or("nonlinear"), p)
        }
        Command::Decay { cmd: DecayCmd::Fit(a) } => decay_fit(a),
        Command::Reproduce(a) => reproduce(cli, a),
        Command::Run { config } => run_config(cli, config),
    }
}

/// Parses `args` (program name first) and runs; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
