//! One-dimensional finite-difference solvers for
//!
//! ```text
//! d^a u - a(t) A(u) + sigma(u) = 0   on (0, L),   u(0) = u(L) = 0,
//! ```
//!
//! with `A` one of the nonlinear diffusion operators below. Space uses flux
//! differences at half points of a uniform grid; time uses the L1 scheme with
//! `A` and `sigma` frozen at the latest iterate, so a sweep costs one
//! tridiagonal solve.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::decayfit::{check_envelope_with, DecayReport, ExponentTag, FitWindow, PredictedExponent, Verdict};
use crate::fracode::{CaputoL1Operator, FracodeError, TimeGrid};
use crate::scalar::Real;
use crate::spectral::{CoefficientSpec, SpectralError};
use crate::trace::{l2_norm, SolutionTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("hypothesis {hypothesis} fails: {detail}")]
    HypothesisViolated { hypothesis: &'static str, detail: String },
    #[error("non-finite state at step {step} (t = {t})")]
    NonFiniteState { step: usize, t: f64 },
    #[error("fixed-point sweep {sweep} at step {step} (t = {t}) grew the update from {previous:.3e} to {update:.3e}")]
    StepDivergence { step: usize, t: f64, sweep: usize, update: f64, previous: f64 },
    #[error("solution went negative at step {step} (t = {t}): min u = {min:.3e}")]
    PositivityLoss { step: usize, t: f64, min: f64 },
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error(transparent)]
    Fracode(#[from] FracodeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub type Result<T> = std::result::Result<T, NonlinearError>;

/// Interior points `x_i = i h`, `i = 1..=M`, of `(0, L)` with `h = L/(M+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid1D<T> {
    length: T,
    points: usize,
}

impl<T: Real> SpatialGrid1D<T> {
    pub fn new(length: T, points: usize) -> Result<Self> {
        if points < 3 {
            return Err(NonlinearError::InvalidParams(format!("need at least 3 interior points, got {points}")));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(NonlinearError::InvalidParams(format!("length {length} must be positive")));
        }
        Ok(Self { length, points })
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> T {
        self.length / T::from_usize_lossy(self.points + 1)
    }

    pub fn nodes(&self) -> Vec<T> {
        let h = self.spacing();
        (1..=self.points).map(|i| T::from_usize_lossy(i) * h).collect()
    }

    pub fn sample(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.nodes().into_iter().map(f).collect()
    }

    /// `(h sum u_i^2)^{1/2}`.
    pub fn l2_norm(&self, u: &[T]) -> T {
        l2_norm(u) * self.spacing().sqrt()
    }

    /// `(pi/L)^2`, first Dirichlet eigenvalue of `-d^2/dx^2` on `(0, L)`.
    pub fn first_eigenvalue(&self) -> T {
        let k = T::PI() / self.length;
        k * k
    }
}

/// `u -> offset + coef |u|^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw<T> {
    pub offset: T,
    pub coef: T,
    pub exponent: T,
}

impl<T: Real> PowerLaw<T> {
    pub fn pure(coef: T, exponent: T) -> Self {
        Self { offset: T::zero(), coef, exponent }
    }

    #[inline]
    pub fn eval(&self, u: T) -> T {
        self.offset + self.coef * u.abs().powf(self.exponent)
    }
}

/// Kirchhoff diffusion factor `M(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KirchhoffLaw<T> {
    Constant { k: T },
    /// `k1 + k2 s`
    Affine { k1: T, k2: T },
    /// `b s^gamma`
    Power { b: T, gamma: T },
    /// `exp(k s)`
    Exponential { k: T },
    /// `(1 + s)^gamma`
    OnePlusPower { gamma: T },
}

impl<T: Real> KirchhoffLaw<T> {
    pub fn eval(&self, s: T) -> T {
        match *self {
            KirchhoffLaw::Constant { k } => k,
            KirchhoffLaw::Affine { k1, k2 } => k1 + k2 * s,
            KirchhoffLaw::Power { b, gamma } => b * s.powf(gamma),
            KirchhoffLaw::Exponential { k } => (k * s).exp(),
            KirchhoffLaw::OnePlusPower { gamma } => (T::one() + s).powf(gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorSpec<T> {
    Laplace,
    /// `(|u_x|^{p-2} u_x)_x`
    PLaplace { p: T },
    /// `(g(u) u_x)_x` with `g(u) >= c0 u^m`.
    PorousMedium { g: PowerLaw<T>, m: T, c0: T },
    /// `f(u) u_xx` with `f(u) u >= c1 u^{q+1}`.
    Degenerate { f: PowerLaw<T>, q: T, c1: T },
    /// `(u_x / sqrt(1 + u_x^2))_x`
    MeanCurvature,
    /// `M(||u_x||_{L^q}) (|u_x|^{p-2} u_x)_x` with `M(s) >= b s^gamma`.
    Kirchhoff { law: KirchhoffLaw<T>, gamma: T, b: T, p: T, q: T },
}

impl<T: Real> OperatorSpec<T> {
    /// `g(u) = |u|^m`.
    pub fn porous_medium(m: T) -> Self {
        OperatorSpec::PorousMedium { g: PowerLaw::pure(T::one(), m), m, c0: T::one() }
    }

    /// `f(u) = |u|^q`.
    pub fn degenerate(q: T) -> Self {
        OperatorSpec::Degenerate { f: PowerLaw::pure(T::one(), q), q, c1: T::one() }
    }

    /// `M(s) = k1 + k2 s` on the `p`-Laplacian, declared with `gamma = 1`, `b = k2`.
    pub fn kirchhoff_affine(k1: T, k2: T, p: T, q: T) -> Self {
        OperatorSpec::Kirchhoff { law: KirchhoffLaw::Affine { k1, k2 }, gamma: T::one(), b: k2, p, q }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OperatorSpec::Laplace => "laplace",
            OperatorSpec::PLaplace { .. } => "p_laplace",
            OperatorSpec::PorousMedium { .. } => "porous_medium",
            OperatorSpec::Degenerate { .. } => "degenerate",
            OperatorSpec::MeanCurvature => "mean_curvature",
            OperatorSpec::Kirchhoff { .. } => "kirchhoff",
        }
    }

    /// Parameter ranges plus the structural hypotheses, the latter checked by
    /// sampling on `s, u in [1e-6, 1e6]`.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NonlinearError::InvalidParams(m));
        match *self {
            OperatorSpec::Laplace | OperatorSpec::MeanCurvature => Ok(()),
            OperatorSpec::PLaplace { p } => {
                if !(p > T::one()) {
                    return bad(format!("p = {p} must exceed 1"));
                }
                Ok(())
            }
            OperatorSpec::PorousMedium { g, m, c0 } => {
                if !(m >= T::zero()) || !(c0 > T::zero()) || !(g.offset >= T::zero()) {
                    return bad(format!("porous medium needs m >= 0, c0 > 0, offset >= 0 (m = {m}, c0 = {c0})"));
                }
                dominated("H1", |u| g.eval(u), |u| c0 * u.powf(m))
            }
            OperatorSpec::Degenerate { f, q, c1 } => {
                if !(q >= T::zero()) || !(c1 > T::zero()) || !(f.offset >= T::zero()) {
                    return bad(format!("degenerate operator needs q >= 0, c1 > 0, offset >= 0 (q = {q}, c1 = {c1})"));
                }
                dominated("H2", |u| f.eval(u) * u, |u| c1 * u.powf(q + T::one()))
            }
            OperatorSpec::Kirchhoff { law, gamma, b, p, q } => {
                if !(p > T::one()) || !(q > T::one()) {
                    return bad(format!("Kirchhoff operator needs p, q > 1 (p = {p}, q = {q})"));
                }
                if !(gamma >= T::zero()) || !(b > T::zero()) {
                    return bad(format!("Kirchhoff operator needs gamma >= 0, b > 0 (gamma = {gamma}, b = {b})"));
                }
                dominated("H3", |s| law.eval(s), |s| b * s.powf(gamma))
            }
        }
    }
}

fn dominated<T: Real>(hypothesis: &'static str, lhs: impl Fn(T) -> T, rhs: impl Fn(T) -> T) -> Result<()> {
    for k in -24..=24 {
        let s = T::lit(10f64.powf(k as f64 / 4.0));
        let (a, b) = (lhs(s), rhs(s));
        if !(a >= b * (T::one() - T::lit(1e-12))) {
            return Err(NonlinearError::HypothesisViolated { hypothesis, detail: format!("{a} < {b} at {s}") });
        }
    }
    Ok(())
}

/// Zeroth-order term `sigma(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceSpec<T> {
    None,
    /// `u (1 - u)`
    FisherKpp,
    /// `mu |u|^p u`
    PowerAbsorption { mu: T, p: T },
}

impl<T: Real> SourceSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceSpec::PowerAbsorption { mu, p } if !(p > T::one()) || !mu.is_finite() => {
                Err(NonlinearError::InvalidParams(format!("absorption needs finite mu and p > 1 (p = {p})")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, u: T) -> T {
        u * self.factor(u)
    }

    /// `sigma(u) / u`, the frozen coefficient used in the implicit step.
    #[inline]
    fn factor(&self, u: T) -> T {
        match *self {
            SourceSpec::None => T::zero(),
            SourceSpec::FisherKpp => T::one() - u,
            SourceSpec::PowerAbsorption { mu, p } => mu * u.abs().powf(p),
        }
    }
}

/// Gradients at the `M+1` half points, with the Dirichlet zeros as ghosts.
fn gradients<T: Real>(u: &[T], h: T) -> Vec<T> {
    let m = u.len();
    (0..=m)
        .map(|k| {
            let right = if k < m { u[k] } else { T::zero() };
            let left = if k > 0 { u[k - 1] } else { T::zero() };
            (right - left) / h
        })
        .collect()
}

/// `(h sum |D|^q)^{1/q}` over the half points.
fn gradient_norm<T: Real>(du: &[T], h: T, q: T) -> T {
    let s: T = du.iter().map(|d| d.abs().powf(q)).sum();
    (h * s).powf(q.recip())
}

/// `|D|^{p-2}`, floored away from zero when `p < 2` so the frozen
/// coefficient stays finite.
#[inline]
fn p_weight<T: Real>(d: T, p: T, floor: T) -> T {
    let two = T::lit(2.0);
    if p == two {
        T::one()
    } else if p < two {
        d.abs().max(floor).powf(p - two)
    } else {
        d.abs().powf(p - two)
    }
}

/// Flux coefficients `kappa` at half points and row factors `r` such that
/// `A(u)_i = r_i (kappa_{i+1} D_{i+1} - kappa_i D_i) / h`.
struct Frozen<T> {
    kappa: Vec<T>,
    row: Option<Vec<T>>,
}

fn freeze<T: Real>(spec: &OperatorSpec<T>, u: &[T], h: T) -> Frozen<T> {
    let du = gradients(u, h);
    let floor = {
        let scale = du.iter().fold(T::zero(), |a, d| a.max(d.abs()));
        (scale * T::lit(1e-8)).max(T::min_positive_value())
    };
    let half = T::lit(0.5);
    let at = |k: usize| -> T {
        let right = if k < u.len() { u[k] } else { T::zero() };
        let left = if k > 0 { u[k - 1] } else { T::zero() };
        half * (left + right)
    };
    match *spec {
        OperatorSpec::Laplace => Frozen { kappa: vec![T::one(); du.len()], row: None },
        OperatorSpec::PLaplace { p } => Frozen { kappa: du.iter().map(|&d| p_weight(d, p, floor)).collect(), row: None },
        OperatorSpec::PorousMedium { g, .. } => Frozen { kappa: (0..du.len()).map(|k| g.eval(at(k))).collect(), row: None },
        OperatorSpec::Degenerate { f, .. } => {
            Frozen { kappa: vec![T::one(); du.len()], row: Some(u.iter().map(|&v| f.eval(v)).collect()) }
        }
        OperatorSpec::MeanCurvature => {
            Frozen { kappa: du.iter().map(|&d| (T::one() + d * d).sqrt().recip()).collect(), row: None }
        }
        OperatorSpec::Kirchhoff { law, p, q, .. } => {
            let factor = law.eval(gradient_norm(&du, h, q));
            Frozen { kappa: du.iter().map(|&d| factor * p_weight(d, p, floor)).collect(), row: None }
        }
    }
}

/// `A(u)` at the interior points.
pub fn discretize_operator<T: Real>(spec: &OperatorSpec<T>, grid: &SpatialGrid1D<T>, u: &[T]) -> Result<Vec<T>> {
    if u.len() != grid.points() {
        return Err(NonlinearError::InvalidParams(format!(
            "state has {} values for {} grid points",
            u.len(),
            grid.points()
        )));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(NonlinearError::NonFiniteState { step: 0, t: 0.0 });
    }
    let h = grid.spacing();
    let du = gradients(u, h);
    // Exact fluxes; the frozen form would divide by zero for p < 2.
    let flux: Vec<T> = match *spec {
        OperatorSpec::PLaplace { p } => du.iter().map(|&d| d.signum() * d.abs().powf(p - T::one())).collect(),
        OperatorSpec::Kirchhoff { law, p, q, .. } => {
            let factor = law.eval(gradient_norm(&du, h, q));
            du.iter().map(|&d| factor * d.signum() * d.abs().powf(p - T::one())).collect()
        }
        _ => {
            let fr = freeze(spec, u, h);
            du.iter().zip(&fr.kappa).map(|(&d, &k)| k * d).collect()
        }
    };
    let flux: Vec<T> = flux.into_iter().map(|f| if f.is_nan() { T::zero() } else { f }).collect();
    let row = match spec {
        OperatorSpec::Degenerate { f, .. } => Some(u.iter().map(|&v| f.eval(v)).collect::<Vec<_>>()),
        _ => None,
    };
    let out: Vec<T> = (0..u.len())
        .map(|i| {
            let v = (flux[i + 1] - flux[i]) / h;
            row.as_ref().map_or(v, |r| r[i] * v)
        })
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(NonlinearError::NonFiniteState { step: 0, t: 0.0 });
    }
    Ok(out)
}

/// Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored.
fn solve_tridiagonal<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearProblem<T> {
    pub operator: OperatorSpec<T>,
    pub source: SourceSpec<T>,
    pub alpha: T,
    pub coefficient: CoefficientSpec<T>,
    pub space: SpatialGrid1D<T>,
}

impl<T: Real> NonlinearProblem<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(NonlinearError::InvalidParams(format!("alpha = {} must lie in (0, 1]", self.alpha)));
        }
        self.operator.validate()?;
        self.source.validate()?;
        self.coefficient.validate()?;
        if let CoefficientSpec::Power { beta, .. } = self.coefficient {
            if !(beta > -self.alpha) {
                return Err(NonlinearError::HypothesisViolated {
                    hypothesis: "H",
                    detail: format!("beta = {beta} must exceed -alpha = {}", -self.alpha),
                });
            }
        }
        Ok(())
    }

    /// Runs whose solution must stay nonnegative: porous-medium operators and
    /// absorption sources started from `u0 >= 0`.
    fn needs_nonnegative(&self, u0: &[T]) -> bool {
        let porous = matches!(self.operator, OperatorSpec::PorousMedium { .. })
            || matches!(self.source, SourceSpec::PowerAbsorption { .. });
        porous && u0.iter().all(|&v| v >= T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearOptions<T> {
    /// Fixed-point sweeps per step, 1 to 10.
    pub sweeps: usize,
    pub tolerance: T,
    pub store_fields: bool,
}

impl<T: Real> Default for NonlinearOptions<T> {
    fn default() -> Self {
        Self { sweeps: 1, tolerance: T::lit(1e-10), store_fields: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearRun<T> {
    pub trace: SolutionTrace<T>,
    /// `sup |u_x|` over all nodes of the run.
    pub max_gradient: T,
}

pub fn solve_nonlinear<T: Real>(
    problem: &NonlinearProblem<T>,
    u0: &[T],
    time: &TimeGrid<T>,
    opts: &NonlinearOptions<T>,
) -> Result<NonlinearRun<T>> {
    problem.validate()?;
    let space = problem.space;
    if u0.len() != space.points() {
        return Err(NonlinearError::InvalidParams(format!(
            "u0 has {} values for {} grid points",
            u0.len(),
            space.points()
        )));
    }
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(NonlinearError::NonFiniteState { step: 0, t: 0.0 });
    }
    if !(1..=10).contains(&opts.sweeps) {
        return Err(NonlinearError::InvalidParams(format!("sweeps = {} must lie in 1..=10", opts.sweeps)));
    }
    let op = CaputoL1Operator::new(time.clone(), problem.alpha)?;
    let nodes = time.nodes();
    let n_steps = time.steps();
    let m = space.points();
    let h = space.spacing();
    let h2 = h * h;
    let nonneg = problem.needs_nonnegative(u0);
    let scale = u0.iter().fold(T::one(), |a, v| a.max(v.abs()));
    let floor = -T::lit(1e-10) * scale;

    let mut increments: Vec<Vec<T>> = Vec::with_capacity(n_steps);
    let mut fields = opts.store_fields.then(|| vec![u0.to_vec()]);
    let mut energy = vec![space.l2_norm(u0)];
    let mut max_gradient = gradients(u0, h).iter().fold(T::zero(), |a, d| a.max(d.abs()));
    let mut prev = u0.to_vec();
    let mut hist = vec![T::zero(); m];
    let (mut lower, mut diag, mut upper, mut rhs) = (vec![T::zero(); m], vec![T::zero(); m], vec![T::zero(); m], vec![T::zero(); m]);

    for n in 1..=n_steps {
        let t = nodes[n];
        let d = op.diag(n);
        let w = op.row(n);
        hist.iter_mut().for_each(|v| *v = T::zero());
        for (j, inc) in increments.iter().enumerate().take(n - 1) {
            let wj = w[j];
            for (hv, &iv) in hist.iter_mut().zip(inc) {
                *hv = *hv + wj * iv;
            }
        }
        let a = problem.coefficient.eval(t);
        for i in 0..m {
            rhs[i] = d * prev[i] - hist[i];
        }
        let mut iterate = prev.clone();
        let mut last_update = T::infinity();
        for sweep in 0..opts.sweeps {
            let fr = freeze(&problem.operator, &iterate, h);
            for i in 0..m {
                let r = fr.row.as_ref().map_or(T::one(), |r| r[i]) * a / h2;
                let (kl, kr) = (fr.kappa[i], fr.kappa[i + 1]);
                lower[i] = -r * kl;
                upper[i] = -r * kr;
                diag[i] = d + problem.source.factor(iterate[i]) + r * (kl + kr);
            }
            let next = solve_tridiagonal(&lower, &diag, &upper, &rhs);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(NonlinearError::NonFiniteState { step: n, t: t.to_f64_lossy() });
            }
            let update = next.iter().zip(&iterate).fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
            iterate = next;
            let tol = opts.tolerance * iterate.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
            if update <= tol {
                break;
            }
            if sweep > 0 && update > last_update {
                return Err(NonlinearError::StepDivergence {
                    step: n,
                    t: t.to_f64_lossy(),
                    sweep,
                    update: update.to_f64_lossy(),
                    previous: last_update.to_f64_lossy(),
                });
            }
            last_update = update;
        }
        if nonneg {
            let min = iterate.iter().fold(T::infinity(), |a, &v| a.min(v));
            if min < floor {
                return Err(NonlinearError::PositivityLoss { step: n, t: t.to_f64_lossy(), min: min.to_f64_lossy() });
            }
        }
        max_gradient = gradients(&iterate, h).iter().fold(max_gradient, |a, d| a.max(d.abs()));
        energy.push(space.l2_norm(&iterate));
        increments.push(iterate.iter().zip(&prev).map(|(a, b)| *a - *b).collect());
        if let Some(f) = fields.as_mut() {
            f.push(iterate.clone());
        }
        prev = iterate;
    }
    let trace = SolutionTrace { times: nodes.to_vec(), energy, modal: None, fields, spacing: Some(h) };
    Ok(NonlinearRun { trace, max_gradient })
}

/// Both sides of `E d^a E <= (u, d^a u)` with the discrete L1 derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyInequality<T> {
    pub times: Vec<T>,
    pub lhs: Vec<T>,
    pub rhs: Vec<T>,
    /// `rhs - lhs`; zero at `t = 0`.
    pub margin: Vec<T>,
}

impl<T: Real> EnergyInequality<T> {
    pub fn min_margin(&self) -> T {
        self.margin.iter().fold(T::infinity(), |a, &v| a.min(v))
    }
}

pub fn check_energy_inequality<T: Real>(trace: &SolutionTrace<T>, alpha: T) -> Result<EnergyInequality<T>> {
    let fields = trace
        .fields
        .as_ref()
        .ok_or_else(|| NonlinearError::InvalidParams("trace carries no field snapshots".into()))?;
    let h = trace.spacing.ok_or_else(|| NonlinearError::InvalidParams("trace carries no grid spacing".into()))?;
    let op = CaputoL1Operator::new(TimeGrid::from_nodes(trace.times.clone())?, alpha)?;
    let energy: Vec<T> = fields.iter().map(|u| l2_norm(u) * h.sqrt()).collect();
    let de = op.apply(&energy)?;
    let m = fields.first().map_or(0, Vec::len);
    let increments: Vec<Vec<T>> =
        fields.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| *a - *b).collect()).collect();
    let mut lhs = vec![T::zero()];
    let mut rhs = vec![T::zero()];
    let mut du = vec![T::zero(); m];
    for n in 1..fields.len() {
        let w = op.row(n);
        du.iter_mut().for_each(|v| *v = T::zero());
        for (j, inc) in increments.iter().enumerate().take(n) {
            for (dv, &iv) in du.iter_mut().zip(inc) {
                *dv = *dv + w[j] * iv;
            }
        }
        lhs.push(energy[n] * de[n - 1]);
        rhs.push(h * fields[n].iter().zip(&du).map(|(a, b)| *a * *b).sum::<T>());
    }
    let margin = rhs.iter().zip(&lhs).map(|(r, l)| *r - *l).collect();
    Ok(EnergyInequality { times: trace.times.clone(), lhs, rhs, margin })
}

pub fn predict_exponent<T: Real>(spec: &OperatorSpec<T>, alpha: T, beta: T) -> Result<PredictedExponent> {
    predict_exponent_in(spec, alpha, beta, 1)
}

/// As [`predict_exponent`] in spatial dimension `n`, where the `p`-Laplacian
/// and Kirchhoff rates need `p, q >= 2n/(n+2)`.
pub fn predict_exponent_in<T: Real>(spec: &OperatorSpec<T>, alpha: T, beta: T, n: usize) -> Result<PredictedExponent> {
    spec.validate()?;
    let (a, b) = (alpha.to_f64_lossy(), beta.to_f64_lossy());
    if !(a > 0.0 && a <= 1.0) {
        return Err(NonlinearError::InvalidParams(format!("alpha = {a} must lie in (0, 1]")));
    }
    if !(b > -a) {
        return Err(NonlinearError::HypothesisViolated { hypothesis: "H", detail: format!("beta = {b} must exceed -alpha") });
    }
    let threshold = 2.0 * n as f64 / (n as f64 + 2.0);
    let check = |name: &str, v: f64| {
        if v < threshold {
            Err(NonlinearError::UnsupportedRegime(format!("{name} = {v} below 2n/(n+2) = {threshold} for n = {n}")))
        } else {
            Ok(())
        }
    };
    let s = a + b;
    let (value, tag) = match *spec {
        OperatorSpec::Laplace | OperatorSpec::MeanCurvature => (s, ExponentTag::AlphaPlusBeta),
        OperatorSpec::PLaplace { p } => {
            let p = p.to_f64_lossy();
            check("p", p)?;
            (s / (p - 1.0), ExponentTag::PLaplace)
        }
        OperatorSpec::PorousMedium { m, .. } => (s / (m.to_f64_lossy() + 1.0), ExponentTag::PorousMedium),
        OperatorSpec::Degenerate { q, .. } => (s / (q.to_f64_lossy() + 1.0), ExponentTag::Degenerate),
        OperatorSpec::Kirchhoff { gamma, p, q, .. } => {
            let (p, q) = (p.to_f64_lossy(), q.to_f64_lossy());
            check("p", p)?;
            check("q", q)?;
            (s / (gamma.to_f64_lossy() + p - 1.0), ExponentTag::Kirchhoff)
        }
    };
    Ok(PredictedExponent { value, tag })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    FisherKpp,
    SemilinearPme,
    ToyModel,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::FisherKpp, Scenario::SemilinearPme, Scenario::ToyModel];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::FisherKpp => "fisher_kpp",
            Scenario::SemilinearPme => "semilinear_pme",
            Scenario::ToyModel => "toy_model",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = NonlinearError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| NonlinearError::InvalidParams(format!("unknown scenario '{s}'")))
    }
}

/// Scenario presets; `u0 = amplitude sin(pi x / L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub m: f64,
    pub p: f64,
    pub length: f64,
    pub points: usize,
    pub horizon: f64,
    pub steps: usize,
    /// `None` picks [`TimeGrid::default_grading`].
    pub grading: Option<f64>,
    pub amplitude: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
            mu: 1.0,
            m: 1.0,
            p: 2.0,
            length: PI,
            points: 255,
            horizon: 100.0,
            steps: 2048,
            grading: None,
            amplitude: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub scenario: Scenario,
    pub trace: SolutionTrace<f64>,
    pub report: DecayReport,
    pub max_gradient: f64,
}

pub fn run_scenario(scenario: Scenario, params: &ScenarioParams) -> Result<ScenarioRun> {
    let ScenarioParams { alpha, beta, mu, m, p, .. } = *params;
    let space = SpatialGrid1D::new(params.length, params.points)?;
    let (operator, source) = match scenario {
        Scenario::FisherKpp => {
            if !(params.amplitude > 0.0 && params.amplitude <= 1.0) {
                return Err(NonlinearError::InvalidParams(format!(
                    "Fisher-KPP needs 0 < u0 <= 1, amplitude = {}",
                    params.amplitude
                )));
            }
            (OperatorSpec::Laplace, SourceSpec::FisherKpp)
        }
        Scenario::SemilinearPme => {
            if !(mu >= 0.0) || !(m >= 0.0) || !(p > 1.0) {
                return Err(NonlinearError::InvalidParams(format!("pme needs mu >= 0, m >= 0, p > 1 (mu = {mu}, m = {m}, p = {p})")));
            }
            if !(params.amplitude > 0.0) {
                return Err(NonlinearError::InvalidParams("pme needs a positive initial amplitude".into()));
            }
            // (|w|^m w)_xx = ((m+1) |w|^m w_x)_x
            let operator = OperatorSpec::PorousMedium { g: PowerLaw::pure(m + 1.0, m), m, c0: m + 1.0 };
            let source = if mu == 0.0 { SourceSpec::None } else { SourceSpec::PowerAbsorption { mu, p } };
            (operator, source)
        }
        Scenario::ToyModel => (OperatorSpec::Laplace, SourceSpec::None),
    };
    let problem = NonlinearProblem {
        operator,
        source,
        alpha,
        coefficient: CoefficientSpec::Power { kappa: 1.0, beta },
        space,
    };
    let grading = params.grading.unwrap_or_else(|| TimeGrid::default_grading(alpha));
    let time = TimeGrid::new(params.horizon, params.steps, grading)?;
    let k = PI / params.length;
    let u0 = space.sample(|x| params.amplitude * (k * x).sin());
    let run = solve_nonlinear(&problem, &u0, &time, &NonlinearOptions::default())?;
    let lambda1 = space.first_eigenvalue();
    let energy = run.trace.energy_trace();
    let window = FitWindow::default();
    let report = match scenario {
        Scenario::FisherKpp => {
            let predicted = predict_exponent(&OperatorSpec::<f64>::Laplace, alpha, beta)?;
            let mut r = check_envelope_with(&energy, predicted.value, lambda1, false, window).with_prediction(predicted);
            let fields = run.trace.fields.as_ref().expect("fields are stored");
            if let Some((j, v)) = fields
                .iter()
                .enumerate()
                .flat_map(|(j, u)| u.iter().map(move |&v| (j, v)))
                .find(|&(_, v)| !(v > 0.0 && v <= 1.0))
            {
                r.upper_ok = false;
                r.verdict = Verdict::Violated;
                r.note = Some(format!("u = {v:.3e} leaves (0, 1] at t = {}", run.trace.times[j]));
            }
            r
        }
        Scenario::SemilinearPme => {
            let predicted = predict_exponent(&operator, alpha, beta)?;
            check_envelope_with(&energy, predicted.value, 1.0, false, window).with_prediction(predicted)
        }
        Scenario::ToyModel => {
            let predicted = predict_exponent(&OperatorSpec::<f64>::Laplace, alpha, beta)?;
            check_envelope_with(&energy, predicted.value, lambda1, true, window).with_prediction(predicted)
        }
    };
    Ok(ScenarioRun { scenario, max_gradient: run.max_gradient, trace: run.trace, report })
}
