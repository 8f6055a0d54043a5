//! Eigenfunction-expansion solutions of linear sub-diffusion and heat
//! equations on intervals and rectangles.

use thiserror::Error;

use crate::decayfit::{check_envelope_with, DecayReport, FitWindow, Verdict};
use crate::fracode::{solve_linear_mode_with, CaputoL1Operator, FracodeError, TimeGrid};
use crate::scalar::Real;
use crate::special::gauss_legendre;
use crate::specfun::{DecayFunction, SeriesAccuracy, SpecfunError};
use crate::trace::{l2_norm, ScalarTrace, SolutionTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("quadrature under-resolved: Parseval defect {defect:.3e} exceeds 1% of ||u0||^2 = {norm_sq:.3e}")]
    QuadratureUnderResolved { defect: f64, norm_sq: f64 },
    #[error("primitive of the coefficient is not positive at t = {t}")]
    NonpositivePrimitive { t: f64 },
    #[error("{got} modal coefficients for a {expected}-mode system")]
    ModeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Fracode(#[from] FracodeError),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry<T> {
    Interval { length: T },
    Rectangle { lx: T, ly: T },
}

impl<T: Real> Geometry<T> {
    pub fn dimension(&self) -> usize {
        match self {
            Geometry::Interval { .. } => 1,
            Geometry::Rectangle { .. } => 2,
        }
    }

    fn lengths(&self) -> Vec<T> {
        match *self {
            Geometry::Interval { length } => vec![length],
            Geometry::Rectangle { lx, ly } => vec![lx, ly],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// One eigenpair, identified by its index along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode<T> {
    pub lambda: T,
    pub index: Vec<usize>,
}

/// Eigenpairs of the Laplacian with their inner-product quadrature.
#[derive(Debug, Clone)]
pub struct EigenSystem<T> {
    geometry: Geometry<T>,
    boundary: BoundaryKind,
    modes: Vec<Mode<T>>,
    /// Quadrature points (one coordinate vector per point) and weights.
    points: Vec<Vec<T>>,
    weights: Vec<T>,
}

pub const DEFAULT_MODES: usize = 64;
const GAUSS_POINTS: usize = 8;

/// Composite Gauss-Legendre rule on `[0, length]` with `panels` panels.
fn composite_rule<T: Real>(length: T, panels: usize) -> (Vec<T>, Vec<T>) {
    let (x, w) = gauss_legendre::<T>(GAUSS_POINTS);
    let h = length / T::from_usize_lossy(panels);
    let half = T::lit(0.5) * h;
    let mut nodes = Vec::with_capacity(panels * GAUSS_POINTS);
    let mut weights = Vec::with_capacity(panels * GAUSS_POINTS);
    for p in 0..panels {
        let mid = h * T::from_usize_lossy(p) + half;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * *xi);
            weights.push(half * *wi);
        }
    }
    (nodes, weights)
}

impl<T: Real> EigenSystem<T> {
    /// The `modes` lowest eigenpairs (ties broken by index order).
    pub fn new(geometry: Geometry<T>, boundary: BoundaryKind, modes: usize) -> Result<Self> {
        let lengths = geometry.lengths();
        if lengths.iter().any(|l| !(*l > T::zero()) || !l.is_finite()) {
            return Err(SpectralError::InvalidGeometry("side lengths must be positive".into()));
        }
        if modes == 0 {
            return Err(SpectralError::InvalidParams("at least one mode is required".into()));
        }
        let first = match boundary {
            BoundaryKind::Dirichlet => 1,
            BoundaryKind::Neumann => 0,
        };
        let axis_lambda = |k: usize, l: T| (T::from_usize_lossy(k) * T::PI() / l).powi(2);
        let mut all: Vec<Mode<T>> = match geometry {
            Geometry::Interval { length } => (first..first + modes)
                .map(|k| Mode { lambda: axis_lambda(k, length), index: vec![k] })
                .collect(),
            Geometry::Rectangle { lx, ly } => {
                // Every mode among the lowest `modes` has both indices below first + modes.
                let mut v = Vec::new();
                for i in first..first + modes {
                    for j in first..first + modes {
                        v.push(Mode { lambda: axis_lambda(i, lx) + axis_lambda(j, ly), index: vec![i, j] });
                    }
                }
                v
            }
        };
        all.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap().then(a.index.cmp(&b.index)));
        all.truncate(modes);

        let max_index: Vec<usize> =
            (0..lengths.len()).map(|d| all.iter().map(|m| m.index[d]).max().unwrap_or(0)).collect();
        let rules: Vec<(Vec<T>, Vec<T>)> = lengths
            .iter()
            .zip(&max_index)
            .map(|(&l, &k)| composite_rule(l, 4 * k.max(1) + 1))
            .collect();
        let (points, weights) = match rules.as_slice() {
            [(x, w)] => (x.iter().map(|&xi| vec![xi]).collect(), w.clone()),
            [(x, wx), (y, wy)] => {
                let mut p = Vec::with_capacity(x.len() * y.len());
                let mut w = Vec::with_capacity(x.len() * y.len());
                for (xi, wxi) in x.iter().zip(wx) {
                    for (yj, wyj) in y.iter().zip(wy) {
                        p.push(vec![*xi, *yj]);
                        w.push(*wxi * *wyj);
                    }
                }
                (p, w)
            }
            _ => unreachable!("geometries are one- or two-dimensional"),
        };
        Ok(Self { geometry, boundary, modes: all, points, weights })
    }

    pub fn geometry(&self) -> Geometry<T> {
        self.geometry
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    /// Smallest positive eigenvalue: `lambda_1` (Dirichlet) or `lambda_2^N` (Neumann).
    pub fn first_positive_eigenvalue(&self) -> T {
        self.modes.iter().map(|m| m.lambda).find(|&l| l > T::zero()).unwrap_or(T::zero())
    }

    fn axis_function(&self, k: usize, length: T, x: T) -> T {
        let arg = T::from_usize_lossy(k) * T::PI() * x / length;
        match self.boundary {
            BoundaryKind::Dirichlet => (T::lit(2.0) / length).sqrt() * arg.sin(),
            BoundaryKind::Neumann if k == 0 => length.sqrt().recip(),
            BoundaryKind::Neumann => (T::lit(2.0) / length).sqrt() * arg.cos(),
        }
    }

    /// `e_k(x)` for the `k`-th mode (0-based in ascending eigenvalue order).
    pub fn eigenfunction(&self, k: usize, x: &[T]) -> T {
        let lengths = self.geometry.lengths();
        self.modes[k]
            .index
            .iter()
            .zip(&lengths)
            .zip(x)
            .map(|((&i, &l), &xi)| self.axis_function(i, l, xi))
            .fold(T::one(), |a, b| a * b)
    }

    pub fn quadrature(&self) -> (&[Vec<T>], &[T]) {
        (&self.points, &self.weights)
    }

    /// `sum_k c_k e_k(x)`.
    pub fn reconstruct(&self, coeffs: &[T], x: &[T]) -> T {
        coeffs.iter().enumerate().map(|(k, &c)| c * self.eigenfunction(k, x)).sum()
    }

    /// Quadrature `L^2` norm of the reconstructed field.
    pub fn field_norm(&self, coeffs: &[T]) -> T {
        let s: T = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| {
                let v = self.reconstruct(coeffs, x);
                w * v * v
            })
            .sum();
        s.sqrt()
    }

    fn check_coeffs(&self, coeffs: &[T]) -> Result<()> {
        if coeffs.len() != self.modes.len() {
            return Err(SpectralError::ModeMismatch { expected: self.modes.len(), got: coeffs.len() });
        }
        Ok(())
    }
}

/// Modal coefficients of the initial datum.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T> {
    pub coeffs: Vec<T>,
    /// `||u0||^2` by quadrature.
    pub norm_sq: T,
    /// `||u0||^2 - sum_k u_{0k}^2`.
    pub parseval_defect: T,
}

pub fn project_initial_data<T: Real>(sys: &EigenSystem<T>, u0: impl Fn(&[T]) -> T) -> Result<Projection<T>> {
    let values: Vec<T> = sys.points.iter().map(|x| u0(x)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::InvalidParams("initial datum is not finite on the quadrature nodes".into()));
    }
    let norm_sq: T = values.iter().zip(&sys.weights).map(|(&v, &w)| w * v * v).sum();
    let coeffs: Vec<T> = (0..sys.len())
        .map(|k| {
            sys.points
                .iter()
                .zip(&sys.weights)
                .zip(&values)
                .map(|((x, &w), &v)| w * v * sys.eigenfunction(k, x))
                .sum()
        })
        .collect();
    let captured: T = coeffs.iter().map(|&c| c * c).sum();
    let parseval_defect = norm_sq - captured;
    if parseval_defect.abs() > T::lit(0.01) * norm_sq {
        return Err(SpectralError::QuadratureUnderResolved {
            defect: parseval_defect.to_f64_lossy(),
            norm_sq: norm_sq.to_f64_lossy(),
        });
    }
    Ok(Projection { coeffs, norm_sq, parseval_defect })
}

pub const SAMPLES_PER_DECADE: usize = 40;
pub const FIRST_SAMPLE: f64 = 1e-2;

/// `t = 0` followed by `per_decade` log-spaced samples per decade from `t_min` to `t_max`.
pub fn log_sample_times<T: Real>(t_min: T, t_max: T, per_decade: usize) -> Vec<T> {
    let mut times = vec![T::zero()];
    if !(t_max > t_min) {
        times.push(t_max);
        return times;
    }
    let decades = (t_max / t_min).log10();
    let n = (decades * T::from_usize_lossy(per_decade)).ceil().to_usize().unwrap_or(1).max(1);
    let step = decades / T::from_usize_lossy(n);
    for i in 0..=n {
        times.push(t_min * T::lit(10.0).powf(step * T::from_usize_lossy(i)));
    }
    *times.last_mut().unwrap() = t_max;
    times
}

/// Default sampling: `t = 0` plus 40 points per decade from `1e-2` to `horizon`.
pub fn default_sample_times<T: Real>(horizon: T) -> Vec<T> {
    log_sample_times(T::lit(FIRST_SAMPLE), horizon, SAMPLES_PER_DECADE)
}

fn check_fractional(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(SpectralError::InvalidParams(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if !(beta > -alpha) {
        return Err(SpectralError::InvalidParams(format!("beta = {beta} violates beta > -alpha (hypothesis (H))")));
    }
    Ok(())
}

fn trace_from_modal<T: Real>(times: Vec<T>, modal: Vec<Vec<T>>) -> SolutionTrace<T> {
    let energy = modal.iter().map(|c| l2_norm(c)).collect();
    SolutionTrace { times, energy, modal: Some(modal), fields: None, spacing: None }
}

/// `u_k(t) = u_{0k} E_{alpha, 1+beta/alpha, beta/alpha}(-lambda_k t^{alpha+beta})`.
pub fn solve_subdiffusion<T: Real>(
    sys: &EigenSystem<T>,
    alpha: T,
    beta: T,
    u0k: &[T],
    times: &[T],
) -> Result<SolutionTrace<T>> {
    check_fractional(alpha.to_f64_lossy(), beta.to_f64_lossy())?;
    sys.check_coeffs(u0k)?;
    let p = alpha + beta;
    let m = T::one() + beta / alpha;
    let t_max = times.iter().cloned().fold(T::zero(), T::max);
    let lambda_max = sys.modes.iter().map(|m| m.lambda).fold(T::zero(), T::max);
    let f = DecayFunction::new(alpha, m, lambda_max * t_max.powf(p), SeriesAccuracy::default())?;
    let mut modal = Vec::with_capacity(times.len());
    for &t in times {
        let tp = t.powf(p);
        let row = sys
            .modes
            .iter()
            .zip(u0k)
            .map(|(mode, &c)| {
                if c == T::zero() || mode.lambda == T::zero() || t == T::zero() {
                    Ok(c)
                } else {
                    Ok(c * f.eval(mode.lambda * tp)?.value)
                }
            })
            .collect::<Result<Vec<T>>>()?;
        modal.push(row);
    }
    Ok(trace_from_modal(times.to_vec(), modal))
}

/// Time-dependent diffusion coefficient `a(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSpec<T> {
    /// `a = kappa t^beta`.
    Power { kappa: T, beta: T },
    /// `a = beta t^(beta-1)`, primitive `t^beta`.
    ExponentialRate { beta: T },
    /// `a = p / ((1+t)(1+ln(1+t)))`, primitive `p ln(1 + ln(1+t))`.
    Logarithmic { p: T },
    /// `a = q P'(t)/P(t)` with `P = sum_j a_j t^j`, primitive `q ln(P(t)/a_0)`.
    Polynomial { q: T, coeffs: Vec<T> },
    /// Piecewise-linear interpolation of samples `(t_i, a_i)`, constant beyond the ends.
    Tabulated { points: Vec<(T, T)> },
    /// `a = t^beta (offset + amplitude sin(frequency t))`.
    PowerModulated { beta: T, offset: T, amplitude: T, frequency: T },
}

impl<T: Real> CoefficientSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SpectralError::InvalidParams(m.to_string()));
        match self {
            CoefficientSpec::Power { kappa, .. } if !(*kappa > T::zero()) => bad("kappa must be > 0"),
            CoefficientSpec::ExponentialRate { beta } if !(*beta > T::zero()) => bad("beta must be > 0"),
            CoefficientSpec::Logarithmic { p } if !(*p > T::zero()) => bad("p must be > 0"),
            CoefficientSpec::Polynomial { q, coeffs } => {
                if !(*q > T::zero()) {
                    return bad("q must be > 0");
                }
                if coeffs.len() < 2 || !(coeffs[0] > T::zero()) || coeffs[1..].iter().any(|a| !(*a > T::zero())) {
                    return bad("polynomial needs a_0 > 0 and a_j > 0 for j >= 1");
                }
                Ok(())
            }
            CoefficientSpec::Tabulated { points } => {
                if points.len() < 2 || points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return bad("tabulated coefficient needs at least two increasing abscissae");
                }
                Ok(())
            }
            CoefficientSpec::PowerModulated { beta, .. } if !(*beta > -T::one()) => {
                bad("modulated coefficient needs beta > -1")
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: T) -> T {
        let one = T::one();
        match self {
            CoefficientSpec::Power { kappa, beta } => *kappa * t.powf(*beta),
            CoefficientSpec::ExponentialRate { beta } => *beta * t.powf(*beta - one),
            CoefficientSpec::Logarithmic { p } => *p / ((one + t) * (one + t.ln_1p())),
            CoefficientSpec::Polynomial { q, coeffs } => {
                let (p, dp) = poly_and_derivative(coeffs, t);
                *q * dp / p
            }
            CoefficientSpec::Tabulated { points } => interpolate(points, t),
            CoefficientSpec::PowerModulated { beta, offset, amplitude, frequency } => {
                t.powf(*beta) * (*offset + *amplitude * (*frequency * t).sin())
            }
        }
    }

    /// `A(t) = int_0^t a(s) ds`.
    pub fn primitive(&self, t: T) -> T {
        let one = T::one();
        match self {
            CoefficientSpec::Power { kappa, beta } => *kappa * t.powf(*beta + one) / (*beta + one),
            CoefficientSpec::ExponentialRate { beta } => t.powf(*beta),
            CoefficientSpec::Logarithmic { p } => *p * t.ln_1p().ln_1p(),
            CoefficientSpec::Polynomial { q, coeffs } => {
                let (p, _) = poly_and_derivative(coeffs, t);
                *q * (p / coeffs[0]).ln()
            }
            CoefficientSpec::Tabulated { points } => tabulated_primitive(points, t),
            CoefficientSpec::PowerModulated { beta, offset, amplitude, frequency } => {
                let e = *beta + one;
                let w_end = t.powf(e);
                let g = |w: T| (*frequency * w.powf(e.recip())).sin();
                let osc = adaptive_simpson(&g, T::zero(), w_end, T::lit(1e-13), 50);
                (*offset * w_end + *amplitude * osc) / e
            }
        }
    }
}

fn poly_and_derivative<T: Real>(coeffs: &[T], t: T) -> (T, T) {
    let mut p = T::zero();
    let mut dp = T::zero();
    for &c in coeffs.iter().rev() {
        dp = dp * t + p;
        p = p * t + c;
    }
    (p, dp)
}

fn interpolate<T: Real>(points: &[(T, T)], t: T) -> T {
    if t <= points[0].0 {
        return points[0].1;
    }
    for w in points.windows(2) {
        let ((t0, a0), (t1, a1)) = (w[0], w[1]);
        if t <= t1 {
            return a0 + (a1 - a0) * (t - t0) / (t1 - t0);
        }
    }
    points[points.len() - 1].1
}

/// Exact integral of the piecewise-linear interpolant (constant extension
/// to the left of the first sample down to `t = 0`).
fn tabulated_primitive<T: Real>(points: &[(T, T)], t: T) -> T {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    let mut prev = (T::zero(), points[0].1);
    for &(ti, ai) in points.iter().chain(std::iter::once(&(T::infinity(), points[points.len() - 1].1))) {
        let (t0, a0) = prev;
        if ti <= t0 {
            prev = (t0, ai);
            continue;
        }
        let end = ti.min(t);
        let a_end = if ti.is_finite() { a0 + (ai - a0) * (end - t0) / (ti - t0) } else { a0 };
        acc = acc + half * (a0 + a_end) * (end - t0);
        if t <= ti {
            break;
        }
        prev = (ti, ai);
    }
    acc
}

fn adaptive_simpson<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, tol: T, depth: usize) -> T {
    fn simpson<T: Real>(fa: T, fm: T, fb: T, a: T, b: T) -> T {
        (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: usize) -> T {
        let m = T::lit(0.5) * (a + b);
        let lm = T::lit(0.5) * (a + m);
        let rm = T::lit(0.5) * (m + b);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= T::lit(15.0) * tol {
            return left + right + diff / T::lit(15.0);
        }
        recurse(f, a, m, fa, flm, fm, left, T::lit(0.5) * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, T::lit(0.5) * tol, depth - 1)
    }
    if b <= a {
        return T::zero();
    }
    // Split long ranges first so the oscillation is resolved before refinement.
    let pieces = ((b - a).to_f64_lossy().ceil() as usize).clamp(1, 100_000);
    let h = (b - a) / T::from_usize_lossy(pieces);
    let mut acc = T::zero();
    for i in 0..pieces {
        let lo = a + h * T::from_usize_lossy(i);
        let hi = if i + 1 == pieces { b } else { lo + h };
        let (fa, fb) = (f(lo), f(hi));
        let fm = f(T::lit(0.5) * (lo + hi));
        let whole = simpson(fa, fm, fb, lo, hi);
        acc = acc + recurse(f, lo, hi, fa, fm, fb, whole, tol / T::from_usize_lossy(pieces), depth);
    }
    acc
}

/// `u_k(t) = u_{0k} exp(-lambda_k A(t))`.
pub fn solve_heat_general<T: Real>(
    sys: &EigenSystem<T>,
    coeff: &CoefficientSpec<T>,
    u0k: &[T],
    times: &[T],
) -> Result<SolutionTrace<T>> {
    coeff.validate()?;
    sys.check_coeffs(u0k)?;
    let mut modal = Vec::with_capacity(times.len());
    for &t in times {
        let a = if t == T::zero() { T::zero() } else { coeff.primitive(t) };
        if t > T::zero() && !(a > T::zero()) {
            return Err(SpectralError::NonpositivePrimitive { t: t.to_f64_lossy() });
        }
        modal.push(sys.modes.iter().zip(u0k).map(|(m, &c)| c * (-m.lambda * a).exp()).collect());
    }
    Ok(trace_from_modal(times.to_vec(), modal))
}

/// L1 solve of every mode of `d^alpha u + a(t) A u = 0` for a general coefficient.
pub fn solve_subdiffusion_general<T: Real>(
    sys: &EigenSystem<T>,
    alpha: T,
    coeff: &CoefficientSpec<T>,
    u0k: &[T],
    grid: &TimeGrid<T>,
) -> Result<SolutionTrace<T>> {
    coeff.validate()?;
    sys.check_coeffs(u0k)?;
    let op = CaputoL1Operator::new(grid.clone(), alpha)?;
    let columns: Vec<ScalarTrace<T>> = sys
        .modes
        .iter()
        .zip(u0k)
        .map(|(m, &c)| solve_linear_mode_with(&op, |t| coeff.eval(t), m.lambda, c))
        .collect();
    let times = grid.nodes().to_vec();
    let modal = (0..times.len()).map(|j| columns.iter().map(|c| c.values[j]).collect()).collect();
    Ok(trace_from_modal(times, modal))
}

/// Two-sided check of `E(t) ~ 1/(1 + lambda_1 t^{alpha+beta})`.
pub fn verify_dirichlet_sandwich<T: Real>(
    trace: &SolutionTrace<T>,
    sys: &EigenSystem<T>,
    alpha: T,
    beta: T,
) -> DecayReport {
    let s = (alpha + beta).to_f64_lossy();
    let l1 = sys.first_positive_eigenvalue().to_f64_lossy();
    check_envelope_with(&trace.energy_trace(), s, l1, true, FitWindow::default())
}

/// Neumann check. With `u00 != 0` the excess `E(t) - |u00|` must stay below
/// `M / (1 + lambda_2 t^{alpha+beta})` and, at the last sample, below
/// `2 |u01| / (1 + lambda_2 T^{alpha+beta})`; with `u00 = 0` the full
/// two-sided sandwich against `lambda_2` is required (`|u00| <= 1e-12 E(0)`
/// counts as zero).
pub fn verify_neumann<T: Real>(
    trace: &SolutionTrace<T>,
    sys: &EigenSystem<T>,
    alpha: T,
    beta: T,
    u00: T,
    u01: T,
) -> DecayReport {
    let s = (alpha + beta).to_f64_lossy();
    let l2 = sys.first_positive_eigenvalue().to_f64_lossy();
    let plateau = u00.abs().to_f64_lossy();
    let energy = trace.energy_trace();
    // a projected mean at quadrature-noise level counts as zero
    let e0 = energy.values.first().map_or(0.0, |e| e.to_f64_lossy());
    if plateau <= 1e-12 * e0 {
        return check_envelope_with(&energy, s, l2, true, FitWindow::default());
    }
    let excess = ScalarTrace {
        times: energy.times.iter().map(|t| t.to_f64_lossy()).collect(),
        values: energy.values.iter().map(|&e| (e.to_f64_lossy() - plateau).max(0.0)).collect(),
    };
    let (t_end, e_end) = energy.last().map(|(t, e)| (t.to_f64_lossy(), e.to_f64_lossy())).unwrap_or((0.0, plateau));
    let gap = (e_end - plateau).abs();
    let gap_bound = 2.0 * u01.abs().to_f64_lossy() / (1.0 + l2 * t_end.powf(s));
    let flat = excess.values.iter().all(|&v| v <= 1e-12 * plateau);
    let mut report = if flat {
        let mut r = check_envelope_with(&energy, s, l2, false, FitWindow::default());
        r.upper_ok = true;
        r.verdict = Verdict::UpperOnlyOk;
        r.upper_constant = 0.0;
        r.note = Some("constant solution".into());
        r
    } else {
        check_envelope_with(&excess, s, l2, false, FitWindow::default())
    };
    report.plateau = Some(plateau);
    if gap > gap_bound + 1e-12 * plateau {
        report.upper_ok = false;
        report.verdict = Verdict::Violated;
        report.note = Some(format!("|E(T) - |u00|| = {gap:.3e} exceeds {gap_bound:.3e}"));
    }
    report
}

/// Relative slack allowed when comparing modal values with the minorant
/// solution: the L1 solution carries an `O(tau^{2-alpha})` error.
pub const DOMINATION_TOLERANCE: f64 = 1e-2;

/// Upper-bound check for a coefficient satisfying `a(t) >= kappa t^beta`:
/// every mode must stay below the closed-form solution with `a = kappa t^beta`,
/// and `E(t) (1 + lambda_1 kappa t^{alpha+beta})` must stay bounded.
pub fn verify_general_coefficient_upper<T: Real>(
    trace: &SolutionTrace<T>,
    sys: &EigenSystem<T>,
    alpha: T,
    kappa: T,
    beta: T,
) -> Result<DecayReport> {
    check_fractional(alpha.to_f64_lossy(), beta.to_f64_lossy())?;
    let modal = trace
        .modal
        .as_ref()
        .ok_or_else(|| SpectralError::InvalidParams("trace carries no modal coefficients".into()))?;
    let u0k = modal.first().cloned().unwrap_or_default();
    // Minorant closed form: lambda_k is scaled by kappa.
    let scaled = EigenSystem {
        modes: sys.modes.iter().map(|m| Mode { lambda: m.lambda * kappa, index: m.index.clone() }).collect(),
        ..sys.clone()
    };
    let minorant = solve_subdiffusion(&scaled, alpha, beta, &u0k, &trace.times)?;
    let bound = minorant.modal.expect("closed-form traces carry modes");
    let tol = T::lit(DOMINATION_TOLERANCE);
    let mut worst: Option<(f64, usize)> = None;
    for (j, (row, brow)) in modal.iter().zip(&bound).enumerate() {
        for ((&u, &b), &c0) in row.iter().zip(brow).zip(&u0k) {
            let allowed = b.abs() * (T::one() + tol) + T::lit(1e-12) * c0.abs();
            if u.abs() > allowed {
                let excess = ((u.abs() - b.abs()) / c0.abs().max(T::min_positive_value())).to_f64_lossy();
                if worst.is_none_or(|(w, _)| excess > w) {
                    worst = Some((excess, j));
                }
            }
        }
    }
    let s = (alpha + beta).to_f64_lossy();
    let rate = (sys.first_positive_eigenvalue() * kappa).to_f64_lossy();
    let mut report = check_envelope_with(&trace.energy_trace(), s, rate, false, FitWindow::default());
    if let Some((excess, j)) = worst {
        report.upper_ok = false;
        report.verdict = Verdict::Violated;
        report.note = Some(format!(
            "modal value exceeds the minorant solution by {excess:.3e} (relative to u0k) at t = {}",
            trace.times[j]
        ));
    }
    Ok(report)
}
