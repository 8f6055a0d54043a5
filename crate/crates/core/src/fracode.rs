//! L1 discretization of the Caputo derivative and the scalar fractional ODEs
//! built on it.
//!
//! On nodes `0 = t_0 < ... < t_N` the L1 formula reads
//!
//! ```text
//! d^a u(t_n) ~ sum_{j<n} d_{n,j} (u_{j+1} - u_j),
//! d_{n,j} = [(t_n - t_j)^(1-a) - (t_n - t_{j+1})^(1-a)] / (Gamma(2-a) tau_{j+1})
//! ```
//!
//! For fixed `n` the weights increase with `j`, which is what makes every
//! implicit step below a positive combination of past values.

use thiserror::Error;

use crate::scalar::{CompensatedSum, Real};
use crate::special::gamma;
use crate::trace::ScalarTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracodeError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("sample count {got} does not match the {expected} grid nodes")]
    GridMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("scalar root solve failed at step {step} (t = {t})")]
    RootSolveFailure { step: usize, t: f64 },
}

pub type Result<T> = std::result::Result<T, FracodeError>;

/// Graded mesh `t_j = T (j/N)^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    grading: T,
    nodes: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(horizon: T, steps: usize, grading: T) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(FracodeError::InvalidGrid(format!("horizon {horizon} must be positive")));
        }
        if steps == 0 {
            return Err(FracodeError::InvalidGrid("at least one step is required".into()));
        }
        if !(grading >= T::one()) || !grading.is_finite() {
            return Err(FracodeError::InvalidGrid(format!("grading {grading} must be >= 1")));
        }
        let n = T::from_usize_lossy(steps);
        let mut nodes: Vec<T> = (0..=steps)
            .map(|j| horizon * (T::from_usize_lossy(j) / n).powf(grading))
            .collect();
        nodes[steps] = horizon;
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FracodeError::InvalidGrid("nodes are not strictly increasing".into()));
        }
        Ok(Self { horizon, grading, nodes })
    }

    /// Mesh from explicit nodes; `grading()` is NaN for such meshes.
    pub fn from_nodes(nodes: Vec<T>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != T::zero() {
            return Err(FracodeError::InvalidGrid("nodes must start at 0 and hold at least two points".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes[nodes.len() - 1].is_finite() {
            return Err(FracodeError::InvalidGrid("nodes are not strictly increasing".into()));
        }
        Ok(Self { horizon: nodes[nodes.len() - 1], grading: T::nan(), nodes })
    }

    pub fn uniform(horizon: T, steps: usize) -> Result<Self> {
        Self::new(horizon, steps, T::one())
    }

    /// Grading `min((2-a)/a, 4)` that resolves the `t^a` start-up layer.
    pub fn default_grading(alpha: T) -> T {
        ((T::lit(2.0) - alpha) / alpha).min(T::lit(4.0)).max(T::one())
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn grading(&self) -> T {
        self.grading
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// `tau_n = t_n - t_{n-1}` for `n >= 1`.
    pub fn step(&self, n: usize) -> T {
        self.nodes[n] - self.nodes[n - 1]
    }
}

/// Precomputed L1 weights on a [`TimeGrid`]; `alpha = 1` degenerates to the
/// backward difference.
#[derive(Debug, Clone)]
pub struct CaputoL1Operator<T> {
    grid: TimeGrid<T>,
    alpha: T,
    /// Row `n` (1-based) occupies `weights[n(n-1)/2 .. n(n+1)/2]`.
    weights: Vec<T>,
}

impl<T: Real> CaputoL1Operator<T> {
    pub fn new(grid: TimeGrid<T>, alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(FracodeError::InvalidParams(format!("alpha = {alpha} must lie in (0, 1]")));
        }
        let n_steps = grid.steps();
        let t = grid.nodes();
        let mut weights = Vec::with_capacity(n_steps * (n_steps + 1) / 2);
        if alpha == T::one() {
            for n in 1..=n_steps {
                weights.extend(std::iter::repeat_n(T::zero(), n - 1));
                weights.push(grid.step(n).recip());
            }
        } else {
            let e = T::one() - alpha;
            let g = gamma(T::lit(2.0) - alpha);
            for n in 1..=n_steps {
                let tn = t[n];
                let mut left = tn.powf(e);
                for j in 0..n {
                    let right = if j + 1 == n { T::zero() } else { (tn - t[j + 1]).powf(e) };
                    weights.push((left - right) / (g * (t[j + 1] - t[j])));
                    left = right;
                }
            }
        }
        Ok(Self { grid, alpha, weights })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Weights `d_{n,0..n-1}`.
    #[inline]
    pub fn row(&self, n: usize) -> &[T] {
        let start = n * (n - 1) / 2;
        &self.weights[start..start + n]
    }

    /// `d_{n,n-1}`, the coefficient of the unknown in step `n`.
    #[inline]
    pub fn diag(&self, n: usize) -> T {
        self.weights[n * (n + 1) / 2 - 1]
    }

    /// `sum_{j<n-1} d_{n,j} (u_{j+1} - u_j)`: the part of step `n` fixed by the past.
    pub fn history(&self, n: usize, u: &[T]) -> T {
        let row = self.row(n);
        let mut s = CompensatedSum::new();
        for j in 0..n - 1 {
            s.add(row[j] * (u[j + 1] - u[j]));
        }
        s.value()
    }

    /// Discrete Caputo derivative at `t_1..t_N` of samples at `t_0..t_N`.
    pub fn apply(&self, samples: &[T]) -> Result<Vec<T>> {
        let expected = self.grid.nodes().len();
        if samples.len() != expected {
            return Err(FracodeError::GridMismatch { expected, got: samples.len() });
        }
        Ok((1..expected)
            .map(|n| self.history(n, samples) + self.diag(n) * (samples[n] - samples[n - 1]))
            .collect())
    }
}

fn check_order(alpha: f64, beta: f64) -> std::result::Result<(), FracodeError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(FracodeError::InvalidParams(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if !(beta > -alpha) {
        return Err(FracodeError::InvalidParams(format!("beta = {beta} must exceed -alpha")));
    }
    Ok(())
}

/// Implicit L1 solve of `d^a u + lambda a(t) u = 0` with `a` sampled at the
/// right end of each step.
pub fn solve_linear_mode_with<T: Real>(
    op: &CaputoL1Operator<T>,
    coefficient: impl Fn(T) -> T,
    lambda: T,
    u0: T,
) -> ScalarTrace<T> {
    let t = op.grid().nodes();
    let mut u = Vec::with_capacity(t.len());
    u.push(u0);
    for n in 1..t.len() {
        let c = lambda * coefficient(t[n]);
        let prev = u[n - 1];
        u.push(prev - (op.history(n, &u) + c * prev) / (op.diag(n) + c));
    }
    ScalarTrace { times: t.to_vec(), values: u }
}

/// `d^a u + lambda t^beta u = 0`, `u(0) = u0`; the `alpha = 1` case is backward Euler.
pub fn solve_linear_mode<T: Real>(
    alpha: T,
    beta: T,
    lambda: T,
    u0: T,
    grid: &TimeGrid<T>,
) -> Result<ScalarTrace<T>> {
    check_order(alpha.to_f64_lossy(), beta.to_f64_lossy())?;
    if !(lambda >= T::zero()) {
        return Err(FracodeError::InvalidParams(format!("lambda = {lambda} must be >= 0")));
    }
    let op = CaputoL1Operator::new(grid.clone(), alpha)?;
    Ok(solve_linear_mode_with(&op, |s| s.powf(beta), lambda, u0))
}

/// Parameters of `d^a H + nu t^beta H^delta = 0`, `H(0) = H0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemilinearParams<T> {
    pub nu: T,
    pub delta: T,
    pub beta: T,
    pub h0: T,
}

impl<T: Real> SemilinearParams<T> {
    pub fn validate(&self, alpha: T) -> Result<()> {
        check_order(alpha.to_f64_lossy(), self.beta.to_f64_lossy())?;
        if !(self.nu > T::zero()) {
            return Err(FracodeError::InvalidParams(format!("nu = {} must be > 0", self.nu)));
        }
        if !(self.delta > T::zero()) {
            return Err(FracodeError::InvalidParams(format!("delta = {} must be > 0", self.delta)));
        }
        if !(self.h0 > T::zero()) {
            return Err(FracodeError::InvalidParams(format!("H0 = {} must be > 0", self.h0)));
        }
        Ok(())
    }
}

const ROOT_MAX_ITER: usize = 80;

/// Root of `w + c w^delta = rhs` on `[0, rhs]`: Newton steps kept inside a
/// shrinking bisection bracket.
fn solve_monotone<T: Real>(c: T, delta: T, rhs: T) -> Option<T> {
    if !(rhs >= T::zero()) || !c.is_finite() || !(c >= T::zero()) {
        return None;
    }
    if rhs == T::zero() {
        return Some(T::zero());
    }
    let tol = T::lit(1e-14) * rhs.max(T::one());
    let f = |w: T| w + c * w.powf(delta) - rhs;
    let (mut lo, mut hi) = (T::zero(), rhs);
    let mut w = rhs / (T::one() + c * rhs.powf(delta - T::one()));
    for _ in 0..ROOT_MAX_ITER {
        let fw = f(w);
        if fw == T::zero() {
            return Some(w);
        }
        if fw > T::zero() {
            hi = w;
        } else {
            lo = w;
        }
        if hi - lo <= tol {
            break;
        }
        let slope = T::one() + c * delta * w.powf(delta - T::one());
        let mut next = w - fw / slope;
        if !(next > lo && next < hi) {
            next = T::lit(0.5) * (lo + hi);
        }
        let done = (next - w).abs() <= T::lit(4.0) * T::epsilon() * w;
        w = next;
        if done {
            break;
        }
    }
    w.is_finite().then_some(w)
}

/// Implicit L1 solve of `d^a H + nu t^beta H^delta = 0`.
pub fn solve_semilinear<T: Real>(
    params: &SemilinearParams<T>,
    alpha: T,
    grid: &TimeGrid<T>,
) -> Result<ScalarTrace<T>> {
    params.validate(alpha)?;
    let op = CaputoL1Operator::new(grid.clone(), alpha)?;
    let t = grid.nodes();
    let mut h = Vec::with_capacity(t.len());
    h.push(params.h0);
    for n in 1..t.len() {
        let d = op.diag(n);
        let rhs = h[n - 1] - op.history(n, &h) / d;
        let c = params.nu * t[n].powf(params.beta) / d;
        let w = solve_monotone(c, params.delta, rhs)
            .ok_or(FracodeError::RootSolveFailure { step: n, t: t[n].to_f64_lossy() })?;
        h.push(w);
    }
    Ok(ScalarTrace { times: t.to_vec(), values: h })
}

/// Explicit sub-solution `H_hat` and super-solution `H_tilde` of the semilinear equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaEnvelope<T> {
    pub h0: T,
    pub nu: T,
    pub delta: T,
    pub alpha: T,
    pub beta: T,
    /// Switch time of the sub-solution.
    pub t1: T,
    /// Switch time of the super-solution.
    pub t2: T,
}

impl<T: Real> LemmaEnvelope<T> {
    /// `(alpha + beta) / delta`.
    pub fn exponent(&self) -> T {
        (self.alpha + self.beta) / self.delta
    }

    pub fn sub_solution(&self, t: T) -> T {
        let one = T::one();
        let g = gamma(one - self.alpha);
        let p = self.alpha + self.beta;
        if t <= self.t1 {
            self.h0 - self.nu * g * self.h0.powf(self.delta) * t.powf(p)
        } else {
            let k = self.h0.powf(one - self.delta) / (T::lit(2.0) * self.nu * g);
            k.powf(one / self.delta) * self.h0 * T::lit(0.5) * t.powf(-self.exponent())
        }
    }

    pub fn super_solution(&self, t: T) -> T {
        if t <= self.t2 {
            self.h0
        } else {
            self.h0 * (self.t2 / t).powf(self.exponent())
        }
    }
}

pub fn lemma_envelope<T: Real>(params: &SemilinearParams<T>, alpha: T) -> Result<LemmaEnvelope<T>> {
    params.validate(alpha)?;
    if alpha >= T::one() {
        return Err(FracodeError::InvalidParams("the envelopes need alpha < 1".into()));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let SemilinearParams { nu, delta, beta, h0 } = *params;
    let p = alpha + beta;
    let s = p / delta;
    let base = h0.powf(one - delta);
    let t1 = (base / (two * nu * gamma(one - alpha))).powf(one / p);
    let bracket = two.powf(alpha) / gamma(one - alpha) + s * two.powf(alpha + s) / gamma(two - alpha);
    let t2 = (base / nu * bracket).powf(one / p);
    Ok(LemmaEnvelope { h0, nu, delta, alpha, beta, t1, t2 })
}

/// Tightest `c1, c2` with `c1 sub(t) <= H(t) <= c2 super(t)` over a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichEnvelope<T> {
    pub c1: T,
    pub c2: T,
    pub exponent: T,
}

impl<T: Real> SandwichEnvelope<T> {
    /// Both constants finite and positive.
    pub fn holds(&self) -> bool {
        self.c1 > T::zero() && self.c1.is_finite() && self.c2 > T::zero() && self.c2.is_finite()
    }
}

pub fn sandwich_constants<T: Real>(trace: &ScalarTrace<T>, env: &LemmaEnvelope<T>) -> SandwichEnvelope<T> {
    let mut c1 = T::infinity();
    let mut c2 = T::zero();
    for (&t, &h) in trace.times.iter().zip(&trace.values) {
        c1 = c1.min(h / env.sub_solution(t));
        c2 = c2.max(h / env.super_solution(t));
    }
    SandwichEnvelope { c1, c2, exponent: env.exponent() }
}
