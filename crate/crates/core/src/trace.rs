//! Time series produced by the solvers.

use crate::scalar::Real;

/// Scalar trajectory `u(t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTrace<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> ScalarTrace<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(T, T)> {
        Some((*self.times.last()?, *self.values.last()?))
    }
}

/// Energy history of a PDE solve, with whatever state representation the
/// solver keeps: modal coefficients (spectral) or grid fields (finite differences).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTrace<T> {
    pub times: Vec<T>,
    /// `E(t_j) = ||u(t_j)||_{L^2}`.
    pub energy: Vec<T>,
    /// `modal[j][k] = u_k(t_j)`.
    pub modal: Option<Vec<Vec<T>>>,
    /// `fields[j][i] = u(t_j, x_i)` on the interior grid points.
    pub fields: Option<Vec<Vec<T>>>,
    /// Grid spacing used for discrete `L^2` norms of `fields`.
    pub spacing: Option<T>,
}

impl<T: Real> SolutionTrace<T> {
    pub fn from_energy(times: Vec<T>, energy: Vec<T>) -> Self {
        Self { times, energy, modal: None, fields: None, spacing: None }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energy_trace(&self) -> ScalarTrace<T> {
        ScalarTrace { times: self.times.clone(), values: self.energy.clone() }
    }
}

/// `(sum_k c_k^2)^{1/2}` evaluated without intermediate overflow.
pub fn l2_norm<T: Real>(c: &[T]) -> T {
    let scale = c.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let s: T = c.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}
