//! Decay estimates for time-fractional evolution equations.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases at the bottom fix the scalar to `f64`.

// `!(x > 0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod scalar;
pub mod special;
pub mod specfun;
pub mod fracode;
pub mod trace;
pub mod decayfit;
pub mod spectral;
pub mod nonlinear;

pub use scalar::{CompensatedSum, Real};
pub use trace::{ScalarTrace, SolutionTrace};

pub type KilbasSaigoParams64 = specfun::KilbasSaigoParams<f64>;
pub type SeriesAccuracy64 = specfun::SeriesAccuracy<f64>;
pub type BoundPair64 = specfun::BoundPair<f64>;
pub type TimeGrid64 = fracode::TimeGrid<f64>;
pub type CaputoL1Operator64 = fracode::CaputoL1Operator<f64>;
pub type SemilinearParams64 = fracode::SemilinearParams<f64>;
pub type ScalarTrace64 = trace::ScalarTrace<f64>;
pub type SolutionTrace64 = trace::SolutionTrace<f64>;
pub type EigenSystem64 = spectral::EigenSystem<f64>;
pub type CoefficientSpec64 = spectral::CoefficientSpec<f64>;
pub type SpatialGrid1D64 = nonlinear::SpatialGrid1D<f64>;
pub type OperatorSpec64 = nonlinear::OperatorSpec<f64>;
pub type SourceSpec64 = nonlinear::SourceSpec<f64>;
pub type NonlinearProblem64 = nonlinear::NonlinearProblem<f64>;
