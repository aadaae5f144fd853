//! Reduction of real singular linear systems and of vector fields along
//! formal invariant curves to Turrittin-Ramis-Sibuya normal form, and
//! numeric construction of the trajectories asymptotic to those curves.
//!
//! The symbolic modules compute over exact rationals; the containers in
//! [`series_core`] are generic over [`Scalar`] so the same code also runs on
//! `f64` and `f32` data.

pub mod dynamics_numeric;
pub mod error;
pub mod linear_systems;
pub mod series_core;
pub mod straightener;
pub mod vf_couples;

pub use error::{Error, Result};
pub use series_core::Scalar;

/// Exact series, the coefficient carrier of the symbolic pipeline.
pub type RSeries = series_core::Series<series_core::Rational>;
pub type RMultiSeries = series_core::MultiSeries<series_core::Rational>;
pub type RMat = series_core::Mat<series_core::Rational>;
pub type RPolyMatrix = series_core::PolyMatrix<series_core::Rational>;
pub type FSeries = series_core::Series<f64>;
pub type FMultiSeries = series_core::MultiSeries<f64>;
pub type FMat = series_core::Mat<f64>;
pub type F32Series = series_core::Series<f32>;
