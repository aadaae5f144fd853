//! Exact truncated power series, polynomial matrices and block structures.

pub mod blocks;
pub mod complex;
pub mod json;
pub mod matrix;
pub mod multi;
pub mod scalar;
pub mod series;

pub use blocks::{compatible, direct_sum, theta, theta_embed, Block, BlockKind, BlockStructure};
pub use complex::ComplexSeries;
pub use json::Json;
pub use matrix::{Mat, PolyMatrix};
pub use multi::{Alpha, MultiSeries};
pub use scalar::{parse_rat, rat, rat_to_f64, rat_to_string, rint, Rational, Scalar};
pub use series::{Order, Series};
