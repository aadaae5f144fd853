//! Singular linear systems `x^{p+1} y' = A(x) y`, gauge transformations and
//! reduction to TRS form.

pub mod homological;
pub mod poly;
pub mod reduce;
pub mod spectrum;
pub mod system;
pub mod trs;

pub use homological::kill_vestigial;
pub use reduce::{reduce_linear_full, ReduceOptions, Reduced, Reduction};
pub use spectrum::{has_good_spectrum, spectrum, Eigenvalue, Spectrum};
pub use system::{apply_gauge, constant_gauge, is_admissible, replay, GaugeTransform, LinearSystem};
pub use trs::{dominant_rotation, exponential_matrix, no_dominant_rotation, recognize_trs, unstability_index, Exponent, TRSLinearForm};
