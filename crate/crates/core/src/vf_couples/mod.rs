//! Invariant couples `(xi, gamma)`, their admissible coordinate
//! transformations, and reduction to TRS form.

pub mod jet;
pub mod pipeline;
pub mod transform;
pub mod trs_form;

pub use jet::{check_invariance, FormalCurve, InvariantCouple, Invariance, VectorFieldJet};
pub use pipeline::{
    associated_linear_system, default_working_order, normalize_x_component, reduce_vf_trs, refine_parameters,
    refine_trs, Normalized, VfOptions, VfReduction,
};
pub use transform::{
    apply_coord_transform, center_invariant, determinacy_shift, lift_gauge, permutation_transform, replay_chain,
    CoordTransform, TransformChain,
};
pub use trs_form::{recognize_trs_vf, trs_permutation, vestigial_order, TRSVFForm};
