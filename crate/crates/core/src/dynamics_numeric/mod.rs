//! Numeric trajectories of TRS fields: integration, shooting along formal
//! invariant curves, contact certification, basins and iterated tangents.

pub mod asymptotic;
pub mod basin;
pub mod center;
pub mod chart;
pub mod field;
pub mod integrate;
pub mod shoot;
pub mod tangents;

pub use asymptotic::{shoot_couple, CoupleShootOptions, CoupleShot};
pub use basin::{basin_probe, BasinOptions, BasinReport, Boundary, Fate, Horn};
pub use center::{center_manifold_jet, CenterManifoldJet};
pub use chart::ChartMap;
pub use field::{ClosureField, FPoly, Field, PolyField, TrsField};
pub use integrate::{integrate, integrate_until, IntegratorOptions, NumericTrajectory, StepStats, Stop};
pub use shoot::{
    contact_report, flat_contact_check, flat_contact_from_diff, horn_membership, integrate_pair, ls_slope,
    shoot_asymptotic, ContactReport, CurveJet, FlatContactReport, PairTrajectory, ShootOptions, Shot,
};
pub use tangents::{formal_iterated_tangents, iterated_tangents, TangentOptions, TangentReport};
