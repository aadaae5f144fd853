use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("reciprocal requires a unit (nonzero constant term)")]
    UnitRequired,
    #[error("result truncation order would be negative")]
    EmptyPrecision,
    #[error("insufficient precision: need order {needed}, have {have}")]
    InsufficientPrecision { needed: usize, have: usize },
    #[error("not divisible: nonzero coefficient at x^{order}")]
    NotDivisible { order: usize },
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("inadmissible transformation: {0}")]
    Inadmissible(String),
    #[error("gauge matrix P(0) is singular")]
    NotRegular,
    #[error("undecidable: {0}")]
    Undecidable(String),
    #[error("homological equation singular at order {0}")]
    Obstruction(usize),
    #[error("curve lies in the formal singular locus to known order")]
    DegenerateCurve,
    #[error("fuel exhausted: {0}")]
    Fuel(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("window must span at least one decade in x")]
    InsufficientWindow,
    #[error("trajectory escaped at x = {x}; retry with a larger seed order or a smaller seed abscissa")]
    SeedTooCoarse { x: f64 },
    #[error("trajectory escaped the domain at x = {x}")]
    Escape { x: f64 },
    #[error("iterated tangent at level {0} did not converge")]
    TangentUndefined(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn need(needed: usize, have: usize) -> Result<()> {
    if needed > have {
        Err(Error::InsufficientPrecision { needed, have })
    } else {
        Ok(())
    }
}
