use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("side length {0} must be even and positive")]
    OddL(usize),
    #[error("L = {l} exceeds the enumeration limit {max}")]
    SizeTooLarge { l: usize, max: usize },
    #[error("faces are not connected by elementary steps")]
    ParityMismatch,
    #[error("weights are not in the liquid phase: {0}")]
    NotLiquid(String),
    #[error("point is not on the spectral curve: |mu| = {0:e}")]
    NotOnSpectralCurve(f64),
    #[error("the two closed forms for the Fermi velocities disagree by {0:e}")]
    InconsistentForms(f64),
    #[error("theta sector {0:?} is singular on this grid")]
    SingularSector([u8; 2]),
    #[error("displacement must be nonzero")]
    ZeroDistance,
    #[error("distance {d} exceeds the wrap guard L/4 = {limit}")]
    WrapGuard { d: usize, limit: usize },
    #[error("face is not flippable in this configuration")]
    NotFlippable,
    #[error("cluster has {0} edges; at most 4 are supported")]
    TooLarge(usize),
    #[error("winding ({0}, {1}) is not realizable")]
    UnrealizableWinding(i64, i64),
    #[error("insufficient statistics: {have:.1} effective samples, {need} needed")]
    InsufficientStatistics { have: f64, need: usize },
    #[error("insufficient range: {0}")]
    InsufficientRange(String),
    #[error("fit diverged: {0}")]
    FitDiverged(String),
    #[error("degenerate fit design: {0}")]
    DegenerateDesign(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_even(l: usize) -> Result<()> {
    if l == 0 || l % 2 != 0 {
        return Err(Error::OddL(l));
    }
    Ok(())
}
