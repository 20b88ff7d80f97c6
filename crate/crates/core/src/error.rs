use thiserror::Error;

use crate::geom::PlaneId;

/// Errors raised by the envelope structures and their geometric inputs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("coefficient {0} outside the supported range (|v| < 2^31)")]
    CoefficientOutOfRange(i64),
    #[error("coordinate outside the supported domain")]
    OutsideDomain,
    #[error("denominator must be positive")]
    BadDenominator,
    #[error("radius must be a finite nonnegative number")]
    BadRadius,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("self-loop query on id {0}")]
    SelfLoop(u64),
    #[error("duplicate id {0}")]
    DuplicateId(PlaneId),
    #[error("unknown id {0}")]
    UnknownId(PlaneId),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("empty set")]
    Empty,
    #[error("shallow cutting construction failed: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
