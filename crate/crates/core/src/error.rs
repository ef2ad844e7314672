use thiserror::Error;

use crate::lattice::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {0} lies outside the weight grid")]
    OutOfGrid(Point),

    #[error("points are not ordered: {from} is not below {to}")]
    NotOrdered { from: Point, to: Point },

    #[error("point {0} is not in the growth region of the substrate")]
    NotInGrowthRegion(Point),

    #[error("simulation window too small: {0}")]
    InsufficientWindow(String),

    #[error("root did not stabilize; roots at checkpoints {roots:?}")]
    NotStabilized { roots: Vec<i64> },

    #[error("geodesics met only at the common endpoint (no coalescence inside the box)")]
    NotCoalesced,

    #[error("maximum could not be certified within the window (gap {gap:.3} < required {required:.3})")]
    CertificationFailed { gap: f64, required: f64 },

    #[error("acceptance rate {rate:.3e} fell below the floor {floor:.3e}")]
    AcceptanceTooLow { rate: f64, floor: f64 },

    #[error("series truncation bound {bound:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationExceeded { bound: f64, tolerance: f64 },

    #[error("need at least {needed} points for the fit, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("replica {id} failed: {source}")]
    Replica {
        id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("exclusion rate {rate:.4} exceeds the limit {limit:.4}")]
    ExclusionRateExceeded { rate: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
