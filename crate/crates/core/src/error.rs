use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (supported: 1..={max})", max = crate::geometry::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("configuration diameter {diameter} is not below 1/2; no unique lift exists")]
    DiameterTooLarge { diameter: f64 },

    #[error("configuration wraps around the torus and has no consistent lift")]
    NotLiftable,

    #[error("degenerate configuration (condition estimate {cond:e})")]
    Degenerate { cond: f64 },

    #[error("point {point} lies within the tolerance band of the sphere boundary")]
    Marginal { point: usize },

    #[error("need at least {needed} points, cloud has {available}")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("cell size {0} outside (0, 1/4] or grid too large")]
    CellSizeOutOfRange(f64),

    #[error("degenerate trial: {0}")]
    DegenerateTrial(Box<Error>),

    #[error("vacancy persists at the convexity radius 1/4; Morse criterion out of regime")]
    OutOfRegime,

    #[error("need at least {needed} trials, got {got}")]
    InsufficientTrials { needed: usize, got: usize },

    #[error("dispersion undefined: mean count is zero")]
    UndefinedDispersion,

    #[error("radius {r} lies below the enumeration window lower bound {r_min}")]
    BelowWindow { r: f64, r_min: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// True for the outcomes that flag a whole trial as degenerate.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateTrial(_) | Error::Degenerate { .. } | Error::Marginal { .. }
        )
    }
}
