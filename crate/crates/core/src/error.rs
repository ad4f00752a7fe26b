use thiserror::Error;

/// Errors raised anywhere in the sensing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("could not place {requested} targets with {min_sep_deg:.3} deg separation after {attempts} draws")]
    OverDenseScene {
        requested: usize,
        min_sep_deg: f64,
        attempts: usize,
    },

    #[error("beam {beam}: transmit gain magnitude {magnitude:.3e} is below the floor {floor:.3e}")]
    GainBelowFloor { beam: usize, magnitude: f64, floor: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("degenerate noise subspace: no polynomial root strictly inside the unit circle")]
    NoInsideRoot,

    #[error("spatial frequency {0:.6} maps outside the arcsine domain")]
    ArcsinDomain(f64),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("undetectable candidate: response lies in the clutter subspace (ratio {ratio:.3e})")]
    Undetectable { ratio: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::OverDenseScene { .. } => "over_dense_scene",
            Error::GainBelowFloor { .. } => "gain_below_floor",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::NoInsideRoot => "no_inside_root",
            Error::ArcsinDomain(_) => "arcsin_domain",
            Error::Singular(_) => "singular",
            Error::Undetectable { .. } => "undetectable",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
