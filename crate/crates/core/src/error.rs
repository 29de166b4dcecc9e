use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time grid too narrow: {lost:.3e} of the pulse energy falls outside the grid")]
    GridTooNarrow { lost: f64 },

    #[error("spectrum aliased: {edge_fraction:.3e} of the power lies near the Nyquist edge")]
    Aliasing { edge_fraction: f64 },

    #[error("spectral width {measured_ghz} GHz is below the transform limit {limit_ghz:.3} GHz")]
    BelowTransformLimit { measured_ghz: f64, limit_ghz: f64 },

    #[error("closed-form filtering supports only centred Gaussian filters")]
    UnsupportedShape,

    #[error("sampled fields live on different time grids")]
    GridMismatch,

    #[error("insufficient counts: {0}")]
    InsufficientCounts(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
