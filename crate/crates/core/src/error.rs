use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("scale error: {0}")]
    Scale(String),

    #[error(
        "frame lower bound {lower:.6} is below the required minimum {minimum:.6} \
         (worst frequency {frequency:?})"
    )]
    Frame {
        lower: f64,
        minimum: f64,
        frequency: Vec<f64>,
    },

    #[error("cascade accuracy error: {uncovered:.3e} of the energy of band (j={scale}, k={band}) falls outside the deconvolution mask")]
    CascadeAccuracy {
        scale: u32,
        band: u32,
        uncovered: f64,
    },

    #[error("warp field is not a small diffeomorphism (|grad g|_inf = {0:.6} >= 1)")]
    NotDiffeomorphic(f64),

    #[error("stability ratio is undefined for a warp with zero deformation metric")]
    UndefinedRatio,

    #[error("regularization required: {0}")]
    RegularizationRequired(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}
