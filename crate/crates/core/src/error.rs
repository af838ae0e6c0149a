use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("edge ({0}, {1}) is not present in the graph")]
    EdgeNotFound(usize, usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (max |U^dag U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (norm^2 = {norm_sqr:.15})")]
    NotNormalized { norm_sqr: f64 },

    #[error("coin plan covers {available} steps but {requested} were requested")]
    PlanTooShort { requested: usize, available: usize },

    #[error("register sites still occupied (max |amplitude| = {max_amplitude:.3e})")]
    ProtocolIncomplete { max_amplitude: f64 },

    #[error("register shift by {offset} would move amplitude off the grid at physical site {site}")]
    ShiftOutOfRange { offset: isize, site: usize },

    #[error("Chebyshev spectral bounds violated: {0}")]
    SpectralBounds(String),

    #[error("calibration target {target} unreachable (achieved range [{min_achieved:.4}, {max_achieved:.4}])")]
    CalibrationUnreachable {
        target: f64,
        min_achieved: f64,
        max_achieved: f64,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
