use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("singular gauge: |det| = {min_det:.3e} at node ({i}, {j})")]
    SingularGauge { min_det: f64, i: usize, j: usize },
    #[error("frame error: {0}")]
    Frame(String),
    #[error("support of {what} violates margin: {detail}")]
    SupportMargin { what: String, detail: String },
    #[error("non-symmetric tensor input (asymmetry {0:.3e})")]
    NonSymmetric(f64),
    #[error("vector is not unit length (|v|_g = {0})")]
    NonUnitVector(f64),
    #[error("insufficient angular resolution: {samples} samples")]
    Nyquist { samples: usize },
    #[error("dbar solve did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("invertibility certificate failed: min |det| = {min_det:.3e} at z = {at}")]
    NotInvertible { min_det: f64, at: String },
    #[error("evaluation point too close to contour (distance {distance:.3e} < {limit:.3e})")]
    TooCloseToContour { distance: f64, limit: f64 },
    #[error("contour is not closed or not counterclockwise: {0}")]
    BadContour(String),
    #[error("geodesic trapped after arc length {0}")]
    TrappedGeodesic(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scaling radius too small: d = {d} <= {min}")]
    RadiusTooSmall { d: f64, min: f64 },
    #[error("matrix logarithm branch failure: eigenvalue {0} on the negative real axis")]
    LogBranch(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("io: {0}")]
    Io(String),
    #[error("config: {0}")]
    Config(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
