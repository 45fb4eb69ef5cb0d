use core::fmt;

/// Errors produced by the fitting, transform and scoring kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input has too few samples, zero variance, or an empty side.
    DegenerateInput(&'static str),
    /// Fewer feature rows than dimensions + 1.
    InsufficientPatches {
        found: usize,
        required: usize,
    },
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    /// The averaged covariance could not be factored even after ridge regularization.
    SingularCovariance,
    InvalidParameter(&'static str),
    PlaneTooSmall {
        width: usize,
        height: usize,
        min_width: usize,
        min_height: usize,
    },
    /// Sample buffer length does not match `width * height`.
    GeometryMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
    PatchOutOfBounds {
        x: usize,
        y: usize,
        size: usize,
    },
    NoPatchesFit {
        width: usize,
        height: usize,
        patch_size: usize,
    },
    /// Frame score is negative or not finite.
    InvalidScore(f64),
    EmptySeries,
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegenerateInput(why) => write!(f, "degenerate input: {why}"),
            Error::InsufficientPatches { found, required } => {
                write!(f, "insufficient patches: found {found}, need at least {required}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::SingularCovariance => f.write_str("covariance is numerically singular"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::PlaneTooSmall { width, height, min_width, min_height } => {
                write!(f, "plane {width}x{height} is smaller than the required {min_width}x{min_height}")
            }
            Error::GeometryMismatch { width, height, len } => {
                write!(f, "{len} samples do not match a {width}x{height} plane")
            }
            Error::PatchOutOfBounds { x, y, size } => {
                write!(f, "patch of size {size} at ({x}, {y}) is out of bounds")
            }
            Error::NoPatchesFit { width, height, patch_size } => {
                write!(f, "no {patch_size}x{patch_size} patch fits in a {width}x{height} plane")
            }
            Error::InvalidScore(m) => write!(f, "invalid frame score {m}"),
            Error::EmptySeries => f.write_str("score series is empty"),
        }
    }
}

impl core::error::Error for Error {}
