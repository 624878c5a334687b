use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spatial dimension must be 2 or 3, got {0}")]
    InvalidDimension(usize),

    #[error("refinement level {level} too large for dimension {dim} (max {max})")]
    LevelTooLarge { dim: usize, level: u32, max: u32 },

    #[error("polynomial degree must be 1 or 2, got {0}")]
    InvalidDegree(usize),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },

    #[error("matrix is not symmetric: max |K - K^T| = {asymmetry:e} exceeds {limit:e}")]
    NotSymmetric { asymmetry: f64, limit: f64 },

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:e})")]
    CgNotConverged { iterations: usize, residual: f64 },

    #[error("zero data: the source and initial data vanish")]
    ZeroData,

    #[error("dense problem of size {n} exceeds the configured cap {cap}")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("interpolation nodes are not distinct")]
    DuplicateNodes,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{phase}: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps `self` with the name of the pipeline phase that produced it.
    pub fn in_phase(self, phase: &'static str) -> Self {
        Error::Phase { phase, source: Box::new(self) }
    }

    /// Outermost phase label, if any.
    pub fn phase(&self) -> Option<&'static str> {
        match self {
            Error::Phase { phase, .. } => Some(phase),
            _ => None,
        }
    }

    /// Innermost error, looking through phase labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Phase { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn mismatch(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { context, expected, found }
    }
}
