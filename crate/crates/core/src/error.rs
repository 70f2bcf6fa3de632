use std::path::PathBuf;

use num_complex::Complex64;

/// Everything that can go wrong in the library.
///
/// Variants split into two families: precondition violations (the caller
/// asked for something the mathematics does not allow) and numerical
/// failures (a solver or tracer gave up). [`Error::is_precondition`] tells
/// them apart, which the CLI maps onto distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid angle: {0}")]
    InvalidAngle(String),

    #[error("root solver did not converge (worst residual {worst_residual:e})")]
    SolverFailure { worst_residual: f64 },

    #[error("period {period} exceeds the supported maximum {max}")]
    UnsupportedPeriod { period: u32, max: u32 },

    #[error("point {0} lies in the filled Julia set at working depth")]
    PointInsideK(Complex64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Böttcher branch tracking is ambiguous at depth {depth}; potential too low")]
    BranchTracking { depth: usize },

    #[error("could not seed a ray at angle {angle} (last tried potential {potential})")]
    SeedFailure { angle: f64, potential: f64 },

    #[error("trace failed at potential {potential:e} near {point}: {reason}")]
    TraceFailure {
        potential: f64,
        point: Complex64,
        reason: String,
    },

    #[error("ambiguous capture at potential {potential:e}: {count} singularities within capture radius")]
    AmbiguousCapture { potential: f64, count: usize },

    #[error("one-sided limit did not settle at angle {angle}: {reason}")]
    BrokenTraceFailure { angle: f64, reason: String },

    #[error("{0} is not a singularity of the Green's function")]
    NotASingularity(Complex64),

    #[error("no partner found at singularity {0}")]
    NoPartner(Complex64),

    #[error("trace does not reach the crash at potential {0:e}; lower s_lo")]
    TraceDepth(f64),

    #[error("inconsistent partner angle at step {step}: geometric {geometric}, combinatorial {combinatorial}")]
    Inconsistency {
        step: usize,
        geometric: String,
        combinatorial: String,
    },

    #[error("limit angle unresolved: {0}")]
    LimitUnresolved(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("raster resolution too coarse: {0}")]
    RasterTooCoarse(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("encoding error: {0}")]
    Encoding(String),
}

impl Error {
    /// True for errors that signal a violated precondition rather than a
    /// numerical breakdown.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidPolynomial(_)
                | Error::InvalidAngle(_)
                | Error::UnsupportedPeriod { .. }
                | Error::PointInsideK(_)
                | Error::Domain(_)
                | Error::NotASingularity(_)
                | Error::Precondition(_)
        )
    }

    pub(crate) fn trace(potential: f64, point: Complex64, reason: impl Into<String>) -> Self {
        Error::TraceFailure {
            potential,
            point,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
