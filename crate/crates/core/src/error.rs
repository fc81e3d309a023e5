use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size mismatch: expected {expected} entries, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("potential value at site {site} is not finite ({value})")]
    NonFinitePotential { site: usize, value: f64 },

    #[error("field tensor is not skew-symmetric: B[{row}][{col}] = {upper}, B[{col}][{row}] = {lower}")]
    NotSkewSymmetric { row: usize, col: usize, upper: f64, lower: f64 },

    #[error("field tensor has dimension {found}, box has dimension {expected}")]
    FieldDimension { expected: usize, found: usize },

    #[error("magnetic translations need a periodic box")]
    NotPeriodic,

    #[error(
        "incommensurate flux in plane ({axis_a},{axis_b}): {what} = {value:.6}, \
         must be an integer multiple of the flux quantum {quantum:.6}"
    )]
    IncommensurateFlux { axis_a: usize, axis_b: usize, what: &'static str, value: f64, quantum: f64 },

    #[error("shift has {found} components, box has dimension {expected}")]
    ShiftDimension { expected: usize, found: usize },

    #[error("eigensolver did not converge for eigenvalue index {index}")]
    NoConvergence { index: usize },

    #[error("matrix entry ({row},{col}) is not finite")]
    NonFiniteMatrix { row: usize, col: usize },

    #[error("matrix must be square and non-empty")]
    EmptyMatrix,

    #[error("near-singular pivot at energy {energy}; retry with the energy shifted by {suggested_shift:e}")]
    NearSingularPivot { energy: f64, suggested_shift: f64 },

    #[error("energy {energy} lies within {distance:e} of an eigenvalue (guard {guard:e}); perturb it")]
    NearEigenvalue { energy: f64, distance: f64, guard: f64 },

    #[error("profile has infinite support radius")]
    InfiniteSupport,

    #[error("Poisson intensity must be nonnegative, got {0}")]
    NegativeIntensity(f64),

    #[error("covariance embedding failed: spectral mode {mode} has value {value:e} (tolerance {tolerance:e})")]
    EmbeddingFailure { mode: usize, value: f64, tolerance: f64 },

    #[error("operation not available for the {kind} ensemble: {reason}")]
    UnsupportedEnsemble { kind: &'static str, reason: String },

    #[error("test function is not finite at atom location {location}")]
    NonFiniteIntegrand { location: f64 },

    #[error("transform argument z = {re} + {im}i must be off the real axis")]
    RealArgument { re: f64, im: f64 },

    #[error("realization {index}: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn in_realization(self, index: usize) -> Self {
        Error::Realization { index, source: Box::new(self) }
    }
}
