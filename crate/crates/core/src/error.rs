use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("SVD did not converge after {sweeps} Jacobi sweeps")]
    SvdNonConvergence { sweeps: usize },

    #[error("characteristic roots are not distinct (min separation {separation:.3e})")]
    RepeatedRoots { separation: f64 },

    #[error("spectral parameter {lambda} is below the magnitude floor")]
    LambdaTooSmall { lambda: Complex64 },

    #[error("exponent real part {exponent:.1} at lambda = {lambda} overflows double precision")]
    ExponentOverflow { lambda: Complex64, exponent: f64 },

    #[error("boundary matrix is rank deficient (s_min / s_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("minor vector is identically zero")]
    ZeroMinorVector,

    #[error("pivot minor M_{pivot} is zero")]
    ZeroPivot { pivot: String },

    #[error("minor vector is not decomposable: round-trip deviation {deviation:.3e}")]
    InconsistentMinors { deviation: f64 },

    #[error("{found} eigenvalues supplied, at least {required} are required")]
    TooFewEigenvalues { found: usize, required: usize },

    #[error("eigenvalue #{index} ({lambda}) rejected: {source}")]
    EigenvalueRejected {
        index: usize,
        lambda: Complex64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("invalid search region: {0}")]
    InvalidRegion(String),
}
