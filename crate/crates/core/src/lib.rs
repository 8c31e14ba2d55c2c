//! Quantum stationary Gaussian time series.
//!
//! Spectral densities `a(ω) ≥ 1` generate Toeplitz symbols `A_n(a)` of
//! gauge-invariant Gaussian states. The crate computes relative entropies
//! between such states, simulates the commuting number-operator measurement
//! exactly, implements the preliminary and one-step estimators of a
//! `d`-dependent density, and audits the finite-`n` distance bounds that
//! underlie asymptotic equivalence with geometric regression and white noise.
//!
//! All computations are symbol-level: Fock-space density operators are never
//! materialised.

pub mod cli;
pub mod distributions;
pub mod estimators;
pub mod experiments;
pub mod gaussian_states;
pub mod harness;
mod linalg;
pub mod measurement;
pub mod spectral;
pub mod toeplitz;

pub use num_complex::Complex64;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("Hermitian symmetry violated at lag {lag}: {detail}")]
    HermitianSymmetryViolation { lag: i64, detail: String },

    #[error("matrix is not circulant: {0}")]
    NotCirculant(String),

    #[error("dimension mismatch: {0}")]
    DimensionError(String),

    #[error("argument out of range: {0}")]
    RangeError(String),

    #[error("state not faithful: lambda_min(A) - 1 = {margin:.3e}")]
    NotFaithful { margin: f64 },

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("spectrum outside the admissible interval: {0}")]
    SpectralRangeError(String),

    #[error("matrix not positive semidefinite: {0}")]
    NotPSD(String),

    #[error("sample size too small: {0}")]
    TooSmall(String),

    #[error("parameter not admissible: {0}")]
    NotAdmissible(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular system (condition number {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("replicate {replicate} failed: {source}")]
    Replicate {
        replicate: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotFaithful { .. }
            | Error::EigenFailure(_)
            | Error::NonConvergence { .. }
            | Error::SingularSystem { .. }
            | Error::DegenerateSamples(_) => true,
            Error::Replicate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// Short machine-readable variant name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::HermitianSymmetryViolation { .. } => "HermitianSymmetryViolation",
            Error::NotCirculant(_) => "NotCirculant",
            Error::DimensionError(_) => "DimensionError",
            Error::RangeError(_) => "RangeError",
            Error::NotFaithful { .. } => "NotFaithful",
            Error::EigenFailure(_) => "EigenFailure",
            Error::SpectralRangeError(_) => "SpectralRangeError",
            Error::NotPSD(_) => "NotPSD",
            Error::TooSmall(_) => "TooSmall",
            Error::NotAdmissible(_) => "NotAdmissible",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::SingularSystem { .. } => "SingularSystem",
            Error::DegenerateSamples(_) => "DegenerateSamples",
            Error::Replicate { source, .. } => source.kind(),
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
