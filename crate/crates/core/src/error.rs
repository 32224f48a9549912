use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the chaos algebra, lifting, Wiener-algebra and filter layers.
#[derive(Debug, Error)]
pub enum WnsError {
    #[error("weight overflows f64 range (log value {log_value})")]
    WeightOverflow { log_value: f64 },

    #[error("series defining A(gap) diverges for gap = {gap} (need gap >= 2)")]
    DivergentSeries { gap: i64 },

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("truncated basis has {size} elements, above the cap of {cap}")]
    TruncationTooLarge { size: usize, cap: usize },

    #[error("chaos variable {position} exceeds the {num_vars} variables of the truncation")]
    VariableOutOfRange { position: u32, num_vars: u32 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{num_points} circle samples alias a series of band {band}")]
    AliasingRisk { num_points: usize, band: usize },

    #[error("lag-0 coefficient is singular")]
    SingularLeadCoefficient,

    #[error("symbol is not Hermitian on the circle (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("symbol is not positive definite on the circle (min eigenvalue {min_eigenvalue:e}, margin {margin:e})")]
    NotPositive { min_eigenvalue: f64, margin: f64 },

    #[error("spectral factorization did not converge after {iterations} iterations (defect {defect:e})")]
    NoConvergence { iterations: usize, defect: f64 },

    #[error("process is not wide-sense stationary (spread {spread:e} > tol {tol:e})")]
    NotStationary { spread: f64, tol: f64 },

    #[error("correlation mass {mass:e} beyond lag band {band} exceeds tolerance {tol:e}")]
    TailTooHeavy { mass: f64, band: usize, tol: f64 },

    #[error("modulation |lambda| = {modulus} is not unimodular")]
    NonUnimodularModulation { modulus: f64 },

    #[error("processes have no joint correlation model: {0}")]
    IncompatibleSources(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<WnsError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = WnsError> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            already @ WnsError::Stage { .. } => already,
            other => WnsError::Stage {
                stage,
                source: Box::new(other),
            },
        })
    }
}
