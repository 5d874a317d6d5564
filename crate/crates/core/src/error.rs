//! Crate-wide error type with the exit-code classes used by the CLI.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // --- validation (CLI exit code 1) ---
    #[error("scenario schema violation: {0}")]
    SchemaViolation(String),
    #[error("C*B is singular on interval starting at t={at}s (station {station}); the steering law needs an invertible C*B")]
    CbSingular { station: char, at: f64 },
    #[error("C is not full rank on interval starting at t={at}s (station {station})")]
    CNotFullRank { station: char, at: f64 },
    #[error("initial condition violates C0*xhat0=0 for station {station}: |C0*x0| = {norm}")]
    InitialConditionViolatesHold { station: char, norm: f64 },
    #[error("non-symmetric matrix: |m[{i}][{j}] - m[{j}][{i}]| = {delta} exceeds tolerance")]
    NotSymmetric { i: usize, j: usize, delta: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("time {t} outside schedule range [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    // --- numeric fatals (CLI exit code 2) ---
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("singular innovation matrix C*Sigma*C' + R")]
    SingularInnovation,
    #[error("covariance lost positive definiteness at t={t}s; shrink dt or check conditioning")]
    CovariancePdLoss { t: f64 },
    #[error("sigma = {sigma} left the value-table grid range [{lo}, {hi}]")]
    GridRange { sigma: f64, lo: f64, hi: f64 },
    #[error("survival factor went negative at t={t}s (eps*(nu_a+nu_b) = {mass} >= 0.5); shrink the backward time step")]
    StepSizeTooLarge { t: f64, mass: f64 },

    // --- i/o ---
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code class: 1 validation, 2 numeric fatal.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            SchemaViolation(_)
            | CbSingular { .. }
            | CNotFullRank { .. }
            | InitialConditionViolatesHold { .. }
            | NotSymmetric { .. }
            | DimensionMismatch(_)
            | Domain(_)
            | TimeOutOfRange { .. }
            | Io(_)
            | Json(_) => 1,
            NotPositiveDefinite(_)
            | SingularInnovation
            | CovariancePdLoss { .. }
            | GridRange { .. }
            | StepSizeTooLarge { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
