use thiserror::Error;

/// Errors raised by the solvers, audits and configuration layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Array shapes or grids that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// A physical or numerical parameter outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An iterative solver ran out of iterations.
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    /// A factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    /// The explicit advective part would violate its CFL bound.
    #[error("time step {dt:.3e} rejected by CFL bound; max admissible dt is {max_dt:.3e}")]
    StepRejected { dt: f64, max_dt: f64 },

    /// The coupling fixed-point iteration did not settle.
    #[error("Picard iteration did not converge in {iterations} iterations (last contraction factor {factor:.3e}, increment {increment:.3e})")]
    Picard { iterations: usize, factor: f64, increment: f64 },

    /// A dense spectral computation found an inadmissible spectrum.
    #[error("spectral error: {0}")]
    Spectral(String),

    /// An audited invariant was violated.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Configuration file problems; `line` is 1-based, 0 when not tied to a line.
    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Parameter(_) => 2,
            Error::Convergence { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::StepRejected { .. }
            | Error::Picard { .. }
            | Error::Spectral(_) => 3,
            Error::Invariant(_) => 4,
            Error::Structural(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
