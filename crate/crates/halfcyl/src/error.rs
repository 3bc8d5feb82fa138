use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("radius {r} outside admissible window [{lo}, {hi}] at band {k}")]
    RadiusOutOfWindow { r: f64, lo: f64, hi: f64, k: u64 },

    #[error("no admissible sphere radius among {tried} candidates")]
    NoAdmissibleRadius { tried: usize },

    #[error("level crossing not found after {attempts} bracketing attempts")]
    LevelNotFound { attempts: usize },

    #[error("mask selects no interior nodes: {0}")]
    EmptyMask(String),

    #[error("no convergence after {max_iter} iterations, relative residual {residual_rel:.3e}")]
    NonConvergence {
        max_iter: u64,
        residual_rel: f64,
        /// Best iterate seen, so callers can still inspect the failed solve.
        best: Vec<f64>,
    },

    #[error("insufficient band coverage: {0}")]
    InsufficientBand(String),

    #[error("point outside solved band: {0}")]
    OutOfBand(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("bad config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
