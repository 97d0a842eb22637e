use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("point {t} lies outside the admissible interval {domain}")]
    Domain { t: f64, domain: String },

    #[error("degenerate operator: {0}")]
    DegenerateOperator(String),

    #[error("time-factor diagonalization failed (residual {residual:.3e})")]
    Diagonalization { residual: f64 },

    #[error("eigensolver did not converge: {0}")]
    Eigensolver(String),

    #[error("shifted solve failed for eigenvalue #{index} (lambda = {lambda})")]
    ShiftSolve { index: usize, lambda: Complex64 },

    #[error("singular system in z(mu) at mu = {mu}")]
    Singular { mu: Complex64 },

    #[error("near-singular prediction: |2 - omega z| = {denominator:.3e}")]
    NearSingularPrediction { denominator: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("inner solve did not converge at Newton step {step} ({iterations} GMRES iterations)")]
    InnerSolve { step: usize, iterations: usize },

    #[error("Newton iteration diverged at step {step}")]
    Divergence { step: usize },

    #[error("dense problem too large: {size} > {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
