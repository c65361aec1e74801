use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("malformed partition: {0}")]
    MalformedPartition(String),

    #[error("genericity violation: {0}")]
    Genericity(String),

    #[error("partition is not critical: residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    NotCritical { residual: f64, threshold: f64 },

    #[error("boundary data incompatible with the resonant problem on subdomain {subdomain}: defect {defect:.3e} (tolerance {tolerance:.3e})")]
    Incompatible {
        subdomain: usize,
        defect: f64,
        tolerance: f64,
    },

    #[error("transverse wavenumber q = {q} is resonant; use the resonant block")]
    Resonant { q: usize },

    #[error("transverse wavenumber q = {q} is not resonant")]
    NotResonant { q: usize },

    #[error("q_max = {q_max} is below the certified-positivity cutoff {required}")]
    InsufficientCutoff { q_max: usize, required: usize },

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("assembly inconsistency: asymmetry {asymmetry:.3e} exceeds {limit:.3e}")]
    AssemblyInconsistency { asymmetry: f64, limit: f64 },

    #[error("ambiguous eigenvalue cluster: minimal label is {low} or {high}")]
    AmbiguousCluster { low: usize, high: usize },

    #[error("interfaces cross or touch at t = {t}, y = {y}")]
    OrderingViolation { t: f64, y: f64 },

    #[error("step size too large: 3-point and 5-point curvature estimates differ by {relative:.1}%")]
    StepSize { relative: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
