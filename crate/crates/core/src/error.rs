use thiserror::Error;

/// Errors produced by access structures, sketches, transforms, and pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("all-zero input: no sampling distribution exists")]
    ZeroNorm,
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("operation requires a dynamic handle")]
    StaticHandle,
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("bound does not dominate entry at index {index}: |bound| = {bound}, |value| = {value}")]
    BoundViolation {
        index: usize,
        bound: f64,
        value: f64,
    },
    #[error("rejection sampling exhausted after {rounds} rounds")]
    RejectionExhausted { rounds: usize },
    #[error("exact cancellation: combination has zero norm, oversampling ratio is infinite")]
    ExactCancellation,
    #[error("norm of the queried operand is unknown and no upper bound was supplied")]
    MissingNormBound,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("sketch sizes r={r}, c={c} violate the smoothness-radius constraint (need radius > {eps_bar:.3e}, have {radius:.3e})")]
    SketchTooSmall {
        r: usize,
        c: usize,
        eps_bar: f64,
        radius: f64,
    },
    #[error("matrix failed the Hermitian spot-check at ({i},{j})")]
    NotHermitian { i: usize, j: usize },
    #[error("degenerate spectrum: window around eigenvalue {index} captured {count} singular values")]
    DegenerateSpectrum { index: usize, count: usize },
    #[error("no singular values above threshold {threshold}")]
    EmptyFactor { threshold: f64 },
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
