use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input was NaN/infinite or outside the admissible family.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two states do not share atom-register or mode arity.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The state (or projected component) has numerically zero norm.
    #[error("degenerate state: squared norm {norm_sq:e}")]
    DegenerateState { norm_sq: f64 },

    /// A pulse or interaction targeted an atom/mode that is not present.
    #[error("protocol sequence error: {0}")]
    ProtocolSequence(String),

    /// The state cannot be written as a sum of two product blocks.
    #[error("structure error: {0}")]
    Structure(String),

    /// An input violated an operation's documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical consistency error: {0}")]
    NumericalConsistency(String),

    /// A reduced Wigner sum carried a non-negligible imaginary part.
    #[error("hermiticity error: imaginary residue {residue:e}")]
    Hermiticity { residue: f64 },

    #[error("truncation error: tail mass {tail:e} exceeds bound at n_max = {n_max}")]
    Truncation { tail: f64, n_max: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
