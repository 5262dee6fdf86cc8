use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("structure tensor has wrong extent on axis {axis} (index {index}): expected {expected}, got {got}")]
    TensorShape {
        axis: usize,
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("invalid Lie algebra: antisymmetry residual {antisymmetry:e}, Jacobi residual {jacobi:e}")]
    InvalidAlgebra { antisymmetry: f64, jacobi: f64 },

    #[error("matrices do not represent the algebra: homomorphism residual {residual:e} exceeds {bound:e}")]
    NotARepresentation { residual: f64, bound: f64 },

    #[error("word letter {letter} out of range for dimension {dim}")]
    LetterOutOfRange { letter: usize, dim: usize },

    #[error("matrix exponential out of range: norm {norm:e}, logarithmic norm {log_norm:e}")]
    ExpRange { norm: f64, log_norm: f64 },

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("kernel invariance fails: operator maps kernel vector {kernel_index} out of the kernel (residual {residual:e})")]
    Kip { kernel_index: usize, residual: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("unknown fixture {name:?}; known fixtures: {known}")]
    UnknownFixture { name: String, known: String },

    #[error("problem spec error at {field}: {message}")]
    Spec { field: String, message: String },
}
