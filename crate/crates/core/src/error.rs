use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("tensor is identically zero")]
    ZeroTensor,

    #[error("non-finite entry encountered")]
    NonFinite,

    #[error("matrix columns are not orthonormal (Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("term is not in HOSVD form: {0}")]
    NotHosvd(String),

    #[error("core is rank deficient in mode {mode}")]
    RankDeficientCore { mode: usize },

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("decomposition is ill-posed (sigma_min = {0:e})")]
    IllPosed(f64),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("degenerate random draw after {0} attempts")]
    DegenerateDraw(usize),

    #[error("iteration diverged (non-finite residual)")]
    Diverged,

    #[error("residual {residual:e} above filter threshold {threshold:e}")]
    ResidualAboveFilter { residual: f64, threshold: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
