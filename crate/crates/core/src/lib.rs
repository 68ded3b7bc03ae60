//! Condition numbers of structured block term decompositions.
//!
//! A decomposition `A = A_0 + … + A_{R-1}` whose summands are Tucker terms
//! with structured cores (full-multilinear-rank blocks, rank-1 scalars, or a
//! mix) has condition number `1/σ_min` of its Terracini matrix. That number
//! is unchanged when every factor is first compressed onto the span of the
//! stacked factors of its mode, which [`condition_compressed`] exploits.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`, which is what the numerical tolerances are tuned for.

pub mod assignment;
pub mod condition;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod scalar;
pub mod serde_ext;
pub mod tensor;
pub mod tucker;

pub use condition::{
    assemble_terracini, btd_lower_bound, check_pairwise_orthogonal, compress_sbtd, condition_compressed,
    condition_direct, cost_model, perturb_along_tangent, sigma_min, term_tangent_basis, terracini_singular_values,
    ConditionReport, CostModel, Method, TerraciniMatrix,
};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{core_tangent_basis, forward_error, CoreStructure, Sbtd, TuckerTerm, ValidationReport};
pub use scalar::Real;
pub use tensor::Tensor;
pub use tucker::{compact_hosvd, minimal_compress, multilinear_rank, orthonormal_complement, TuckerFactorization};

pub type DenseTensor = Tensor<f64>;
pub type DenseMatrix = Matrix<f64>;
pub type Term = TuckerTerm<f64>;
pub type Decomposition = Sbtd<f64>;
pub type Terracini = TerraciniMatrix<f64>;
pub type Tucker = TuckerFactorization<f64>;

pub type DenseTensor32 = Tensor<f32>;
pub type DenseMatrix32 = Matrix<f32>;
pub type Decomposition32 = Sbtd<f32>;
