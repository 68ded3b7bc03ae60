//! Synthetic instances and the harnesses that exercise them.

mod fit;
mod generators;
mod probe;

pub use fit::{
    error_bound_check, fit_btd, jacobian, pack_parameters, parameter_count, unpack_parameters, FitResult,
    RESIDUAL_FILTER,
};
pub use generators::{
    gen_illcond_btd, gen_invariance_case, gen_random_sbtd, perturb_factors, IllCondInstance, IllCondParams,
    InvarianceCase,
};
pub use probe::{perturbation_probe, ProbeResult};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::thin_q;
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::tensor::Tensor;

/// The generator every seeded routine draws from.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn normal<T: Real>(rng: &mut ChaCha8Rng) -> T {
    let x: f64 = StandardNormal.sample(rng);
    T::lit(x)
}

pub(crate) fn normal_vec<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| normal(rng)).collect()
}

pub(crate) fn normal_matrix<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| normal(rng))
}

pub(crate) fn normal_tensor<T: Real>(rng: &mut ChaCha8Rng, dims: &[usize]) -> crate::Result<Tensor<T>> {
    let len = dims.iter().product();
    Tensor::new(dims.to_vec(), normal_vec(rng, len))
}

/// Q factor of a standard normal draw.
pub(crate) fn random_orthonormal<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<T> {
    thin_q(&normal_matrix(rng, rows, cols))
}
