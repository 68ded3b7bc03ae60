//! Orthogonal Tucker machinery: HOSVD, sequentially truncated compression,
//! multilinear rank and orthonormal complements.

use crate::error::{Error, Result};
use crate::linalg::{full_q, normalize_column_signs, numerical_rank, singular_values, thin_svd};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::tensor::Tensor;

/// `t = (U_0, …, U_{D-1}) · core` with orthonormal factors.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerFactorization<T> {
    pub factors: Vec<Matrix<T>>,
    pub core: Tensor<T>,
    /// Row norms `‖e_jᵀ core_(d)‖` of each core unfolding, per mode.
    pub mode_singular_values: Vec<Vec<T>>,
}

impl<T: Real> TuckerFactorization<T> {
    pub fn reconstruct(&self) -> Result<Tensor<T>> {
        let mats: Vec<&Matrix<T>> = self.factors.iter().collect();
        self.core.multilinear(&mats)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.dims().to_vec()
    }
}

fn check_input<T: Real>(t: &Tensor<T>) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    if t.max_abs() == T::zero() {
        return Err(Error::ZeroTensor);
    }
    Ok(())
}

/// Leading left singular vectors of `m` above `rel_tol · σ_max`, with the
/// crate's sign convention applied.
fn dominant_subspace<T: Real>(m: &Matrix<T>, rel_tol: T) -> Result<Matrix<T>> {
    let svd = thin_svd(m)?;
    let r = numerical_rank(&svd.s, rel_tol);
    if r == 0 {
        return Err(Error::ZeroTensor);
    }
    let mut u = svd.u.columns(0..r);
    normalize_column_signs(&mut u);
    Ok(u)
}

pub(crate) fn core_row_norms<T: Real>(core: &Tensor<T>) -> Result<Vec<Vec<T>>> {
    (0..core.order())
        .map(|d| {
            let m = core.unfold(d)?;
            Ok((0..m.rows())
                .map(|i| m.row(i).iter().map(|&x| x * x).sum::<T>().sqrt())
                .collect())
        })
        .collect()
}

/// Compact HOSVD: every factor comes from the SVD of the corresponding
/// unfolding of `t` itself.
pub fn compact_hosvd<T: Real>(t: &Tensor<T>, rel_tol: T) -> Result<TuckerFactorization<T>> {
    check_input(t)?;
    let factors = (0..t.order())
        .map(|d| dominant_subspace(&t.unfold(d)?, rel_tol))
        .collect::<Result<Vec<_>>>()?;
    let transposed: Vec<Matrix<T>> = factors.iter().map(Matrix::transpose).collect();
    let refs: Vec<&Matrix<T>> = transposed.iter().collect();
    let core = t.multilinear(&refs)?;
    let mode_singular_values = core_row_norms(&core)?;
    Ok(TuckerFactorization {
        factors,
        core,
        mode_singular_values,
    })
}

/// Sequentially truncated HOSVD, modes processed in ascending order. Each
/// SVD acts on the partially compressed core.
pub fn minimal_compress<T: Real>(t: &Tensor<T>, rel_tol: T) -> Result<TuckerFactorization<T>> {
    check_input(t)?;
    let mut core = t.clone();
    let mut factors = Vec::with_capacity(t.order());
    for d in 0..t.order() {
        let u = dominant_subspace(&core.unfold(d)?, rel_tol)?;
        core = core.mode_product(d, &u.transpose())?;
        factors.push(u);
    }
    let mode_singular_values = core_row_norms(&core)?;
    Ok(TuckerFactorization {
        factors,
        core,
        mode_singular_values,
    })
}

/// Per-mode numerical rank; the zero tensor has rank zero in every mode.
pub fn multilinear_rank<T: Real>(t: &Tensor<T>, rel_tol: T) -> Result<Vec<usize>> {
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    if t.max_abs() == T::zero() {
        return Ok(vec![0; t.order()]);
    }
    (0..t.order())
        .map(|d| Ok(numerical_rank(&singular_values(&t.unfold(d)?)?, rel_tol)))
        .collect()
}

/// Orthonormal basis of the orthogonal complement of `col(u)`.
pub fn orthonormal_complement<T: Real>(u: &Matrix<T>) -> Result<Matrix<T>> {
    if u.rows() < u.cols() {
        return Err(Error::InvalidShape(format!(
            "{}x{} matrix cannot have orthonormal columns",
            u.rows(),
            u.cols()
        )));
    }
    let dev = u.gram_deviation();
    if !(dev <= T::orthonormal_tol()) {
        return Err(Error::NotOrthonormal(dev.to_f64_lossy()));
    }
    if u.rows() == u.cols() {
        return Ok(Matrix::zeros(u.rows(), 0));
    }
    let mut perp = full_q(u).columns(u.cols()..u.rows());
    normalize_column_signs(&mut perp);
    Ok(perp)
}

/// Largest off-diagonal entry of `unfold(core, d) · unfold(core, d)ᵀ`, over
/// all modes.
pub fn all_orthogonality_deviation<T: Real>(core: &Tensor<T>) -> Result<T> {
    let mut worst = T::zero();
    for d in 0..core.order() {
        let g = core.unfold(d)?.transpose().gram();
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                if i != j {
                    worst = worst.max(g[(i, j)].abs());
                }
            }
        }
    }
    Ok(worst)
}
