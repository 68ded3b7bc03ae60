//! Thin wrappers over `faer` factorizations, expressed in terms of [`Matrix`].

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Thin SVD `A = U diag(s) Vᵀ`, singular values in nonincreasing order.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: Matrix<T>,
    pub s: Vec<T>,
    pub v: Matrix<T>,
}

pub fn thin_svd<T: Real>(a: &Matrix<T>) -> Result<Svd<T>> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let svd = a
        .to_faer()
        .thin_svd()
        .map_err(|e| Error::Linalg(format!("svd did not converge: {e:?}")))?;
    let s = svd.S().column_vector().iter().copied().collect();
    Ok(Svd {
        u: Matrix::from_faer(svd.U()),
        s,
        v: Matrix::from_faer(svd.V()),
    })
}

/// Singular values in nonincreasing order.
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Result<Vec<T>> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    singular_values_faer(&a.to_faer())
}

pub(crate) fn singular_values_faer<T: Real>(a: &Mat<T>) -> Result<Vec<T>> {
    let mut s = a
        .singular_values()
        .map_err(|e| Error::Linalg(format!("svd did not converge: {e:?}")))?;
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    Ok(s)
}

/// Counts singular values above `rel_tol · s[0]`; `s` must be sorted.
pub fn numerical_rank<T: Real>(s: &[T], rel_tol: T) -> usize {
    match s.first() {
        Some(&smax) if smax > T::zero() => s.iter().take_while(|&&x| x > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Flips column signs so that each column's largest-magnitude entry is
/// positive (ties go to the lowest row index). Returns the applied signs.
pub fn normalize_column_signs<T: Real>(u: &mut Matrix<T>) -> Vec<T> {
    let mut signs = Vec::with_capacity(u.cols());
    for j in 0..u.cols() {
        let mut best = 0;
        let mut best_abs = T::zero();
        for i in 0..u.rows() {
            let a = u[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        let s = if u.rows() > 0 && u[(best, j)] < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        if s < T::zero() {
            for i in 0..u.rows() {
                u[(i, j)] = -u[(i, j)];
            }
        }
        signs.push(s);
    }
    signs
}

/// Orthonormal basis of the column space of a full-column-rank matrix
/// (the Q factor of its thin QR decomposition).
pub fn thin_q<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    if a.cols() == 0 {
        return Matrix::zeros(a.rows(), 0);
    }
    Matrix::from_faer(a.to_faer().qr().compute_thin_Q().as_ref())
}

/// Square orthogonal Q factor of the full QR decomposition.
pub fn full_q<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    if a.cols() == 0 {
        return Matrix::identity(a.rows());
    }
    Matrix::from_faer(a.to_faer().qr().compute_Q().as_ref())
}

/// Least-squares solution of `a x ≈ b` for a full-column-rank `a`.
pub fn lstsq<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "lstsq with {} rows and rhs of length {}",
            a.rows(),
            b.len()
        )));
    }
    if a.rows() < a.cols() {
        return Err(Error::DimensionMismatch("lstsq needs rows >= cols".into()));
    }
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = a.to_faer().qr().solve_lstsq(&rhs);
    Ok((0..a.cols()).map(|i| x[(i, 0)]).collect())
}

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky.
pub(crate) fn solve_spd<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| Error::Linalg(format!("cholesky failed: {e:?}")))?;
    Ok(llt.solve(b))
}

/// Eigenvalues of a symmetric matrix in nondecreasing order.
pub fn symmetric_eigenvalues<T: Real>(a: &Matrix<T>) -> Result<Vec<T>> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
    }
    if a.rows() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut e = a
        .to_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("eigensolver failed: {e:?}")))?;
    e.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(e)
}

/// Reduces a tall matrix, fed as consecutive row blocks, to its triangular
/// QR factor. The singular values of the factor are those of the full
/// matrix, so arbitrarily tall matrices can be handled in bounded memory.
pub(crate) struct RowBlockReducer<T: Real> {
    cols: usize,
    r: Option<Mat<T>>,
}

impl<T: Real> RowBlockReducer<T> {
    pub fn new(cols: usize) -> Self {
        Self { cols, r: None }
    }

    pub fn push(&mut self, block: Mat<T>) {
        assert_eq!(block.ncols(), self.cols);
        let stacked = match self.r.take() {
            None => block,
            Some(r) => {
                let (rr, br) = (r.nrows(), block.nrows());
                Mat::from_fn(rr + br, self.cols, |i, j| {
                    if i < rr {
                        r[(i, j)]
                    } else {
                        block[(i - rr, j)]
                    }
                })
            }
        };
        let r = if stacked.nrows() > self.cols {
            stacked.qr().thin_R().to_owned()
        } else {
            stacked
        };
        self.r = Some(r);
    }

    /// Singular values of everything pushed so far, nonincreasing.
    pub fn singular_values(&self) -> Result<Vec<T>> {
        match &self.r {
            None => Err(Error::EmptyMatrix),
            Some(r) => singular_values_faer(r),
        }
    }
}
