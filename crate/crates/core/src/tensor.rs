//! Dense order-D tensors and the multilinear kernels built on them.
//!
//! Storage is "last index fastest": the entry at `(i_0, …, i_{D-1})` lives at
//! offset `Σ_d i_d · ∏_{d' > d} n_{d'}`. The mode-`d` unfolding is the
//! `n_d × ∏_{d'≠d} n_{d'}` matrix whose columns enumerate the remaining modes
//! in ascending order, last mode fastest. With this convention
//!
//! ```text
//! unfold((U_0, …, U_{D-1})·C, d) = U_d · unfold(C, d) · (⊗_{d'≠d} U_{d'})ᵀ
//! ```
//!
//! holds with the Kronecker product taken in ascending mode order.
//!
//! Mode indices are zero-based throughout the crate.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidShape("tensor order must be at least 1".into()));
    }
    if let Some(d) = dims.iter().position(|&n| n == 0) {
        return Err(Error::InvalidShape(format!("dimension {d} is zero")));
    }
    dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).ok_or_else(|| {
        Error::InvalidShape(format!("element count of {dims:?} overflows"))
    })
}

impl<T: Real> Tensor<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if data.len() != len {
            return Err(Error::InvalidShape(format!(
                "dims {dims:?} need {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = checked_len(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![T::zero(); len],
        })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len = checked_len(dims)?;
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for d in (0..dims.len()).rev() {
                idx[d] += 1;
                if idx[d] < dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    /// Tensor holding a single unit entry at `index`.
    pub fn unit(dims: &[usize], index: &[usize]) -> Result<Self> {
        let mut t = Self::zeros(dims)?;
        let off = t.offset(index)?;
        t.data[off] = T::one();
        Ok(t)
    }

    /// Outer product `v_0 ⊗ v_1 ⊗ …`.
    pub fn outer(vectors: &[&[T]]) -> Result<Self> {
        let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
        checked_len(&dims)?;
        let mut data = vec![T::one()];
        for v in vectors {
            let mut next = Vec::with_capacity(data.len() * v.len());
            for &a in &data {
                next.extend(v.iter().map(|&b| a * b));
            }
            data = next;
        }
        Ok(Self { dims, data })
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "index of length {} for order-{} tensor",
                index.len(),
                self.order()
            )));
        }
        let mut off = 0;
        for (d, (&i, &n)) in index.iter().zip(&self.dims).enumerate() {
            if i >= n {
                return Err(Error::DimensionMismatch(format!(
                    "index {i} out of range {n} in mode {d}"
                )));
            }
            off = off * n + i;
        }
        Ok(off)
    }

    pub fn get(&self, index: &[usize]) -> Result<T> {
        Ok(self.data[self.offset(index)?])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// `(∏_{d'<d} n_{d'}, n_d, ∏_{d'>d} n_{d'})`.
    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let left = self.dims[..mode].iter().product();
        let right = self.dims[mode + 1..].iter().product();
        (left, self.dims[mode], right)
    }

    pub fn unfold(&self, mode: usize) -> Result<Matrix<T>> {
        self.check_mode(mode)?;
        let (left, n, right) = self.split(mode);
        let cols = left * right;
        let mut out = vec![T::zero(); n * cols];
        for l in 0..left {
            for i in 0..n {
                let src = &self.data[(l * n + i) * right..(l * n + i + 1) * right];
                out[i * cols + l * right..i * cols + (l + 1) * right].copy_from_slice(src);
            }
        }
        Matrix::new(n, cols, out)
    }

    /// Inverse of [`Tensor::unfold`].
    pub fn fold(m: &Matrix<T>, mode: usize, dims: &[usize]) -> Result<Self> {
        let len = checked_len(dims)?;
        if mode >= dims.len() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: dims.len(),
            });
        }
        let n = dims[mode];
        if m.rows() != n || m.rows() * m.cols() != len {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix cannot fold into mode {mode} of {dims:?}",
                m.rows(),
                m.cols()
            )));
        }
        let left: usize = dims[..mode].iter().product();
        let right: usize = dims[mode + 1..].iter().product();
        let cols = m.cols();
        let src = m.data();
        let mut data = vec![T::zero(); len];
        for l in 0..left {
            for i in 0..n {
                data[(l * n + i) * right..(l * n + i + 1) * right]
                    .copy_from_slice(&src[i * cols + l * right..i * cols + (l + 1) * right]);
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    /// `fold(m · unfold(self, mode))`: applies `m` along one mode.
    pub fn mode_product(&self, mode: usize, m: &Matrix<T>) -> Result<Self> {
        self.check_mode(mode)?;
        let (left, n, right) = self.split(mode);
        if m.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "mode-{mode} product with {}x{} matrix, mode size {n}",
                m.rows(),
                m.cols()
            )));
        }
        let p = m.rows();
        let mut dims = self.dims.clone();
        dims[mode] = p;
        checked_len(&dims)?;
        let mut data = vec![T::zero(); left * p * right];
        for l in 0..left {
            for a in 0..p {
                let out = &mut data[(l * p + a) * right..(l * p + a + 1) * right];
                for (i, &coef) in m.row(a).iter().enumerate() {
                    if coef == T::zero() {
                        continue;
                    }
                    let src = &self.data[(l * n + i) * right..(l * n + i + 1) * right];
                    for (o, &s) in out.iter_mut().zip(src) {
                        *o = *o + coef * s;
                    }
                }
            }
        }
        Ok(Self { dims, data })
    }

    /// Multilinear multiplication `(M_0, …, M_{D-1}) · self`.
    ///
    /// Modes that shrink are applied first, which keeps intermediates small
    /// when expanding a core into a larger ambient space.
    pub fn multilinear(&self, mats: &[&Matrix<T>]) -> Result<Self> {
        if mats.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for order-{} tensor",
                mats.len(),
                self.order()
            )));
        }
        for (d, m) in mats.iter().enumerate() {
            if m.cols() != self.dims[d] {
                return Err(Error::DimensionMismatch(format!(
                    "matrix {d} has {} columns, mode size {}",
                    m.cols(),
                    self.dims[d]
                )));
            }
        }
        let mut order: Vec<usize> = (0..mats.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = mats[a].rows() as f64 / mats[a].cols() as f64;
            let rb = mats[b].rows() as f64 / mats[b].cols() as f64;
            ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut out = self.clone();
        for d in order {
            out = out.mode_product(d, mats[d])?;
        }
        Ok(out)
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "inner product of {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "sum of {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "difference of {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Sub-tensor with mode `mode` restricted to `range`.
    pub fn slice_mode(&self, mode: usize, range: std::ops::Range<usize>) -> Result<Self> {
        self.check_mode(mode)?;
        let (left, n, right) = self.split(mode);
        if range.end > n || range.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "slice {range:?} of mode {mode} with size {n}"
            )));
        }
        let mut dims = self.dims.clone();
        dims[mode] = range.len();
        let mut data = Vec::with_capacity(left * range.len() * right);
        for l in 0..left {
            data.extend_from_slice(&self.data[(l * n + range.start) * right..(l * n + range.end) * right]);
        }
        Ok(Self { dims, data })
    }
}
