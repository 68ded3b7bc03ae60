//! Tangent-space bases, the Terracini matrix and condition numbers.
//!
//! For a term in HOSVD form `(U_0, …, U_{D-1}) · C`, the tangent space is
//! spanned by an orthonormal set of tensors: first `(U_0, …, U_{D-1}) · Ċ`
//! for every `Ċ` in the core structure's tangent basis, then for each mode
//! `d` (ascending), each core row `j` (outer) and each complement column `i`
//! (inner) the tensor
//!
//! ```text
//! (U_0, …, U⊥_d e_i e_jᵀ / σ_j^d, …, U_{D-1}) · C,   σ_j^d = ‖e_jᵀ C_(d)‖.
//! ```
//!
//! The Terracini matrix stacks these bases for all terms side by side and
//! the condition number is the reciprocal of its smallest singular value.

use std::ops::Range;
use std::time::{Duration, Instant};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, singular_values_faer, thin_q, RowBlockReducer};
use crate::matrix::Matrix;
use crate::model::{Sbtd, TuckerTerm};
use crate::scalar::Real;
use crate::serde_ext::extended_f64;
use crate::tensor::Tensor;
use crate::tucker::{all_orthogonality_deviation, core_row_norms, orthonormal_complement};

/// Above this many entries the Terracini matrix is never formed in one
/// piece; its row blocks are reduced to a triangular factor instead.
const DENSE_ENTRY_LIMIT: usize = 24 << 20;

/// Column counts of one term's tangent block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    /// Size of the core tangent basis.
    pub core: usize,
    /// `l_d (n_d − l_d)` per mode.
    pub modes: Vec<usize>,
}

impl BlockLayout {
    pub fn total(&self) -> usize {
        self.core + self.modes.iter().sum::<usize>()
    }
}

/// `[T_0 … T_{R-1}]` with the column range of every term recorded.
#[derive(Clone, Debug, PartialEq)]
pub struct TerraciniMatrix<T> {
    pub matrix: Matrix<T>,
    pub column_blocks: Vec<Range<usize>>,
    pub layouts: Vec<BlockLayout>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Direct,
    Compressed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `1/σ_min`, or `+∞` when the decomposition is ill-posed.
    #[serde(with = "extended_f64")]
    pub kappa: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Threshold below which `σ_min` counts as zero.
    pub abs_tol: f64,
    pub method: Method,
    pub ill_posed: bool,
    pub terracini_shape: (usize, usize),
    pub compressed_dims: Option<Vec<usize>>,
    pub wall_time: Duration,
}

/// One tangent tensor in factored form `(mats_0, …, mats_{D-1}) · core`.
struct TangentColumn<T> {
    mats: Vec<Matrix<T>>,
    core: Tensor<T>,
}

impl<T: Real> TangentColumn<T> {
    /// Entries whose mode-0 index lies in `rows`, in linear order.
    fn eval_rows(&self, rows: Range<usize>) -> Result<Vec<T>> {
        let mut mats: Vec<&Matrix<T>> = self.mats.iter().collect();
        let first = self.mats[0].row_range(rows);
        mats[0] = &first;
        Ok(self.core.multilinear(&mats)?.into_data())
    }
}

fn check_hosvd<T: Real>(term: &TuckerTerm<T>) -> Result<Vec<Vec<T>>> {
    let tol = T::orthonormal_tol();
    for (d, u) in term.factors().iter().enumerate() {
        let dev = u.gram_deviation();
        if !(dev <= tol) {
            return Err(Error::NotHosvd(format!(
                "factor {d} has Gram deviation {:e}",
                dev.to_f64_lossy()
            )));
        }
    }
    let core = term.core();
    let scale = core.norm() * core.norm();
    let dev = all_orthogonality_deviation(core)?;
    if !(dev <= tol * scale) {
        return Err(Error::NotHosvd(format!(
            "core all-orthogonality deviation {:e}",
            dev.to_f64_lossy()
        )));
    }
    let sigma = core_row_norms(core)?;
    for (d, s) in sigma.iter().enumerate() {
        let smax = s.iter().copied().fold(T::zero(), T::max);
        if smax == T::zero() || s.iter().any(|&x| x <= T::rank_tol() * smax) {
            return Err(Error::RankDeficientCore { mode: d });
        }
    }
    Ok(sigma)
}

/// Tangent columns of a term already in HOSVD form.
fn tangent_columns<T: Real>(term: &TuckerTerm<T>) -> Result<(Vec<TangentColumn<T>>, BlockLayout)> {
    let sigma = check_hosvd(term)?;
    let u = term.factors();
    let core = term.core();
    let mut cols = Vec::new();
    let core_basis = term.structure().tangent_basis(core)?;
    let core_count = core_basis.len();
    for c in core_basis {
        cols.push(TangentColumn {
            mats: u.to_vec(),
            core: c,
        });
    }
    let mut modes = Vec::with_capacity(term.order());
    for d in 0..term.order() {
        let perp = orthonormal_complement(&u[d])?;
        let l = u[d].cols();
        modes.push(l * perp.cols());
        for j in 0..l {
            let slice = core.slice_mode(d, j..j + 1)?.scale(T::one() / sigma[d][j]);
            for i in 0..perp.cols() {
                let mut mats = u.to_vec();
                mats[d] = Matrix::column(&perp.col(i));
                cols.push(TangentColumn {
                    mats,
                    core: slice.clone(),
                });
            }
        }
    }
    Ok((
        cols,
        BlockLayout {
            core: core_count,
            modes,
        },
    ))
}

/// Orthonormal basis of the tangent space at a term in HOSVD form, one
/// vectorized basis tensor per column.
pub fn term_tangent_basis<T: Real>(term: &TuckerTerm<T>) -> Result<Matrix<T>> {
    let (cols, _) = tangent_columns(term)?;
    let dims = term.ambient_dims();
    let m: usize = dims.iter().product();
    let mut out = Matrix::zeros(m, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.eval_rows(0..dims[0])?.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

fn all_columns<T: Real>(s: &Sbtd<T>) -> Result<(Vec<TangentColumn<T>>, Vec<BlockLayout>)> {
    let mut cols = Vec::new();
    let mut layouts = Vec::with_capacity(s.num_terms());
    for term in s.canonicalize()?.terms() {
        let (c, layout) = tangent_columns(term)?;
        cols.extend(c);
        layouts.push(layout);
    }
    Ok((cols, layouts))
}

/// Terracini matrix of `s`; every term is put in HOSVD form first.
pub fn assemble_terracini<T: Real>(s: &Sbtd<T>) -> Result<TerraciniMatrix<T>> {
    let (cols, layouts) = all_columns(s)?;
    let dims = s.dims();
    let m: usize = dims.iter().product();
    let mut matrix = Matrix::zeros(m, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.eval_rows(0..dims[0])?.into_iter().enumerate() {
            matrix[(i, j)] = v;
        }
    }
    let mut column_blocks = Vec::with_capacity(layouts.len());
    let mut start = 0;
    for l in &layouts {
        column_blocks.push(start..start + l.total());
        start += l.total();
    }
    Ok(TerraciniMatrix {
        matrix,
        column_blocks,
        layouts,
    })
}

/// `σ_{min(m,n)}` of a nonempty matrix.
pub fn sigma_min<T: Real>(m: &Matrix<T>) -> Result<T> {
    let s = singular_values(m)?;
    s.last().copied().ok_or(Error::EmptyMatrix)
}

fn fill_block<T: Real>(cols: &[TangentColumn<T>], rows: Range<usize>, block_rows: usize) -> Result<Mat<T>> {
    let mut mat = Mat::<T>::zeros(block_rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        let v = c.eval_rows(rows.clone())?;
        let dst = mat
            .as_mut()
            .col_mut(j)
            .try_as_col_major_mut()
            .expect("freshly allocated matrix is column-major")
            .as_slice_mut();
        dst.copy_from_slice(&v);
    }
    Ok(mat)
}

/// All singular values of the Terracini matrix of `s`, nonincreasing.
///
/// Returns the shape alongside. Large matrices are streamed in slabs of
/// mode-0 indices and never held in memory at once.
pub fn terracini_singular_values<T: Real>(s: &Sbtd<T>) -> Result<(Vec<T>, (usize, usize))> {
    let (cols, _) = all_columns(s)?;
    let dims = s.dims();
    let m: usize = dims.iter().product();
    let p = cols.len();
    let per_slab = m / dims[0];
    if m.saturating_mul(p) <= DENSE_ENTRY_LIMIT {
        let mat = fill_block(&cols, 0..dims[0], m)?;
        return Ok((singular_values_faer(&mat)?, (m, p)));
    }
    let slabs = (DENSE_ENTRY_LIMIT / per_slab.saturating_mul(p).max(1)).max(1);
    let mut reducer = RowBlockReducer::new(p);
    let mut start = 0;
    while start < dims[0] {
        let end = (start + slabs).min(dims[0]);
        reducer.push(fill_block(&cols, start..end, (end - start) * per_slab)?);
        start = end;
    }
    Ok((reducer.singular_values()?, (m, p)))
}

/// κ from the Terracini matrix of `s` itself.
///
/// `abs_tol` defaults to `ill_posed_tol · σ_max`. A Terracini matrix with
/// more columns than rows has a nontrivial kernel and is reported as
/// ill-posed with `σ_min = 0`.
pub fn condition_direct<T: Real>(s: &Sbtd<T>, abs_tol: Option<T>) -> Result<ConditionReport> {
    let start = Instant::now();
    let mut report = direct_report(s, abs_tol)?;
    report.wall_time = start.elapsed();
    Ok(report)
}

fn direct_report<T: Real>(s: &Sbtd<T>, abs_tol: Option<T>) -> Result<ConditionReport> {
    let (sv, (m, p)) = terracini_singular_values(s)?;
    let sigma_max = sv[0];
    let sigma_min = if p > m { T::zero() } else { sv[p - 1] };
    let tol = abs_tol.unwrap_or_else(|| T::ill_posed_tol() * sigma_max);
    let ill_posed = !(sigma_min >= tol) || sigma_min == T::zero();
    let kappa = if ill_posed {
        f64::INFINITY
    } else {
        (T::one() / sigma_min).to_f64_lossy()
    };
    Ok(ConditionReport {
        kappa,
        sigma_min: sigma_min.to_f64_lossy(),
        sigma_max: sigma_max.to_f64_lossy(),
        abs_tol: tol.to_f64_lossy(),
        method: Method::Direct,
        ill_posed,
        terracini_shape: (m, p),
        compressed_dims: None,
        wall_time: Duration::ZERO,
    })
}

/// Compresses every mode onto the span of the stacked factors
/// `[U_d^0 … U_d^{R-1}]` when that stack has fewer columns than `n_d`.
///
/// Returns the compressed decomposition and the orthonormal `Q_d` used per
/// mode (the identity for skipped modes).
pub fn compress_sbtd<T: Real>(s: &Sbtd<T>) -> Result<(Sbtd<T>, Vec<Matrix<T>>)> {
    let mut qs = Vec::with_capacity(s.order());
    for d in 0..s.order() {
        let blocks: Vec<&Matrix<T>> = s.terms().iter().map(|t| &t.factors()[d]).collect();
        let stacked = Matrix::hstack(&blocks)?;
        let q = if stacked.cols() < s.dims()[d] {
            thin_q(&stacked)
        } else {
            Matrix::identity(s.dims()[d])
        };
        qs.push(q);
    }
    let qt: Vec<Matrix<T>> = qs.iter().map(Matrix::transpose).collect();
    Ok((s.left_multiply(&qt)?, qs))
}

/// κ computed on the Tucker-compressed decomposition.
pub fn condition_compressed<T: Real>(s: &Sbtd<T>, abs_tol: Option<T>) -> Result<ConditionReport> {
    let start = Instant::now();
    let (compressed, _) = compress_sbtd(s)?;
    let mut report = direct_report(&compressed, abs_tol)?;
    report.method = Method::Compressed;
    report.compressed_dims = Some(compressed.dims().to_vec());
    report.wall_time = start.elapsed();
    Ok(report)
}

/// `1/σ_min([U_0^r ⊗ … ⊗ U_{D-1}^r]_r)` after canonicalization, a lower
/// bound on κ for block term decompositions. `+∞` when singular.
pub fn btd_lower_bound<T: Real>(s: &Sbtd<T>) -> Result<T> {
    let canon = s.canonicalize()?;
    let blocks = canon
        .terms()
        .iter()
        .map(|t| {
            let refs: Vec<&Matrix<T>> = t.factors().iter().collect();
            Matrix::kron_all(&refs)
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Matrix<T>> = blocks.iter().collect();
    let k = Matrix::hstack(&refs)?;
    if k.cols() > k.rows() {
        return Ok(T::infinity());
    }
    let sv = singular_values(&k)?;
    let smin = sv[sv.len() - 1];
    if smin < T::ill_posed_tol() * sv[0] || smin == T::zero() {
        Ok(T::infinity())
    } else {
        Ok(T::one() / smin)
    }
}

/// True iff `col(U_d^{r1}) ⊥ col(U_d^{r2})` within `tol` for every mode and
/// every pair of distinct terms.
pub fn check_pairwise_orthogonal<T: Real>(s: &Sbtd<T>, tol: T) -> bool {
    let bases: Vec<Vec<Matrix<T>>> = s
        .terms()
        .iter()
        .map(|t| t.factors().iter().map(thin_q).collect())
        .collect();
    for d in 0..s.order() {
        for a in 0..bases.len() {
            for b in a + 1..bases.len() {
                let cross = bases[a][d].transpose().matmul(&bases[b][d]);
                match cross {
                    Ok(c) if c.max_abs() <= tol => {}
                    _ => return false,
                }
            }
        }
    }
    true
}

/// Moves every term of `s` along its own tangent space.
///
/// `s` is canonicalized first and `coeffs` are coordinates in the column
/// basis of its Terracini matrix: core coefficients are added to the core
/// along the core tangent basis, and the coefficient `x` of column
/// `(d, j, i)` adds `x · U⊥_d e_i e_jᵀ / σ_j^d` to factor `d`. To first
/// order the change of term `r` equals `T_r x_r`.
pub fn perturb_along_tangent<T: Real>(s: &Sbtd<T>, coeffs: &[T]) -> Result<Sbtd<T>> {
    let canon = s.canonicalize()?;
    let mut offset = 0;
    let mut terms = Vec::with_capacity(canon.num_terms());
    for term in canon.terms() {
        let sigma = check_hosvd(term)?;
        let basis = term.structure().tangent_basis(term.core())?;
        let mut factors = term.factors().to_vec();
        let mut core = term.core().clone();
        let need = offset + basis.len();
        if coeffs.len() < need {
            return Err(Error::DimensionMismatch(format!("{} coefficients, need more", coeffs.len())));
        }
        for b in &basis {
            core = core.add(&b.scale(coeffs[offset]))?;
            offset += 1;
        }
        for d in 0..term.order() {
            let u = &term.factors()[d];
            let perp = orthonormal_complement(u)?;
            for j in 0..u.cols() {
                for i in 0..perp.cols() {
                    let x = *coeffs
                        .get(offset)
                        .ok_or_else(|| Error::DimensionMismatch(format!("{} coefficients, need more", coeffs.len())))?;
                    offset += 1;
                    for a in 0..u.rows() {
                        factors[d][(a, j)] = factors[d][(a, j)] + x * perp[(a, i)] / sigma[d][j];
                    }
                }
            }
        }
        terms.push(TuckerTerm::new(factors, core, term.structure())?);
    }
    if offset != coeffs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {offset} tangent columns",
            coeffs.len()
        )));
    }
    Sbtd::new(terms)
}

/// Leading-order operation counts with unit constants, for a decomposition
/// with `r` terms of uniform multilinear rank `l` in `n^D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub direct: f64,
    pub compressed: f64,
}

impl CostModel {
    pub fn ratio(&self) -> f64 {
        self.direct / self.compressed
    }
}

pub fn cost_model(n: usize, order: usize, r: usize, l: usize) -> CostModel {
    let (n, dd, r, l) = (n as f64, order as f64, r as f64, l as f64);
    let d = order as i32;
    let direct = n.powi(d) * r * r * l.powi(2 * d) + n.powi(d) * r * r * dd * dd * l * l * (n - l).powi(2);
    let compressed = dd * n * r * r * l * l + r.powi(d + 2) * l.powi(3 * d) + r.powi(d + 4) * l.powi(d + 4) * dd * dd;
    CostModel { direct, compressed }
}
