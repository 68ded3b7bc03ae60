//! Structured Tucker terms and their sums.

use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::linalg::{normalize_column_signs, numerical_rank, singular_values, thin_svd};
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::tensor::Tensor;
use crate::tucker::multilinear_rank;

/// Manifold a term's core is constrained to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoreStructure {
    /// Open set of full-multilinear-rank cores.
    #[serde(rename = "full")]
    FullRank,
    /// Nonzero scalar core; every `l_d` is 1.
    #[serde(rename = "rank1")]
    Rank1,
}

impl CoreStructure {
    /// Orthonormal basis of the core manifold's tangent space at `core`.
    pub fn tangent_basis<T: Real>(self, core: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        match self {
            CoreStructure::FullRank => {
                let dims = core.dims();
                let mut out = Vec::with_capacity(core.len());
                for k in 0..core.len() {
                    let mut data = vec![T::zero(); core.len()];
                    data[k] = T::one();
                    out.push(Tensor::new(dims.to_vec(), data)?);
                }
                Ok(out)
            }
            CoreStructure::Rank1 => {
                if core.dims().iter().any(|&l| l != 1) {
                    return Err(Error::InvalidDecomposition(format!(
                        "rank-1 structure with core dims {:?}",
                        core.dims()
                    )));
                }
                Ok(vec![Tensor::new(core.dims().to_vec(), vec![T::one()])?])
            }
        }
    }

    /// Dimension of the core manifold for core dims `l`.
    pub fn core_manifold_dim(self, l: &[usize]) -> usize {
        match self {
            CoreStructure::FullRank => l.iter().product(),
            CoreStructure::Rank1 => 1,
        }
    }
}

/// Free-function form of [`CoreStructure::tangent_basis`].
pub fn core_tangent_basis<T: Real>(structure: CoreStructure, core: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
    structure.tangent_basis(core)
}

/// One summand `(U_0, …, U_{D-1}) · C`.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerTerm<T> {
    factors: Vec<Matrix<T>>,
    core: Tensor<T>,
    structure: CoreStructure,
}

impl<T: Real> TuckerTerm<T> {
    /// Checks shapes only; rank conditions are reported by [`Sbtd::validate`].
    pub fn new(factors: Vec<Matrix<T>>, core: Tensor<T>, structure: CoreStructure) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::InvalidDecomposition(format!(
                "{} factors for an order-{} core",
                factors.len(),
                core.order()
            )));
        }
        for (d, u) in factors.iter().enumerate() {
            if u.cols() != core.dims()[d] {
                return Err(Error::InvalidDecomposition(format!(
                    "factor {d} has {} columns but core mode size is {}",
                    u.cols(),
                    core.dims()[d]
                )));
            }
            if u.rows() == 0 {
                return Err(Error::InvalidDecomposition(format!("factor {d} has no rows")));
            }
            if !u.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        if !core.is_finite() {
            return Err(Error::NonFinite);
        }
        if structure == CoreStructure::Rank1 && core.dims().iter().any(|&l| l != 1) {
            return Err(Error::InvalidDecomposition(format!(
                "rank-1 term with core dims {:?}",
                core.dims()
            )));
        }
        Ok(Self {
            factors,
            core,
            structure,
        })
    }

    /// Rank-1 term `λ · v_0 ⊗ … ⊗ v_{D-1}`.
    pub fn rank1(lambda: T, vectors: &[&[T]]) -> Result<Self> {
        let factors = vectors.iter().map(|v| Matrix::column(v)).collect();
        let core = Tensor::new(vec![1; vectors.len()], vec![lambda])?;
        Self::new(factors, core, CoreStructure::Rank1)
    }

    pub fn factors(&self) -> &[Matrix<T>] {
        &self.factors
    }

    pub fn core(&self) -> &Tensor<T> {
        &self.core
    }

    pub fn structure(&self) -> CoreStructure {
        self.structure
    }

    pub fn order(&self) -> usize {
        self.core.order()
    }

    pub fn ambient_dims(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    /// Core dims `(l_0, …, l_{D-1})`.
    pub fn core_dims(&self) -> &[usize] {
        self.core.dims()
    }

    pub fn into_parts(self) -> (Vec<Matrix<T>>, Tensor<T>, CoreStructure) {
        (self.factors, self.core, self.structure)
    }

    pub fn evaluate(&self) -> Result<Tensor<T>> {
        let mats: Vec<&Matrix<T>> = self.factors.iter().collect();
        self.core.multilinear(&mats)
    }

    /// Same term with every factor replaced by `q_d · U_d`.
    pub fn left_multiply(&self, q: &[Matrix<T>]) -> Result<Self> {
        if q.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for an order-{} term",
                q.len(),
                self.order()
            )));
        }
        let factors = q
            .iter()
            .zip(&self.factors)
            .map(|(q, u)| q.matmul(u))
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors, self.core.clone(), self.structure)
    }

    pub fn scale_core(&self, s: T) -> Self {
        Self {
            factors: self.factors.clone(),
            core: self.core.scale(s),
            structure: self.structure,
        }
    }

    /// Same tensor, with orthonormal factors and an all-orthogonal core.
    ///
    /// Each factor is reduced by a thin QR, `U_d = Q_d R_d`, the small core
    /// `(R_0, …, R_{D-1}) · C` is put in HOSVD form `(W_0, …) · S`, and the
    /// result is `(Q_0 W_0, …) · S`. The structure tag is kept because core
    /// structures are invariant under invertible per-mode maps.
    pub fn canonicalize_hosvd(&self) -> Result<Self> {
        let tol = T::rank_tol();
        let mut qs = Vec::with_capacity(self.order());
        let mut rs = Vec::with_capacity(self.order());
        for (d, u) in self.factors.iter().enumerate() {
            let s = singular_values(u)?;
            if numerical_rank(&s, tol) < u.cols() {
                return Err(Error::InvalidDecomposition(format!(
                    "factor {d} is not of full column rank"
                )));
            }
            let qr = u.to_faer().qr();
            qs.push(Matrix::from_faer(qr.compute_thin_Q().as_ref()));
            rs.push(Matrix::from_faer(qr.thin_R()));
        }
        let r_refs: Vec<&Matrix<T>> = rs.iter().collect();
        let small = self.core.multilinear(&r_refs)?;
        let mut factors = Vec::with_capacity(self.order());
        let mut w_t = Vec::with_capacity(self.order());
        for d in 0..self.order() {
            let svd = thin_svd(&small.unfold(d)?)?;
            let l = self.core.dims()[d];
            if numerical_rank(&svd.s, tol) < l {
                return Err(Error::RankDeficientCore { mode: d });
            }
            let mut w = svd.u;
            let mut f = qs[d].matmul(&w)?;
            let signs = normalize_column_signs(&mut f);
            for j in 0..l {
                if signs[j] < T::zero() {
                    for i in 0..l {
                        w[(i, j)] = -w[(i, j)];
                    }
                }
            }
            factors.push(f);
            w_t.push(w.transpose());
        }
        let w_refs: Vec<&Matrix<T>> = w_t.iter().collect();
        let core = small.multilinear(&w_refs)?;
        Self::new(factors, core, self.structure)
    }
}

/// Per-term findings of [`Sbtd::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermValidation {
    pub core_dims: Vec<usize>,
    pub factor_ranks: Vec<usize>,
    pub core_ranks: Vec<usize>,
    pub factors_full_rank: bool,
    pub core_full_rank: bool,
    pub structure_ok: bool,
}

impl TermValidation {
    pub fn is_valid(&self) -> bool {
        self.factors_full_rank && self.core_full_rank && self.structure_ok
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub terms: Vec<TermValidation>,
    pub sum_finite: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.sum_finite && self.terms.iter().all(TermValidation::is_valid)
    }

    /// Human-readable list of failed checks.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (r, t) in self.terms.iter().enumerate() {
            if !t.factors_full_rank {
                out.push(format!(
                    "term {r}: factor ranks {:?} below core dims {:?}",
                    t.factor_ranks, t.core_dims
                ));
            }
            if !t.core_full_rank {
                out.push(format!(
                    "term {r}: core multilinear rank {:?} below core dims {:?}",
                    t.core_ranks, t.core_dims
                ));
            }
            if !t.structure_ok {
                out.push(format!("term {r}: core does not conform to its structure"));
            }
        }
        if !self.sum_finite {
            out.push("sum of terms is not finite".into());
        }
        out
    }
}

/// Ordered list of terms sharing one ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct Sbtd<T> {
    dims: Vec<usize>,
    terms: Vec<TuckerTerm<T>>,
}

impl<T: Real> Sbtd<T> {
    pub fn new(terms: Vec<TuckerTerm<T>>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidDecomposition("a decomposition needs at least one term".into()))?;
        let dims = first.ambient_dims();
        for (r, t) in terms.iter().enumerate() {
            if t.ambient_dims() != dims {
                return Err(Error::InvalidDecomposition(format!(
                    "term {r} lives in {:?}, term 0 in {dims:?}",
                    t.ambient_dims()
                )));
            }
        }
        Ok(Self { dims, terms })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn terms(&self) -> &[TuckerTerm<T>] {
        &self.terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn into_terms(self) -> Vec<TuckerTerm<T>> {
        self.terms
    }

    pub fn evaluate_sum(&self) -> Result<Tensor<T>> {
        let mut acc = self.terms[0].evaluate()?;
        for t in &self.terms[1..] {
            acc = acc.add(&t.evaluate()?)?;
        }
        Ok(acc)
    }

    /// Checks factor column rank, core multilinear rank and structure
    /// conformance of every term, plus finiteness of the sum.
    pub fn validate(&self, rel_tol: T) -> ValidationReport {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let core_dims = t.core_dims().to_vec();
                let factor_ranks: Vec<usize> = t
                    .factors()
                    .iter()
                    .map(|u| singular_values(u).map_or(0, |s| numerical_rank(&s, rel_tol)))
                    .collect();
                let core_ranks = multilinear_rank(t.core(), rel_tol).unwrap_or_else(|_| vec![0; t.order()]);
                let structure_ok = match t.structure() {
                    CoreStructure::FullRank => true,
                    CoreStructure::Rank1 => {
                        core_dims.iter().all(|&l| l == 1) && t.core().data()[0] != T::zero()
                    }
                };
                TermValidation {
                    factors_full_rank: factor_ranks == core_dims,
                    core_full_rank: core_ranks == core_dims,
                    structure_ok,
                    core_dims,
                    factor_ranks,
                    core_ranks,
                }
            })
            .collect();
        let sum_finite = self.evaluate_sum().map(|s| s.is_finite()).unwrap_or(false);
        ValidationReport { terms, sum_finite }
    }

    /// Replaces every term by its HOSVD form.
    pub fn canonicalize(&self) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(TuckerTerm::canonicalize_hosvd)
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    /// Same decomposition with every factor replaced by `q_d · U_d`.
    pub fn left_multiply(&self, q: &[Matrix<T>]) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| t.left_multiply(q))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    /// Terms reordered so that term `r` of the result is `perm[r]` of self.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.terms.len()];
        if perm.len() != self.terms.len() || perm.iter().any(|&p| p >= seen.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidDecomposition(format!("{perm:?} is not a permutation")));
        }
        Self::new(perm.iter().map(|&p| self.terms[p].clone()).collect())
    }
}

/// `min_π sqrt(Σ_r ‖a_r − b_{π(r)}‖²)` over all term permutations.
pub fn forward_error<T: Real>(a: &Sbtd<T>, b: &Sbtd<T>) -> Result<T> {
    if a.num_terms() != b.num_terms() {
        return Err(Error::InvalidDecomposition(format!(
            "{} terms versus {}",
            a.num_terms(),
            b.num_terms()
        )));
    }
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!(
            "ambient dims {:?} versus {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let ea = a.terms().iter().map(TuckerTerm::evaluate).collect::<Result<Vec<_>>>()?;
    let eb = b.terms().iter().map(TuckerTerm::evaluate).collect::<Result<Vec<_>>>()?;
    let n = ea.len();
    let mut cost = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = ea[i].sub(&eb[j])?.norm();
            cost[(i, j)] = d * d;
        }
    }
    let (_, total) = min_cost_assignment(&cost);
    Ok(total.max(T::zero()).sqrt())
}
