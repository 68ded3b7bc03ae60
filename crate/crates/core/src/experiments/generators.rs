use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{normal, normal_matrix, normal_tensor, random_orthonormal, seeded_rng};
use crate::condition::condition_direct;
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, singular_values};
use crate::matrix::Matrix;
use crate::model::{CoreStructure, Sbtd, TuckerTerm};
use crate::scalar::Real;
use crate::tensor::Tensor;
use crate::tucker::multilinear_rank;

const MAX_DRAWS: usize = 100;

/// Parameters of the two-term family whose blocks drift apart like `1/N`
/// while their weights grow like `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IllCondParams {
    pub n: f64,
    /// Dims of the shared core `C`.
    pub core_dims: Vec<usize>,
    /// Ambient dims of the uninflated decomposition (rows of `A_d`, `B_d`).
    pub dims: Vec<usize>,
    pub inflated_dims: Vec<usize>,
    pub seed: u64,
}

impl IllCondParams {
    pub fn new(n: f64, seed: u64) -> Self {
        Self {
            n,
            seed,
            ..Self::default()
        }
    }
}

impl Default for IllCondParams {
    fn default() -> Self {
        Self {
            n: 10.0,
            core_dims: vec![2, 2, 1],
            dims: vec![4, 4, 2],
            inflated_dims: vec![60, 40, 40],
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IllCondInstance<T> {
    /// `(B_d + A_d/N)_d · (N C)` and `(B_d)_d · (−N C)`.
    pub core: Sbtd<T>,
    /// `core` with every factor left-multiplied by `q[d]`.
    pub inflated: Sbtd<T>,
    pub a: Vec<Matrix<T>>,
    pub b: Vec<Matrix<T>>,
    pub c: Tensor<T>,
    pub q: Vec<Matrix<T>>,
}

fn full_column_rank<T: Real>(u: &Matrix<T>) -> bool {
    singular_values(u).is_ok_and(|s| numerical_rank(&s, T::rank_tol()) == u.cols())
}

fn full_multilinear_rank<T: Real>(c: &Tensor<T>) -> bool {
    multilinear_rank(c, T::rank_tol()).is_ok_and(|r| r == c.dims())
}

pub fn gen_illcond_btd<T: Real>(p: &IllCondParams) -> Result<IllCondInstance<T>> {
    let order = p.core_dims.len();
    if order == 0 || p.dims.len() != order || p.inflated_dims.len() != order {
        return Err(Error::Infeasible(format!(
            "core dims {:?}, dims {:?} and inflated dims {:?} must have one equal nonzero length",
            p.core_dims, p.dims, p.inflated_dims
        )));
    }
    if !(p.n >= 1.0) || !p.n.is_finite() {
        return Err(Error::Infeasible(format!("N = {} must be finite and at least 1", p.n)));
    }
    for d in 0..order {
        let (l, m, n) = (p.core_dims[d], p.dims[d], p.inflated_dims[d]);
        if l == 0 || l > m || m > n {
            return Err(Error::Infeasible(format!(
                "mode {d}: need 1 <= core {l} <= dims {m} <= inflated {n}"
            )));
        }
        let others: usize = p.core_dims.iter().enumerate().filter(|&(e, _)| e != d).map(|(_, &x)| x).product();
        if l > others {
            return Err(Error::Infeasible(format!(
                "mode {d}: core size {l} exceeds the product {others} of the other core sizes"
            )));
        }
    }
    let n = T::lit(p.n);
    let mut rng = seeded_rng(p.seed);
    for _ in 0..MAX_DRAWS {
        let c: Tensor<T> = normal_tensor(&mut rng, &p.core_dims)?;
        let a: Vec<Matrix<T>> = (0..order).map(|d| normal_matrix(&mut rng, p.dims[d], p.core_dims[d])).collect();
        let b: Vec<Matrix<T>> = (0..order)
            .map(|d| random_orthonormal(&mut rng, p.dims[d], p.core_dims[d]))
            .collect();
        let q: Vec<Matrix<T>> = (0..order)
            .map(|d| random_orthonormal(&mut rng, p.inflated_dims[d], p.dims[d]))
            .collect();
        let shifted = a
            .iter()
            .zip(&b)
            .map(|(a, b)| b.add(&a.scale(T::one() / n)))
            .collect::<Result<Vec<_>>>()?;
        if !full_multilinear_rank(&c)
            || !shifted.iter().all(full_column_rank)
            || !b.iter().all(full_column_rank)
        {
            continue;
        }
        let t1 = TuckerTerm::new(shifted, c.scale(n), CoreStructure::FullRank)?;
        let t2 = TuckerTerm::new(b.clone(), c.scale(-n), CoreStructure::FullRank)?;
        let core = Sbtd::new(vec![t1, t2])?;
        let inflated = core.left_multiply(&q)?;
        return Ok(IllCondInstance {
            core,
            inflated,
            a,
            b,
            c,
            q,
        });
    }
    Err(Error::DegenerateDraw(MAX_DRAWS))
}

/// Random decomposition with independent orthonormal factors per term and
/// standard normal cores of full multilinear rank.
pub fn gen_random_sbtd<T: Real>(
    dims: &[usize],
    structures: &[CoreStructure],
    ranks: &[Vec<usize>],
    seed: u64,
) -> Result<Sbtd<T>> {
    let mut rng = seeded_rng(seed);
    random_sbtd(&mut rng, dims, structures, ranks)
}

fn random_sbtd<T: Real>(
    rng: &mut ChaCha8Rng,
    dims: &[usize],
    structures: &[CoreStructure],
    ranks: &[Vec<usize>],
) -> Result<Sbtd<T>> {
    if structures.is_empty() || structures.len() != ranks.len() {
        return Err(Error::Infeasible(format!(
            "{} structures for {} rank tuples",
            structures.len(),
            ranks.len()
        )));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Infeasible(format!("ambient dims {dims:?}")));
    }
    for (r, (st, l)) in structures.iter().zip(ranks).enumerate() {
        if l.len() != dims.len() {
            return Err(Error::Infeasible(format!("term {r}: ranks {l:?} for dims {dims:?}")));
        }
        if *st == CoreStructure::Rank1 && l.iter().any(|&x| x != 1) {
            return Err(Error::Infeasible(format!("term {r}: rank-1 term with ranks {l:?}")));
        }
        for d in 0..dims.len() {
            let others: usize = l.iter().enumerate().filter(|&(e, _)| e != d).map(|(_, &x)| x).product();
            if l[d] == 0 || l[d] > dims[d] || l[d] > others {
                return Err(Error::Infeasible(format!(
                    "term {r}: rank {:?} not realizable in {dims:?}",
                    l
                )));
            }
        }
    }
    let mut terms = Vec::with_capacity(structures.len());
    for (st, l) in structures.iter().zip(ranks) {
        let factors: Vec<Matrix<T>> = (0..dims.len()).map(|d| random_orthonormal(rng, dims[d], l[d])).collect();
        let mut core = None;
        for _ in 0..MAX_DRAWS {
            let c: Tensor<T> = normal_tensor(rng, l)?;
            if full_multilinear_rank(&c) {
                core = Some(c);
                break;
            }
        }
        let core = core.ok_or(Error::DegenerateDraw(MAX_DRAWS))?;
        terms.push(TuckerTerm::new(factors, core, *st)?);
    }
    Sbtd::new(terms)
}

/// A random decomposition together with an inflated copy living in a larger
/// ambient space, `inflated = (Q_0, …, Q_{D-1}) · core` term by term.
#[derive(Clone, Debug)]
pub struct InvarianceCase<T> {
    pub kind: String,
    pub core: Sbtd<T>,
    pub inflated: Sbtd<T>,
}

fn terracini_cols(dims: &[usize], ranks: &[Vec<usize>], structures: &[CoreStructure]) -> usize {
    ranks
        .iter()
        .zip(structures)
        .map(|(l, st)| st.core_manifold_dim(l) + l.iter().zip(dims).map(|(&l, &n)| l * (n - l)).sum::<usize>())
        .sum()
}

/// Third-order test instance drawn from a mix of families: CPDs of rank 2
/// to 4, block terms with (2,2,1) or (2,2,2) blocks, and block terms mixed
/// with rank-1 terms. Core dims stay at most 6, inflated dims at most 60.
/// Draws whose core decomposition is ill-posed are discarded.
pub fn gen_invariance_case<T: Real>(seed: u64) -> Result<InvarianceCase<T>> {
    let mut rng = seeded_rng(seed);
    for _ in 0..MAX_DRAWS {
        let kind = rng.random_range(0..4u32);
        let (name, structures, ranks): (&str, Vec<CoreStructure>, Vec<Vec<usize>>) = match kind {
            0 => {
                let r = rng.random_range(2..=4usize);
                ("cpd", vec![CoreStructure::Rank1; r], vec![vec![1, 1, 1]; r])
            }
            1 => {
                let r = rng.random_range(2..=3usize);
                ("btd221", vec![CoreStructure::FullRank; r], vec![vec![2, 2, 1]; r])
            }
            2 => ("btd222", vec![CoreStructure::FullRank; 2], vec![vec![2, 2, 2]; 2]),
            _ => {
                let extra = rng.random_range(1..=2usize);
                let mut st = vec![CoreStructure::FullRank];
                let mut rk = vec![vec![2, 2, 1]];
                st.extend(std::iter::repeat_n(CoreStructure::Rank1, extra));
                rk.extend(std::iter::repeat_n(vec![1, 1, 1], extra));
                ("mixed", st, rk)
            }
        };
        let lmax: Vec<usize> = (0..3).map(|d| ranks.iter().map(|l| l[d]).max().unwrap_or(1)).collect();
        // a mode of size l_d would be spanned by every block of that size at
        // once, which makes the decomposition ill-posed
        let core_dims: Vec<usize> = lmax
            .iter()
            .map(|&l| rng.random_range(if l > 1 { l + 1 } else { 2 }..=6))
            .collect();
        let rows: usize = core_dims.iter().product();
        if terracini_cols(&core_dims, &ranks, &structures) >= rows {
            continue;
        }
        let long = rng.random_range(0..3usize);
        let mut inflated_dims: Vec<usize> = core_dims
            .iter()
            .enumerate()
            .map(|(d, &m)| if d == long { rng.random_range(m..=60) } else { m + rng.random_range(0..=3) })
            .collect();
        while inflated_dims.iter().product::<usize>() > 4000 {
            let d = (0..3).max_by_key(|&d| inflated_dims[d] - core_dims[d]).unwrap_or(0);
            if inflated_dims[d] == core_dims[d] {
                break;
            }
            inflated_dims[d] -= 1;
        }
        let core = random_sbtd::<T>(&mut rng, &core_dims, &structures, &ranks)?;
        if condition_direct(&core, None)?.ill_posed {
            continue;
        }
        let q: Vec<Matrix<T>> = (0..3)
            .map(|d| random_orthonormal(&mut rng, inflated_dims[d], core_dims[d]))
            .collect();
        let inflated = core.left_multiply(&q)?;
        return Ok(InvarianceCase {
            kind: name.to_string(),
            core,
            inflated,
        });
    }
    Err(Error::DegenerateDraw(MAX_DRAWS))
}

/// Adds independent Gaussian noise of relative size `rel` to every factor
/// and core of `s`.
pub fn perturb_factors<T: Real>(s: &Sbtd<T>, rel: T, seed: u64) -> Result<Sbtd<T>> {
    let mut rng = seeded_rng(seed);
    let terms = s
        .terms()
        .iter()
        .map(|t| {
            let factors = t
                .factors()
                .iter()
                .map(|u| {
                    let scale = rel * u.frobenius_norm() / T::lit((u.data().len() as f64).sqrt());
                    let noise = Matrix::from_fn(u.rows(), u.cols(), |_, _| normal::<T>(&mut rng) * scale);
                    u.add(&noise)
                })
                .collect::<Result<Vec<_>>>()?;
            let c = t.core();
            let scale = rel * c.norm() / T::lit((c.len() as f64).sqrt());
            let noise = Tensor::from_fn(c.dims(), |_| normal::<T>(&mut rng) * scale)?;
            TuckerTerm::new(factors, c.add(&noise)?, t.structure())
        })
        .collect::<Result<Vec<_>>>()?;
    Sbtd::new(terms)
}
