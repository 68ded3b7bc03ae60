//! Independent reference implementations used as oracles. Nothing here
//! calls into the library's factorizations.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbtd::{CoreStructure, DenseMatrix, DenseTensor, Sbtd, TuckerTerm};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform(-1, 1) entries; good enough for generic instances.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> DenseTensor {
    DenseTensor::from_fn(dims, |_| rng.random_range(-1.0..1.0)).unwrap()
}

/// Classical Gram–Schmidt with one reorthogonalization pass.
pub fn gram_schmidt(m: &DenseMatrix) -> DenseMatrix {
    let basis = orthonormal_span(&(0..m.cols()).map(|j| m.col(j)).collect::<Vec<_>>(), 0.0);
    assert_eq!(basis.len(), m.cols(), "input columns are dependent");
    columns_to_matrix(&basis, m.rows())
}

/// Orthonormal basis of the span of `vectors`, dropping any vector whose
/// component outside the current span is below `drop_tol` times its norm.
pub fn orthonormal_span(vectors: &[Vec<f64>], drop_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let norm0 = dot(v, v).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let n = dot(&w, &w).sqrt();
        if n > drop_tol * norm0 {
            basis.push(w.iter().map(|x| x / n).collect());
        }
    }
    basis
}

pub fn columns_to_matrix(cols: &[Vec<f64>], rows: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = a.to_rows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-32 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// `σ_min` of a tall matrix as `sqrt(λ_min(AᵀA))`.
pub fn sigma_min_via_gram(a: &DenseMatrix) -> f64 {
    let g = DenseMatrix::from_fn(a.cols(), a.cols(), |i, j| {
        (0..a.rows()).map(|k| a[(k, i)] * a[(k, j)]).sum()
    });
    jacobi_eigenvalues(&g)[0].max(0.0).sqrt()
}

/// All singular values of a small matrix via the Gram matrix, descending.
pub fn singular_values_via_gram(a: &DenseMatrix) -> Vec<f64> {
    let g = DenseMatrix::from_fn(a.cols(), a.cols(), |i, j| {
        (0..a.rows()).map(|k| a[(k, i)] * a[(k, j)]).sum()
    });
    let mut s: Vec<f64> = jacobi_eigenvalues(&g).into_iter().map(|x| x.max(0.0).sqrt()).collect();
    s.reverse();
    s
}

/// `(U_0, U_1, U_2) · C` for an order-3 core by explicit summation.
pub fn naive_multilinear3(u: &[&DenseMatrix], c: &DenseTensor) -> DenseTensor {
    let l = c.dims();
    let dims = [u[0].rows(), u[1].rows(), u[2].rows()];
    DenseTensor::from_fn(&dims, |i| {
        let mut acc = 0.0;
        for a in 0..l[0] {
            for b in 0..l[1] {
                for e in 0..l[2] {
                    acc += u[0][(i[0], a)] * u[1][(i[1], b)] * u[2][(i[2], e)] * c.get(&[a, b, e]).unwrap();
                }
            }
        }
        acc
    })
    .unwrap()
}

/// Basis of the tangent space of an order-3 term from raw derivatives of
/// the parametrization `(U_0, U_1, U_2) · C` (or `λ u ⊗ v ⊗ w`), evaluated
/// by nested loops and orthonormalized by Gram–Schmidt.
pub fn naive_term_tangent(term: &TuckerTerm<f64>) -> Vec<Vec<f64>> {
    let u: Vec<&DenseMatrix> = term.factors().iter().collect();
    let c = term.core();
    let mut raw = Vec::new();
    for d in 0..3 {
        for a in 0..u[d].rows() {
            for b in 0..u[d].cols() {
                let mut e = DenseMatrix::zeros(u[d].rows(), u[d].cols());
                e[(a, b)] = 1.0;
                let mut mats = u.clone();
                mats[d] = &e;
                raw.push(naive_multilinear3(&mats, c).into_data());
            }
        }
    }
    for k in 0..c.len() {
        let mut data = vec![0.0; c.len()];
        data[k] = 1.0;
        let unit = DenseTensor::new(c.dims().to_vec(), data).unwrap();
        raw.push(naive_multilinear3(&u, &unit).into_data());
    }
    orthonormal_span(&raw, 1e-9)
}

/// Expected tangent dimension of a term.
pub fn tangent_dim(term: &TuckerTerm<f64>) -> usize {
    let l = term.core_dims();
    let n = term.ambient_dims();
    let core = match term.structure() {
        CoreStructure::FullRank => l.iter().product(),
        CoreStructure::Rank1 => 1,
    };
    core + l.iter().zip(&n).map(|(&l, &n)| l * (n - l)).sum::<usize>()
}

/// Term with orthonormal factors drawn by Gram–Schmidt and a uniform core.
pub fn random_term(rng: &mut ChaCha8Rng, dims: &[usize], l: &[usize], structure: CoreStructure) -> TuckerTerm<f64> {
    let factors = dims
        .iter()
        .zip(l)
        .map(|(&n, &l)| gram_schmidt(&random_matrix(rng, n, l)))
        .collect();
    let core = random_tensor(rng, l);
    TuckerTerm::new(factors, core, structure).unwrap()
}

/// Term with generic non-orthonormal factors.
pub fn skewed_term(rng: &mut ChaCha8Rng, dims: &[usize], l: &[usize], structure: CoreStructure) -> TuckerTerm<f64> {
    let factors = dims.iter().zip(l).map(|(&n, &l)| random_matrix(rng, n, l)).collect();
    let core = random_tensor(rng, l);
    TuckerTerm::new(factors, core, structure).unwrap()
}

pub fn random_btd(rng: &mut ChaCha8Rng, dims: &[usize], blocks: &[Vec<usize>]) -> Sbtd<f64> {
    Sbtd::new(
        blocks
            .iter()
            .map(|l| skewed_term(rng, dims, l, CoreStructure::FullRank))
            .collect(),
    )
    .unwrap()
}

pub fn random_cpd(rng: &mut ChaCha8Rng, dims: &[usize], rank: usize) -> Sbtd<f64> {
    let ones = vec![1; dims.len()];
    Sbtd::new(
        (0..rank)
            .map(|_| skewed_term(rng, dims, &ones, CoreStructure::Rank1))
            .collect(),
    )
    .unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn e(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Random orthogonal `n × n` matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    gram_schmidt(&random_matrix(rng, n, n))
}

pub fn max_abs_diff(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.sub(b).unwrap().max_abs()
}
