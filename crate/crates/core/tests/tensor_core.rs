mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use sbtd::linalg::singular_values;
use sbtd::{compact_hosvd, DenseMatrix, DenseTensor, Matrix, Tensor};

#[test]
fn unfold_first_mode_of_counting_tensor() {
    let t = DenseTensor::from_fn(&[2, 2, 2], |i| (4 * i[0] + 2 * i[1] + i[2] + 1) as f64).unwrap();
    let m = t.unfold(0).unwrap();
    assert_eq!(m.to_rows(), vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]]);
}

#[test]
fn hosvd_satisfies_unfolding_identity() {
    let mut r = rng(1);
    let t = random_tensor(&mut r, &[3, 4, 5]);
    let h = compact_hosvd(&t, 1e-10).unwrap();
    let u = &h.factors;
    let kron = Matrix::kron(&u[0], &u[2]).unwrap();
    let rhs = u[1]
        .matmul(&h.core.unfold(1).unwrap())
        .unwrap()
        .matmul(&kron.transpose())
        .unwrap();
    // elementwise oracle for the left side
    let lhs = DenseMatrix::from_fn(4, 15, |j, col| t.get(&[col / 5, j, col % 5]).unwrap());
    assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * t.norm());
}

#[test]
fn fold_round_trip_on_ill_conditioned_instance() {
    let inst = sbtd::experiments::gen_illcond_btd::<f64>(&sbtd::experiments::IllCondParams::new(10.0, 3)).unwrap();
    let t = inst.core.evaluate_sum().unwrap();
    assert_eq!(t.dims(), &[4, 4, 2]);
    assert_eq!(Tensor::fold(&t.unfold(2).unwrap(), 2, t.dims()).unwrap(), t);
}

#[test]
fn kron_singular_values_are_products() {
    let mut r = rng(2);
    let a = random_matrix(&mut r, 3, 2);
    let b = random_matrix(&mut r, 2, 2);
    let mut expected: Vec<f64> = Vec::new();
    for x in singular_values_via_gram(&a) {
        for y in singular_values_via_gram(&b) {
            expected.push(x * y);
        }
    }
    expected.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let got = singular_values(&Matrix::kron(&a, &b).unwrap()).unwrap();
    assert_eq!(got.len(), 4);
    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() <= 1e-12 * expected[0]);
    }
}

#[test]
fn multilinear_on_rank_one_input() {
    let mut r = rng(3);
    let v: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let m: Vec<DenseMatrix> = (0..3).map(|_| random_matrix(&mut r, 4, 3)).collect();
    let t = DenseTensor::outer(&[v[0].as_slice(), &v[1], &v[2]]).unwrap();
    let refs: Vec<&DenseMatrix> = m.iter().collect();
    let got = t.multilinear(&refs).unwrap();
    let mv: Vec<Vec<f64>> = (0..3).map(|d| m[d].matmul(&Matrix::column(&v[d])).unwrap().into_data()).collect();
    let expected = DenseTensor::outer(&[mv[0].as_slice(), &mv[1], &mv[2]]).unwrap();
    assert!(max_abs_diff(&got, &expected) <= 1e-14 * expected.max_abs().max(1.0));
}

#[test]
fn multilinear_matches_nested_loops() {
    let mut r = rng(4);
    let c = random_tensor(&mut r, &[3, 3, 3]);
    let m: Vec<DenseMatrix> = (0..3).map(|_| random_matrix(&mut r, 5, 3)).collect();
    let refs: Vec<&DenseMatrix> = m.iter().collect();
    let got = c.multilinear(&refs).unwrap();
    let oracle = naive_multilinear3(&refs, &c);
    assert!(max_abs_diff(&got, &oracle) <= 1e-12 * oracle.norm());
}

#[test]
fn multilinear_identities_and_mismatch() {
    let mut r = rng(5);
    let c = random_tensor(&mut r, &[2, 3, 4]);
    let eye: Vec<DenseMatrix> = c.dims().iter().map(|&n| DenseMatrix::identity(n)).collect();
    let refs: Vec<&DenseMatrix> = eye.iter().collect();
    assert_eq!(c.multilinear(&refs).unwrap(), c);
    let wrong = [&eye[0], &eye[0], &eye[2]];
    assert!(c.multilinear(&wrong).is_err());
    assert!(c.multilinear(&refs[..2]).is_err());
}

#[test]
fn norm_examples() {
    assert_eq!(DenseTensor::zeros(&[2, 2]).unwrap().norm(), 0.0);
    assert_eq!(DenseTensor::unit(&[3, 3, 3], &[0, 0, 0]).unwrap().norm(), 1.0);
    let a = DenseTensor::zeros(&[2, 2]).unwrap();
    let b = DenseTensor::zeros(&[2, 3]).unwrap();
    assert!(a.inner(&b).is_err());
}

fn arb_tensor(max_order: usize, max_dim: usize) -> impl Strategy<Value = DenseTensor> {
    prop::collection::vec(1..=max_dim, 1..=max_order).prop_flat_map(|dims| {
        let len: usize = dims.iter().product();
        prop::collection::vec(-10.0f64..10.0, len).prop_map(move |data| Tensor::new(dims.clone(), data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fold_unfold_round_trip_is_exact(t in arb_tensor(5, 4)) {
        for d in 0..t.order() {
            let back = Tensor::fold(&t.unfold(d).unwrap(), d, t.dims()).unwrap();
            prop_assert_eq!(&back, &t);
        }
    }

    #[test]
    fn unfolding_convention(seed in any::<u64>(), dims in prop::collection::vec(1usize..4, 2..=4)) {
        let mut r = rng(seed);
        let l: Vec<usize> = dims.iter().map(|&n| n.min(2)).collect();
        let c = random_tensor(&mut r, &l);
        let u: Vec<DenseMatrix> = dims.iter().zip(&l).map(|(&n, &l)| random_matrix(&mut r, n, l)).collect();
        let refs: Vec<&DenseMatrix> = u.iter().collect();
        let t = c.multilinear(&refs).unwrap();
        for d in 0..dims.len() {
            let others: Vec<&DenseMatrix> = refs.iter().enumerate().filter(|&(e, _)| e != d).map(|(_, m)| *m).collect();
            let k = Matrix::kron_all(&others).unwrap();
            let rhs = u[d].matmul(&c.unfold(d).unwrap()).unwrap().matmul(&k.transpose()).unwrap();
            let lhs = t.unfold(d).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * t.norm().max(1e-300));
        }
    }

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), p in 1usize..4, q in 1usize..4, r_ in 1usize..4, s in 1usize..4, t_ in 1usize..4, u_ in 1usize..4) {
        let mut r = rng(seed);
        let a = random_matrix(&mut r, p, q);
        let b = random_matrix(&mut r, r_, s);
        let c = random_matrix(&mut r, q, t_);
        let d = random_matrix(&mut r, s, u_);
        let lhs = Matrix::kron(&a, &b).unwrap().matmul(&Matrix::kron(&c, &d).unwrap()).unwrap();
        let rhs = Matrix::kron(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * rhs.frobenius_norm().max(1e-300));
    }

    #[test]
    fn orthogonal_invariance_of_norm(seed in any::<u64>(), dims in prop::collection::vec(1usize..4, 1..=4)) {
        let mut r = rng(seed);
        let t = random_tensor(&mut r, &dims);
        let q: Vec<DenseMatrix> = dims.iter().map(|&n| gram_schmidt(&random_matrix(&mut r, n + 2, n))).collect();
        let refs: Vec<&DenseMatrix> = q.iter().collect();
        let big = t.multilinear(&refs).unwrap();
        prop_assert!(rel_diff(big.norm(), t.norm()) <= 1e-12);
    }

    #[test]
    fn mode_products_compose_to_multilinear(seed in any::<u64>(), dims in prop::collection::vec(1usize..4, 1..=4)) {
        let mut r = rng(seed);
        let t = random_tensor(&mut r, &dims);
        let m: Vec<DenseMatrix> = dims.iter().map(|&n| random_matrix(&mut r, 3, n)).collect();
        let refs: Vec<&DenseMatrix> = m.iter().collect();
        let mut seq = t.clone();
        for (d, mat) in m.iter().enumerate() {
            seq = seq.mode_product(d, mat).unwrap();
        }
        let all = t.multilinear(&refs).unwrap();
        prop_assert!(max_abs_diff(&seq, &all) <= 1e-13 * all.norm().max(1e-300));
    }
}

