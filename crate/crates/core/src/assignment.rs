//! Minimum-cost perfect matching on a square cost matrix (Hungarian method
//! with potentials, O(n³)).

use crate::matrix::Matrix;
use crate::scalar::Real;

/// Returns `(perm, cost)` where row `i` is matched to column `perm[i]` and
/// `cost = Σ_i c[i, perm[i]]` is minimal.
///
/// # Panics
/// If `c` is not square.
pub fn min_cost_assignment<T: Real>(c: &Matrix<T>) -> (Vec<usize>, T) {
    let n = c.rows();
    assert_eq!(n, c.cols(), "assignment needs a square cost matrix");
    if n == 0 {
        return (Vec::new(), T::zero());
    }
    let inf = T::infinity();
    // 1-based arrays; index 0 is the virtual source
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = c[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] = u[matched_row[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[matched_row[j] - 1] = j - 1;
    }
    let cost = (0..n).map(|i| c[(i, perm[i])]).sum();
    (perm, cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(c: &Matrix<f64>) -> f64 {
        fn rec(c: &Matrix<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
            if row == c.rows() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..c.cols() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(c[(row, j)] + rec(c, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(c, 0, &mut vec![false; c.cols()])
    }

    #[test]
    fn greedy_would_fail() {
        // greedy picks (0,0) first and is forced into 1 + 100
        let c = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 100.0]]).unwrap();
        let (perm, cost) = min_cost_assignment(&c);
        assert_eq!(perm, vec![1, 0]);
        assert_eq!(cost, 4.0);
    }

    #[test]
    fn matches_enumeration() {
        let mut state = 0x9e3779b97f4a7c15u64;
        for n in 1..=6 {
            for _ in 0..20 {
                let c = Matrix::from_fn(n, n, |_, _| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state % 1000) as f64 / 10.0
                });
                let (perm, cost) = min_cost_assignment(&c);
                let mut seen = perm.clone();
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                assert!((cost - brute_force(&c)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty() {
        let (p, c) = min_cost_assignment(&Matrix::<f64>::zeros(0, 0));
        assert!(p.is_empty());
        assert_eq!(c, 0.0);
    }
}
