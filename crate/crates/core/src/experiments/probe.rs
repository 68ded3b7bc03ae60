use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{normal, seeded_rng};
use crate::condition::assemble_terracini;
use crate::error::{Error, Result};
use crate::model::Sbtd;
use crate::scalar::Real;
use crate::serde_ext::extended_f64;

/// Amplification ratios `‖x‖/‖δ‖` of least-squares solves `T x ≈ δ` for
/// directions `δ` in the column span of the Terracini matrix `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub samples: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    #[serde(with = "extended_f64")]
    pub kappa_ref: f64,
    /// Ratio for `δ` equal to the left singular vector of `σ_min`.
    pub singular_ratio: f64,
}

const BATCH: usize = 64;

fn col_norm<T: Real>(m: &Mat<T>, j: usize) -> T {
    (0..m.nrows()).map(|i| m[(i, j)] * m[(i, j)]).sum::<T>().sqrt()
}

/// Draws `samples` Gaussian combinations `δ = U w` of the left singular
/// vectors of `T`. The solves go through a QR factorization of `T`, so the
/// ratios are independent of the SVD that supplies `κ`.
pub fn perturbation_probe<T: Real>(s: &Sbtd<T>, samples: usize, seed: u64) -> Result<ProbeResult> {
    let t = assemble_terracini(s)?.matrix.to_faer();
    let (m, p) = (t.nrows(), t.ncols());
    if p > m {
        return Err(Error::IllPosed(0.0));
    }
    let svd = t
        .thin_svd()
        .map_err(|e| Error::Linalg(format!("svd did not converge: {e:?}")))?;
    let sv = svd.S().column_vector();
    let smax = sv[0];
    let smin = sv[p - 1];
    if !(smin >= T::ill_posed_tol() * smax) || smin == T::zero() {
        return Err(Error::IllPosed(smin.to_f64_lossy()));
    }
    let u = svd.U();
    let qr = t.qr();
    let mut rng = seeded_rng(seed);
    let mut max_ratio = T::zero();
    let mut sum = T::zero();
    let mut done = 0;
    while done < samples {
        let k = BATCH.min(samples - done);
        let w = Mat::<T>::from_fn(p, k, |_, _| normal(&mut rng));
        let delta = u * &w;
        let x = qr.solve_lstsq(&delta);
        for j in 0..k {
            let r = col_norm(&x, j) / col_norm(&delta, j);
            max_ratio = max_ratio.max(r);
            sum = sum + r;
        }
        done += k;
    }
    let star = Mat::<T>::from_fn(m, 1, |i, _| u[(i, p - 1)]);
    let x = qr.solve_lstsq(&star);
    let singular_ratio = col_norm(&x, 0) / col_norm(&star, 0);
    let mean_ratio = if samples == 0 {
        T::zero()
    } else {
        sum / T::lit(samples as f64)
    };
    Ok(ProbeResult {
        samples,
        max_ratio: max_ratio.to_f64_lossy(),
        mean_ratio: mean_ratio.to_f64_lossy(),
        kappa_ref: (T::one() / smin).to_f64_lossy(),
        singular_ratio: singular_ratio.to_f64_lossy(),
    })
}
