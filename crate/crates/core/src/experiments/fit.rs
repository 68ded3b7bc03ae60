use faer::Mat;

use crate::condition::condition_direct;
use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::matrix::Matrix;
use crate::model::{forward_error, Sbtd, TuckerTerm};
use crate::scalar::Real;
use crate::tensor::Tensor;

/// Residual threshold above which a fit is not used to test error bounds.
pub const RESIDUAL_FILTER: f64 = 1e-8;

const MAX_REJECTIONS: usize = 40;

#[derive(Clone, Debug)]
pub struct FitResult<T> {
    pub sbtd: Sbtd<T>,
    /// Accepted steps taken.
    pub iterations: usize,
    /// `‖target − Σ‖` before the first step and after each accepted step.
    pub residual_history: Vec<T>,
    pub converged: bool,
}

/// Number of free parameters: all factor entries plus the core entries
/// (one scalar for rank-1 terms).
pub fn parameter_count<T: Real>(s: &Sbtd<T>) -> usize {
    s.terms()
        .iter()
        .map(|t| t.factors().iter().map(|u| u.rows() * u.cols()).sum::<usize>() + t.core().len())
        .sum()
}

/// Flattens factors (row-major, mode order) then core, term by term.
pub fn pack_parameters<T: Real>(s: &Sbtd<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(parameter_count(s));
    for t in s.terms() {
        for u in t.factors() {
            out.extend_from_slice(u.data());
        }
        out.extend_from_slice(t.core().data());
    }
    out
}

/// Inverse of [`pack_parameters`], with shapes and structures from
/// `template`.
pub fn unpack_parameters<T: Real>(template: &Sbtd<T>, params: &[T]) -> Result<Sbtd<T>> {
    if params.len() != parameter_count(template) {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters for a decomposition with {}",
            params.len(),
            parameter_count(template)
        )));
    }
    let mut at = 0;
    let mut take = |n: usize| {
        let s = &params[at..at + n];
        at += n;
        s.to_vec()
    };
    let terms = template
        .terms()
        .iter()
        .map(|t| {
            let factors = t
                .factors()
                .iter()
                .map(|u| Matrix::new(u.rows(), u.cols(), take(u.rows() * u.cols())))
                .collect::<Result<Vec<_>>>()?;
            let core = Tensor::new(t.core().dims().to_vec(), take(t.core().len()))?;
            TuckerTerm::new(factors, core, t.structure())
        })
        .collect::<Result<Vec<_>>>()?;
    Sbtd::new(terms)
}

fn jacobian_faer<T: Real>(s: &Sbtd<T>) -> Result<Mat<T>> {
    let dims = s.dims();
    let m: usize = dims.iter().product();
    let mut jac = Mat::<T>::zeros(m, parameter_count(s));
    let mut col = 0;
    for term in s.terms() {
        let u = term.factors();
        let core = term.core();
        for d in 0..s.order() {
            let l = u[d].cols();
            let eye = Matrix::identity(l);
            let mut mats: Vec<&Matrix<T>> = u.iter().collect();
            mats[d] = &eye;
            let y = core.multilinear(&mats)?;
            let left: usize = dims[..d].iter().product();
            let right: usize = dims[d + 1..].iter().product();
            let n = dims[d];
            for a in 0..n {
                for b in 0..l {
                    let j = col + a * l + b;
                    for lf in 0..left {
                        for rt in 0..right {
                            jac[((lf * n + a) * right + rt, j)] = y.data()[(lf * l + b) * right + rt];
                        }
                    }
                }
            }
            col += n * l;
        }
        let refs: Vec<&Matrix<T>> = u.iter().collect();
        let k = Matrix::kron_all(&refs)?;
        for c in 0..core.len() {
            for i in 0..m {
                jac[(i, col + c)] = k[(i, c)];
            }
        }
        col += core.len();
    }
    Ok(jac)
}

/// Derivative of `vec(evaluate_sum(s))` with respect to the parameters in
/// [`pack_parameters`] order.
pub fn jacobian<T: Real>(s: &Sbtd<T>) -> Result<Matrix<T>> {
    Ok(Matrix::from_faer(jacobian_faer(s)?.as_ref()))
}

fn residual<T: Real>(s: &Sbtd<T>, target: &Tensor<T>) -> Result<Vec<T>> {
    Ok(s.evaluate_sum()?.sub(target)?.into_data())
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Levenberg–Marquardt on all factor and core entries, minimizing
/// `½‖target − evaluate_sum‖²`. Stops once the residual norm is at most
/// `res_tol`, after `max_iter` accepted steps, or when no damping level
/// yields a decrease.
pub fn fit_btd<T: Real>(target: &Tensor<T>, init: &Sbtd<T>, max_iter: usize, res_tol: T) -> Result<FitResult<T>> {
    if target.dims() != init.dims() {
        return Err(Error::DimensionMismatch(format!(
            "target {:?}, decomposition {:?}",
            target.dims(),
            init.dims()
        )));
    }
    let mut current = init.clone();
    let mut r = residual(&current, target)?;
    let mut f = norm(&r);
    if !f.is_finite() {
        return Err(Error::Diverged);
    }
    let mut history = vec![f];
    let np = parameter_count(&current);
    let mut lambda: Option<T> = None;
    let mut iterations = 0;
    while f > res_tol && iterations < max_iter {
        let jac = jacobian_faer(&current)?;
        let h = jac.transpose() * &jac;
        let rv = Mat::<T>::from_fn(r.len(), 1, |i, _| r[i]);
        let g = jac.transpose() * &rv;
        let lam = *lambda.get_or_insert_with(|| {
            let tr: T = (0..np).map(|i| h[(i, i)]).sum();
            (T::lit(1e-4) * tr / T::lit(np as f64)).max(T::min_positive_value())
        });
        let params = pack_parameters(&current);
        let mut lam = lam;
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS {
            let damped = Mat::<T>::from_fn(np, np, |i, j| if i == j { h[(i, j)] + lam } else { h[(i, j)] });
            let step = match solve_spd(&damped, &g) {
                Ok(x) => x,
                Err(_) => {
                    lam = lam * T::lit(10.0);
                    continue;
                }
            };
            let trial: Vec<T> = params.iter().enumerate().map(|(i, &p)| p - step[(i, 0)]).collect();
            if trial.iter().any(|x| !x.is_finite()) {
                return Err(Error::Diverged);
            }
            let cand = unpack_parameters(&current, &trial)?;
            let rc = residual(&cand, target)?;
            let fc = norm(&rc);
            if !fc.is_finite() {
                return Err(Error::Diverged);
            }
            if fc < f {
                accepted = Some((cand, rc, fc));
                lam = (lam / T::lit(10.0)).max(T::min_positive_value());
                break;
            }
            lam = lam * T::lit(10.0);
        }
        lambda = Some(lam);
        match accepted {
            Some((cand, rc, fc)) => {
                current = cand;
                r = rc;
                f = fc;
                history.push(f);
                iterations += 1;
            }
            None => break,
        }
    }
    Ok(FitResult {
        converged: f <= res_tol,
        sbtd: current,
        iterations,
        residual_history: history,
    })
}

/// `forward_error(truth, fitted) / (κ(truth) · ‖target − Σ fitted‖)`; the
/// first-order error bound predicts a value of at most about one.
///
/// The exact case `0/0` is reported as 0.
pub fn error_bound_check<T: Real>(truth: &Sbtd<T>, fitted: &Sbtd<T>, target: &Tensor<T>) -> Result<T> {
    let res = fitted.evaluate_sum()?.sub(target)?.norm();
    let threshold = T::lit(RESIDUAL_FILTER);
    if !(res <= threshold) {
        return Err(Error::ResidualAboveFilter {
            residual: res.to_f64_lossy(),
            threshold: RESIDUAL_FILTER,
        });
    }
    let report = condition_direct(truth, None)?;
    if report.ill_posed {
        return Err(Error::IllPosed(report.sigma_min));
    }
    let kappa = T::lit(report.kappa);
    let fe = forward_error(truth, fitted)?;
    if fe == T::zero() {
        return Ok(T::zero());
    }
    if res == T::zero() {
        return Ok(T::infinity());
    }
    Ok(fe / (kappa * res))
}
