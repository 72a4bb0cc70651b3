use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::PpiInputs;
use crate::error::{Error, Result};
use crate::mlogit::{hessian_sum, nll_hess, row_gradients, Design, ModelShape};

/// Sample covariance of the rows of `a` (divisor `m - 1`).
pub fn sample_covariance(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    cross_covariance(a, a)
}

/// Sample cross-covariance `Cov(a, b)` with entry `(i, j) = cov(a_i, b_j)`.
pub fn cross_covariance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    if b.nrows() != m {
        return Err(Error::Shape("cross-covariance needs equal row counts".into()));
    }
    if m < 2 {
        return Err(Error::Precondition("covariance needs at least 2 rows".into()));
    }
    let center = |x: &DMatrix<f64>| {
        let mut c = x.clone();
        for j in 0..x.ncols() {
            let mean = x.column(j).sum() / m as f64;
            c.column_mut(j).add_scalar_mut(-mean);
        }
        c
    };
    let ca = center(a);
    let cb = center(b);
    Ok(ca.transpose() * cb / (m - 1) as f64)
}

/// Inverse of a symmetric positive definite matrix; falls back to a ridge
/// and reports it.
pub(crate) fn spd_inverse(h: &DMatrix<f64>, ridge: f64) -> Result<(DMatrix<f64>, bool)> {
    if let Some(ch) = h.clone().cholesky() {
        return Ok((ch.inverse(), false));
    }
    let scale = h.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut r = ridge * scale.max(1.0);
    for _ in 0..16 {
        let shifted = h + DMatrix::identity(h.nrows(), h.ncols()) * r;
        if let Some(ch) = shifted.cholesky() {
            return Ok((ch.inverse(), true));
        }
        r *= 10.0;
    }
    Err(Error::Numeric("singular Hessian".into()))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Sandwich covariance and its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    /// `Sigma`, the asymptotic covariance of `sqrt(n) (theta_hat - theta*)`.
    pub sigma: DMatrix<f64>,
    pub hessian: DMatrix<f64>,
    /// Predicted-label gradient covariance, scaled by `lambda^2`.
    pub v_f: DMatrix<f64>,
    /// Covariance of the labeled rows' rectified gradients.
    pub v_delta: DMatrix<f64>,
    /// Set when the Hessian needed a ridge to invert.
    pub condition_warning: bool,
}

/// Rectified-estimator sandwich at `theta`.
///
/// - `H = (1/(n+N)) sum over all rows of psi''(x) (x) x x^T`
/// - `V_f = lambda^2 Cov_{n+N}((psi'(x) - onehot(yhat)) (x) x)`
/// - `V_delta = Cov_n(((1 - lambda) psi'(x) + lambda onehot(yhat) - onehot(y)) (x) x)`
/// - `Sigma = H^-1 ((n/N) V_f + V_delta) H^-1`
///
/// `V_delta`'s rows are the labeled-row gradients of the rectified objective,
/// `grad l(y) - lambda grad l(yhat)`.
pub fn sandwich_covariance(theta: &[f64], inputs: &PpiInputs, lambda: f64, ridge: f64) -> Result<CovarianceEstimate> {
    inputs.validate()?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Parameter(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    let s = inputs.shape;
    let n = inputs.n();
    let big_n = inputs.N();

    let h_sum = hessian_sum(theta, &inputs.labeled_x, s)? + hessian_sum(theta, &inputs.unlabeled_x, s)?;
    let hessian = h_sum / (n + big_n) as f64;

    let g_true = row_gradients(theta, &inputs.labeled_x, &inputs.labeled_y, s)?;
    let g_pred_l = row_gradients(theta, &inputs.labeled_x, &inputs.labeled_yhat, s)?;
    let g_pred_u = row_gradients(theta, &inputs.unlabeled_x, &inputs.unlabeled_yhat, s)?;

    let pooled = stack(&g_pred_l, &g_pred_u);
    let v_f = sample_covariance(&pooled)? * (lambda * lambda);
    let rectified = &g_true - &g_pred_l * lambda;
    let v_delta = sample_covariance(&rectified)?;

    let (h_inv, condition_warning) = spd_inverse(&hessian, ridge)?;
    let middle = &v_f * (n as f64 / big_n as f64) + &v_delta;
    let sigma = symmetrize(&h_inv * middle * &h_inv);
    Ok(CovarianceEstimate { sigma, hessian, v_f, v_delta, condition_warning })
}

/// Classical sandwich `H^-1 Cov_n(grad l) H^-1` over one labeled design.
pub fn classical_sandwich(
    theta: &[f64],
    design: &Design,
    labels: &[usize],
    shape: ModelShape,
    ridge: f64,
) -> Result<CovarianceEstimate> {
    let hessian = nll_hess(theta, design, shape)?;
    let grads = row_gradients(theta, design, labels, shape)?;
    let v_delta = sample_covariance(&grads)?;
    let (h_inv, condition_warning) = spd_inverse(&hessian, ridge)?;
    let sigma = symmetrize(&h_inv * &v_delta * &h_inv);
    let p = shape.n_params();
    Ok(CovarianceEstimate { sigma, hessian, v_f: DMatrix::zeros(p, p), v_delta, condition_warning })
}

pub(crate) fn stack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}
