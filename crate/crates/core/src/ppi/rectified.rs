use nalgebra::{DMatrix, DVector};

use super::PpiInputs;
use crate::error::{Error, Result};
use crate::mlogit::{nll, nll_grad, nll_hess, Objective};

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("lambda must lie in [0, 1], got {lambda}")))
    }
}

// The three-term loss is evaluated as
//   (1 - lambda) L_n + lambda L_N^u + lambda (L_n - L_n^l),
// which equals L_n + lambda (L_N^u - L_n^l) and reduces to exactly L_n at
// lambda = 0 and to exactly L_N^u at lambda = 1 when yhat = y on labeled rows.

/// Rectified loss at `theta`.
pub fn rectified_loss(theta: &[f64], inputs: &PpiInputs, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let s = inputs.shape;
    let l_true = nll(theta, &inputs.labeled_x, &inputs.labeled_y, s)?;
    let l_pred = nll(theta, &inputs.labeled_x, &inputs.labeled_yhat, s)?;
    let u_pred = nll(theta, &inputs.unlabeled_x, &inputs.unlabeled_yhat, s)?;
    Ok((1.0 - lambda) * l_true + lambda * u_pred + lambda * (l_true - l_pred))
}

/// Gradient of [`rectified_loss`].
pub fn rectified_gradient(theta: &[f64], inputs: &PpiInputs, lambda: f64) -> Result<DVector<f64>> {
    check_lambda(lambda)?;
    let s = inputs.shape;
    let g_true = nll_grad(theta, &inputs.labeled_x, &inputs.labeled_y, s)?;
    let g_pred = nll_grad(theta, &inputs.labeled_x, &inputs.labeled_yhat, s)?;
    let g_unl = nll_grad(theta, &inputs.unlabeled_x, &inputs.unlabeled_yhat, s)?;
    Ok(&g_true * (1.0 - lambda) + g_unl * lambda + (&g_true - g_pred) * lambda)
}

/// The rectified objective at a fixed `lambda`, for the Newton solver.
///
/// Its Hessian is `(1 - lambda) H_labeled + lambda H_unlabeled`; both terms
/// are label-free and positive semidefinite, so the objective is convex for
/// every `lambda` in `[0, 1]`.
pub struct RectifiedObjective<'a> {
    pub inputs: &'a PpiInputs,
    pub lambda: f64,
}

impl<'a> RectifiedObjective<'a> {
    pub fn new(inputs: &'a PpiInputs, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(RectifiedObjective { inputs, lambda })
    }
}

impl Objective for RectifiedObjective<'_> {
    fn n_params(&self) -> usize {
        self.inputs.shape.n_params()
    }

    fn value(&self, theta: &[f64]) -> Result<f64> {
        rectified_loss(theta, self.inputs, self.lambda)
    }

    fn gradient(&self, theta: &[f64]) -> Result<DVector<f64>> {
        rectified_gradient(theta, self.inputs, self.lambda)
    }

    fn hessian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let s = self.inputs.shape;
        let h_l = nll_hess(theta, &self.inputs.labeled_x, s)?;
        let h_u = nll_hess(theta, &self.inputs.unlabeled_x, s)?;
        Ok(h_l * (1.0 - self.lambda) + h_u * self.lambda)
    }
}
