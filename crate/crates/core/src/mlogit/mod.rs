//! Multinomial logistic regression with a fixed reference class.
//!
//! Classes are indexed `0..K`; class 0 is the reference and has its linear
//! predictor pinned to zero. The parameter vector has `K-1` blocks of length
//! `d`, block `k-1` holding the coefficients of class `k` against the
//! reference:
//!
//! ```text
//! theta = [ theta_1[0..d) | theta_2[0..d) | ... | theta_{K-1}[0..d) ]
//! ```
//!
//! With `eta_k = x . theta_k` and `eta_0 = 0`, the per-row log-partition is
//! `psi(x) = log(1 + sum_k exp(eta_k))` and the per-row loss is
//! `psi(x) - eta_y`. The unit term inside the log is the reference class's
//! `exp(0)`; without it the probabilities would not normalize.

mod design;
mod newton;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use design::{Design, DesignBuilder, Standardization};
pub use newton::{minimize, FitDiagnostics, FitStatus, NewtonOptions, Objective};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    /// Number of outcome classes, reference included.
    pub n_classes: usize,
    /// Covariate dimension, intercept included.
    pub dim: usize,
}

impl ModelShape {
    pub fn new(n_classes: usize, dim: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Shape(format!("need at least 2 classes, got {n_classes}")));
        }
        if dim < 1 {
            return Err(Error::Shape("covariate dimension must be at least 1".into()));
        }
        Ok(ModelShape { n_classes, dim })
    }

    /// `d * (K - 1)`.
    pub fn n_params(&self) -> usize {
        self.dim * (self.n_classes - 1)
    }

    /// Flat index of coefficient `covariate` in the block of class `class` (1-based class).
    pub fn index(&self, class: usize, covariate: usize) -> usize {
        debug_assert!(class >= 1 && class < self.n_classes && covariate < self.dim);
        (class - 1) * self.dim + covariate
    }
}

/// Fitted or generating coefficients in the block layout above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub shape: ModelShape,
    pub values: Vec<f64>,
}

impl Coefficients {
    pub fn new(shape: ModelShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.n_params() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                shape.n_params(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite coefficient".into()));
        }
        Ok(Coefficients { shape, values })
    }

    pub fn zeros(shape: ModelShape) -> Self {
        Coefficients { shape, values: vec![0.0; shape.n_params()] }
    }

    /// Coefficients of class `class` (1-based) against the reference.
    pub fn block(&self, class: usize) -> &[f64] {
        let d = self.shape.dim;
        &self.values[(class - 1) * d..class * d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Indicator of `y` over the non-reference classes: the reference class maps
/// to the zero vector.
pub fn one_hot(y: usize, n_classes: usize) -> Result<Vec<f64>> {
    if y >= n_classes {
        return Err(Error::Parameter(format!("class index {y} out of range for K={n_classes}")));
    }
    let mut v = vec![0.0; n_classes - 1];
    if y > 0 {
        v[y - 1] = 1.0;
    }
    Ok(v)
}

/// Evaluates one row: fills `eta` with linear predictors and `probs` with
/// non-reference probabilities, returning `psi`.
fn eval_row(theta: &[f64], x: &[f64], shape: ModelShape, eta: &mut [f64], probs: &mut [f64]) -> Result<f64> {
    let d = shape.dim;
    let mut max_eta = 0.0_f64;
    for (k, e) in eta.iter_mut().enumerate() {
        let block = &theta[k * d..(k + 1) * d];
        let v: f64 = block.iter().zip(x).map(|(t, xi)| t * xi).sum();
        if !v.is_finite() {
            return Err(Error::Numeric(format!("non-finite linear predictor for class {}", k + 1)));
        }
        *e = v;
        max_eta = max_eta.max(v);
    }
    let mut denom = (-max_eta).exp();
    for (p, &e) in probs.iter_mut().zip(eta.iter()) {
        *p = (e - max_eta).exp();
        denom += *p;
    }
    for p in probs.iter_mut() {
        *p /= denom;
    }
    Ok(max_eta + denom.ln())
}

fn check_shapes(theta: &[f64], design: &Design, shape: ModelShape) -> Result<()> {
    if theta.len() != shape.n_params() {
        return Err(Error::Shape(format!(
            "parameter length {} does not match d(K-1) = {}",
            theta.len(),
            shape.n_params()
        )));
    }
    if design.dim() != shape.dim {
        return Err(Error::Shape(format!(
            "design has {} columns, model expects {}",
            design.dim(),
            shape.dim
        )));
    }
    Ok(())
}

fn check_labels(design: &Design, labels: &[usize], shape: ModelShape) -> Result<()> {
    if labels.len() != design.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows; every row must be labeled",
            labels.len(),
            design.rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= shape.n_classes) {
        return Err(Error::Parameter(format!("label {bad} out of range for K={}", shape.n_classes)));
    }
    if design.rows() == 0 {
        return Err(Error::Shape("no rows".into()));
    }
    Ok(())
}

/// Non-reference class probabilities for one covariate row. The reference
/// probability is `1 - sum`.
pub fn class_probs(theta: &[f64], x: &[f64], shape: ModelShape) -> Result<Vec<f64>> {
    if theta.len() != shape.n_params() || x.len() != shape.dim {
        return Err(Error::Shape("class_probs: theta or x length mismatch".into()));
    }
    let mut eta = vec![0.0; shape.n_classes - 1];
    let mut probs = vec![0.0; shape.n_classes - 1];
    eval_row(theta, x, shape, &mut eta, &mut probs)?;
    Ok(probs)
}

/// Log-partition `psi(theta, x) = log(1 + sum_k exp(x . theta_k))`.
pub fn log_partition(theta: &[f64], x: &[f64], shape: ModelShape) -> Result<f64> {
    let mut eta = vec![0.0; shape.n_classes - 1];
    let mut probs = vec![0.0; shape.n_classes - 1];
    eval_row(theta, x, shape, &mut eta, &mut probs)
}

/// Mean negative log-likelihood over the rows.
pub fn nll(theta: &[f64], design: &Design, labels: &[usize], shape: ModelShape) -> Result<f64> {
    check_shapes(theta, design, shape)?;
    check_labels(design, labels, shape)?;
    let mut eta = vec![0.0; shape.n_classes - 1];
    let mut probs = vec![0.0; shape.n_classes - 1];
    let mut total = 0.0;
    for (x, &y) in design.iter().zip(labels) {
        let psi = eval_row(theta, x, shape, &mut eta, &mut probs)?;
        let eta_y = if y == 0 { 0.0 } else { eta[y - 1] };
        total += psi - eta_y;
    }
    Ok(total / design.rows() as f64)
}

/// Mean gradient of [`nll`]: rows contribute `(psi'(x) - onehot(y)) (x) x`.
pub fn nll_grad(theta: &[f64], design: &Design, labels: &[usize], shape: ModelShape) -> Result<DVector<f64>> {
    check_shapes(theta, design, shape)?;
    check_labels(design, labels, shape)?;
    let d = shape.dim;
    let mut eta = vec![0.0; shape.n_classes - 1];
    let mut probs = vec![0.0; shape.n_classes - 1];
    let mut g = DVector::zeros(shape.n_params());
    for (x, &y) in design.iter().zip(labels) {
        eval_row(theta, x, shape, &mut eta, &mut probs)?;
        for k in 0..shape.n_classes - 1 {
            let r = probs[k] - if y == k + 1 { 1.0 } else { 0.0 };
            for j in 0..d {
                g[k * d + j] += r * x[j];
            }
        }
    }
    Ok(g / design.rows() as f64)
}

/// Unnormalized Hessian sum `sum_i psi''(x_i) (x) x_i x_i^T`, where
/// `psi'' = diag(p) - p p^T`. Label-free.
pub fn hessian_sum(theta: &[f64], design: &Design, shape: ModelShape) -> Result<DMatrix<f64>> {
    check_shapes(theta, design, shape)?;
    let d = shape.dim;
    let km1 = shape.n_classes - 1;
    let p = shape.n_params();
    let mut eta = vec![0.0; km1];
    let mut probs = vec![0.0; km1];
    let mut h = DMatrix::zeros(p, p);
    let mut xx = vec![0.0; d * d];
    for x in design.iter() {
        eval_row(theta, x, shape, &mut eta, &mut probs)?;
        for i in 0..d {
            for j in 0..d {
                xx[i * d + j] = x[i] * x[j];
            }
        }
        for a in 0..km1 {
            for b in 0..km1 {
                let w = if a == b { probs[a] - probs[a] * probs[b] } else { -(probs[a] * probs[b]) };
                for i in 0..d {
                    for j in 0..d {
                        h[(a * d + i, b * d + j)] += w * xx[i * d + j];
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Mean Hessian of [`nll`]. Depends on covariates only, never on labels.
pub fn nll_hess(theta: &[f64], design: &Design, shape: ModelShape) -> Result<DMatrix<f64>> {
    if design.rows() == 0 {
        return Err(Error::Shape("no rows".into()));
    }
    Ok(hessian_sum(theta, design, shape)? / design.rows() as f64)
}

/// Per-row gradients `(psi'(x_i) - onehot(y_i)) (x) x_i`, one row each.
pub fn row_gradients(theta: &[f64], design: &Design, labels: &[usize], shape: ModelShape) -> Result<DMatrix<f64>> {
    check_shapes(theta, design, shape)?;
    check_labels(design, labels, shape)?;
    let d = shape.dim;
    let mut eta = vec![0.0; shape.n_classes - 1];
    let mut probs = vec![0.0; shape.n_classes - 1];
    let mut out = DMatrix::zeros(design.rows(), shape.n_params());
    for (i, (x, &y)) in design.iter().zip(labels).enumerate() {
        eval_row(theta, x, shape, &mut eta, &mut probs)?;
        for k in 0..shape.n_classes - 1 {
            let r = probs[k] - if y == k + 1 { 1.0 } else { 0.0 };
            for j in 0..d {
                out[(i, k * d + j)] = r * x[j];
            }
        }
    }
    Ok(out)
}

/// Negative log-likelihood objective over one labeled design.
pub struct MleObjective<'a> {
    pub design: &'a Design,
    pub labels: &'a [usize],
    pub shape: ModelShape,
}

impl Objective for MleObjective<'_> {
    fn n_params(&self) -> usize {
        self.shape.n_params()
    }
    fn value(&self, theta: &[f64]) -> Result<f64> {
        nll(theta, self.design, self.labels, self.shape)
    }
    fn gradient(&self, theta: &[f64]) -> Result<DVector<f64>> {
        nll_grad(theta, self.design, self.labels, self.shape)
    }
    fn hessian(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        nll_hess(theta, self.design, self.shape)
    }
}

/// Checks that every class `0..K` has at least one row.
pub fn check_classes_present(labels: &[usize], shape: ModelShape) -> Result<()> {
    let mut seen = vec![false; shape.n_classes];
    for &y in labels {
        if y < shape.n_classes {
            seen[y] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Shape(format!(
            "class index {missing} has no rows; the maximum-likelihood estimate does not exist"
        )));
    }
    Ok(())
}

/// Maximum-likelihood fit by damped Newton.
pub fn fit_mle(
    design: &Design,
    labels: &[usize],
    shape: ModelShape,
    options: &NewtonOptions,
) -> Result<(Coefficients, FitDiagnostics)> {
    check_shapes(&vec![0.0; shape.n_params()], design, shape)?;
    check_labels(design, labels, shape)?;
    check_classes_present(labels, shape)?;
    let obj = MleObjective { design, labels, shape };
    let (theta, diag) = minimize(&obj, None, options)?;
    Ok((Coefficients { shape, values: theta }, diag))
}

#[cfg(test)]
mod tests;
