//! Prediction-powered inference for multinomial logistic regression.
//!
//! Given `n` labeled rows `(x, y, yhat)` and `N` unlabeled rows `(x, yhat)`,
//! the rectified objective is
//!
//! ```text
//! L(theta; lambda) = L_n(theta) + lambda * (L_N^u(theta) - L_n^l(theta))
//! ```
//!
//! where `L_n` uses true labels on the labeled rows, `L_n^l` uses predicted
//! labels on the same rows and `L_N^u` uses predicted labels on the
//! unlabeled rows. `lambda = 0` is the classical estimator; `lambda = 1` is
//! plain prediction-powered inference. The variance of the minimizer is
//! estimated by a sandwich `H^-1 ((n/N) V_f + V_delta) H^-1` and intervals
//! are `theta_j +/- z * sqrt(Sigma_jj / n)`.

mod covariance;
mod estimators;
mod lambda;
mod rectified;
mod report;

pub use covariance::{classical_sandwich, cross_covariance, sample_covariance, sandwich_covariance, CovarianceEstimate};
pub use estimators::{
    fit_classical, fit_multippi, fit_naive, infer_multippi, MultiPpiFit,
};
pub use lambda::{tune_lambda, LambdaChoice, LambdaMode, LambdaModeTag};
pub use rectified::{rectified_gradient, rectified_loss, RectifiedObjective};
pub use report::{
    confidence_intervals, normal_quantile, CoefficientEstimate, CoefficientLabels, EstimatorKind,
    InferenceReport, IntervalSet, LambdaRecord,
};

use crate::error::{Error, Result};
use crate::mlogit::{Design, ModelShape};

/// Labeled and unlabeled rows with aligned predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct PpiInputs {
    pub shape: ModelShape,
    pub labeled_x: Design,
    pub labeled_y: Vec<usize>,
    pub labeled_yhat: Vec<usize>,
    pub unlabeled_x: Design,
    pub unlabeled_yhat: Vec<usize>,
}

impl PpiInputs {
    pub fn new(
        shape: ModelShape,
        labeled_x: Design,
        labeled_y: Vec<usize>,
        labeled_yhat: Vec<usize>,
        unlabeled_x: Design,
        unlabeled_yhat: Vec<usize>,
    ) -> Result<Self> {
        let inputs = PpiInputs { shape, labeled_x, labeled_y, labeled_yhat, unlabeled_x, unlabeled_yhat };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn n(&self) -> usize {
        self.labeled_x.rows()
    }

    #[allow(non_snake_case)]
    pub fn N(&self) -> usize {
        self.unlabeled_x.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let big_n = self.N();
        let p = self.shape.n_params();
        if self.labeled_x.dim() != self.shape.dim || self.unlabeled_x.dim() != self.shape.dim {
            return Err(Error::Shape("design width does not match model dimension".into()));
        }
        if self.labeled_y.len() != n || self.labeled_yhat.len() != n || self.unlabeled_yhat.len() != big_n {
            return Err(Error::Shape("labels and predictions must align with design rows".into()));
        }
        if n < p + 1 {
            return Err(Error::Precondition(format!(
                "{n} labeled rows; need at least d(K-1)+1 = {}",
                p + 1
            )));
        }
        if big_n < 1 {
            return Err(Error::Precondition("need at least one unlabeled row".into()));
        }
        let k = self.shape.n_classes;
        let all = self.labeled_y.iter().chain(&self.labeled_yhat).chain(&self.unlabeled_yhat);
        if let Some(bad) = all.copied().find(|&y| y >= k) {
            return Err(Error::Parameter(format!("class index {bad} out of range for K={k}")));
        }
        Ok(())
    }
}
