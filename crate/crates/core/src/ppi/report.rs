use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::lambda::{LambdaChoice, LambdaModeTag};
use crate::error::{Error, Result};
use crate::mlogit::{FitDiagnostics, ModelShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Classical fit on every row with its true label.
    GroundTruth,
    /// Classical fit on the labeled subset only.
    Classical,
    /// Classical fit treating predictions as truth.
    Naive,
    /// Rectified prediction-powered fit.
    Multippi,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::GroundTruth => "ground-truth",
            EstimatorKind::Classical => "classical",
            EstimatorKind::Naive => "naive",
            EstimatorKind::Multippi => "multippi",
        }
    }
}

/// `z_q`, the standard normal quantile.
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Parameter(format!("quantile level must lie in (0, 1), got {q}")));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(q))
}

/// Per-coordinate Wald intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub z: f64,
    pub std_errors: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Coordinates whose variance was numerically negative and clamped to 0.
    pub clamped: Vec<usize>,
}

/// `theta_j +/- z_{1-alpha/2} sqrt(Sigma_jj / n)` for every coordinate.
pub fn confidence_intervals(theta: &[f64], sigma: &DMatrix<f64>, n: usize, alpha: f64) -> Result<IntervalSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if sigma.nrows() != theta.len() || sigma.ncols() != theta.len() {
        return Err(Error::Shape("covariance does not match coefficient length".into()));
    }
    if n == 0 {
        return Err(Error::Parameter("interval denominator n must be positive".into()));
    }
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let mut clamped = Vec::new();
    let std_errors: Vec<f64> = (0..theta.len())
        .map(|j| {
            let v = sigma[(j, j)];
            if v < 0.0 {
                clamped.push(j);
            }
            (v.max(0.0) / n as f64).sqrt()
        })
        .collect();
    let lower = theta.iter().zip(&std_errors).map(|(t, se)| t - z * se).collect();
    let upper = theta.iter().zip(&std_errors).map(|(t, se)| t + z * se).collect();
    Ok(IntervalSet { z, std_errors, lower, upper, clamped })
}

/// Names for coefficient blocks and covariates, used when reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientLabels {
    /// All K class names, reference first.
    pub classes: Vec<String>,
    /// All d covariate names, intercept first.
    pub covariates: Vec<String>,
}

impl CoefficientLabels {
    pub fn generic(shape: ModelShape) -> Self {
        CoefficientLabels {
            classes: (0..shape.n_classes).map(|k| format!("class{k}")).collect(),
            covariates: (0..shape.dim).map(|j| if j == 0 { "intercept".into() } else { format!("x{j}") }).collect(),
        }
    }

    fn check(&self, shape: ModelShape) -> Result<()> {
        if self.classes.len() != shape.n_classes || self.covariates.len() != shape.dim {
            return Err(Error::Shape("coefficient labels do not match model shape".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimate {
    pub index: usize,
    /// Non-reference class this coefficient belongs to.
    pub class: String,
    /// The reference class it is contrasted with.
    pub reference: String,
    pub covariate: String,
    pub estimate: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Lambda as recorded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRecord {
    pub mode: LambdaModeTag,
    pub raw: f64,
    pub clipped: f64,
}

impl From<&LambdaChoice> for LambdaRecord {
    fn from(c: &LambdaChoice) -> Self {
        LambdaRecord { mode: c.mode, raw: c.raw, clipped: c.clipped }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub estimator: EstimatorKind,
    pub alpha: f64,
    pub z: f64,
    pub lambda: LambdaRecord,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    /// The `n` in `sqrt(Sigma_jj / n)`.
    pub ci_denominator: usize,
    pub shape: ModelShape,
    pub coefficients: Vec<CoefficientEstimate>,
    /// `Sigma`, row-major.
    pub covariance: Vec<Vec<f64>>,
    pub diagnostics: FitDiagnostics,
    pub warnings: Vec<String>,
}

impl InferenceReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        estimator: EstimatorKind,
        theta: &[f64],
        sigma: &DMatrix<f64>,
        shape: ModelShape,
        labels: &CoefficientLabels,
        alpha: f64,
        lambda: LambdaRecord,
        n_labeled: usize,
        n_unlabeled: usize,
        diagnostics: FitDiagnostics,
        mut warnings: Vec<String>,
    ) -> Result<Self> {
        labels.check(shape)?;
        let ci_denominator = match estimator {
            EstimatorKind::Naive => n_labeled + n_unlabeled,
            _ => n_labeled,
        };
        let iv = confidence_intervals(theta, sigma, ci_denominator, alpha)?;
        for &j in &iv.clamped {
            warnings.push(format!("variance of coefficient {j} was negative and clamped to 0"));
        }
        let d = shape.dim;
        let coefficients = theta
            .iter()
            .enumerate()
            .map(|(i, &estimate)| CoefficientEstimate {
                index: i,
                class: labels.classes[i / d + 1].clone(),
                reference: labels.classes[0].clone(),
                covariate: labels.covariates[i % d].clone(),
                estimate,
                std_error: iv.std_errors[i],
                lower: iv.lower[i],
                upper: iv.upper[i],
            })
            .collect();
        let covariance = (0..sigma.nrows()).map(|r| sigma.row(r).iter().copied().collect()).collect();
        Ok(InferenceReport {
            estimator,
            alpha,
            z: iv.z,
            lambda,
            n_labeled,
            n_unlabeled,
            ci_denominator,
            shape,
            coefficients,
            covariance,
            diagnostics,
            warnings,
        })
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.std_error).collect()
    }

    pub fn covers(&self, truth: &[f64]) -> Vec<bool> {
        self.coefficients.iter().zip(truth).map(|(c, &t)| c.lower <= t && t <= c.upper).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.upper - c.lower).collect()
    }

    pub const CSV_HEADER: &'static str =
        "group,estimator,class,reference,covariate,estimate,std_error,lower,upper,lambda_mode,lambda_raw,lambda,n_labeled,n_unlabeled";

    /// Appends one flat CSV line per coefficient; `group` tags the rows (site, run).
    pub fn write_csv_rows<W: Write>(&self, group: &str, out: &mut W) -> std::io::Result<()> {
        let mode = match self.lambda.mode {
            LambdaModeTag::Fixed => "fixed",
            LambdaModeTag::Tuned => "tuned",
            LambdaModeTag::NotApplicable => "not-applicable",
        };
        for c in &self.coefficients {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                csv_field(group),
                self.estimator.as_str(),
                csv_field(&c.class),
                csv_field(&c.reference),
                csv_field(&c.covariate),
                c.estimate,
                c.std_error,
                c.lower,
                c.upper,
                mode,
                self.lambda.raw,
                self.lambda.clipped,
                self.n_labeled,
                self.n_unlabeled
            )?;
        }
        Ok(())
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
