use super::covariance::{classical_sandwich, sandwich_covariance};
use super::lambda::{tune_lambda, LambdaChoice, LambdaMode, LambdaModeTag};
use super::rectified::RectifiedObjective;
use super::report::{CoefficientLabels, EstimatorKind, InferenceReport, LambdaRecord};
use super::PpiInputs;
use crate::error::{Error, Result};
use crate::mlogit::{fit_mle, minimize, Coefficients, Design, FitDiagnostics, ModelShape, NewtonOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPpiFit {
    pub coefficients: Coefficients,
    pub lambda: LambdaChoice,
    /// Diagnostics of the final fit. `converged == false` marks a failed solve.
    pub diagnostics: FitDiagnostics,
    /// Diagnostics of the lambda = 1 pilot fit in tuned mode.
    pub pilot: Option<FitDiagnostics>,
}

/// Minimizes the rectified objective, tuning lambda if requested.
pub fn fit_multippi(inputs: &PpiInputs, mode: LambdaMode, options: &NewtonOptions) -> Result<MultiPpiFit> {
    inputs.validate()?;
    let (lambda, pilot) = match mode {
        LambdaMode::Fixed(v) => {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter(format!("fixed lambda must lie in [0, 1], got {v}")));
            }
            (LambdaChoice::fixed(v), None)
        }
        LambdaMode::Tuned => {
            let (pilot_lambda, theta_pilot, pilot_diag) = pilot_fit(inputs, options)?;
            let mut choice = tune_lambda(inputs, &theta_pilot, options.ridge)?;
            if pilot_lambda < 1.0 {
                choice.warnings.push(format!("rectified objective unbounded at lambda = 1; pilot fit used lambda = {pilot_lambda}"));
            }
            if !pilot_diag.converged {
                choice.warnings.push(format!("pilot fit did not converge ({:?})", pilot_diag.status));
            }
            (choice, Some(pilot_diag))
        }
    };
    let obj = RectifiedObjective::new(inputs, lambda.clipped)?;
    let (theta, diagnostics) = minimize(&obj, None, options)?;
    Ok(MultiPpiFit { coefficients: Coefficients { shape: inputs.shape, values: theta }, lambda, diagnostics, pilot })
}

/// Pilot lambdas tried in order; the first bounded fit wins.
const PILOT_LAMBDAS: [f64; 3] = [1.0, 0.5, 0.0];

fn pilot_fit(inputs: &PpiInputs, options: &NewtonOptions) -> Result<(f64, Vec<f64>, FitDiagnostics)> {
    let mut last = None;
    for &lambda in &PILOT_LAMBDAS {
        match minimize(&RectifiedObjective::new(inputs, lambda)?, None, options) {
            Ok((theta, diag)) => return Ok((lambda, theta, diag)),
            Err(e @ Error::Separation { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one pilot lambda"))
}

/// Rectified fit plus sandwich intervals.
pub fn infer_multippi(
    inputs: &PpiInputs,
    mode: LambdaMode,
    alpha: f64,
    labels: &CoefficientLabels,
    options: &NewtonOptions,
) -> Result<InferenceReport> {
    let fit = fit_multippi(inputs, mode, options)?;
    let cov = sandwich_covariance(&fit.coefficients.values, inputs, fit.lambda.clipped, options.ridge)?;
    let mut warnings = fit.lambda.warnings.clone();
    if !fit.diagnostics.converged {
        warnings.push(format!("rectified fit did not converge ({:?})", fit.diagnostics.status));
    }
    if cov.condition_warning {
        warnings.push("pooled Hessian inverted with a ridge".into());
    }
    let mut diagnostics = fit.diagnostics.clone();
    diagnostics.condition_warning |= cov.condition_warning || fit.lambda.condition_warning;
    InferenceReport::assemble(
        EstimatorKind::Multippi,
        &fit.coefficients.values,
        &cov.sigma,
        inputs.shape,
        labels,
        alpha,
        LambdaRecord::from(&fit.lambda),
        inputs.n(),
        inputs.N(),
        diagnostics,
        warnings,
    )
}

fn classical_report(
    kind: EstimatorKind,
    design: &Design,
    labels_y: &[usize],
    shape: ModelShape,
    alpha: f64,
    names: &CoefficientLabels,
    options: &NewtonOptions,
) -> Result<InferenceReport> {
    let n = design.rows();
    let p = shape.n_params();
    if n < p + 1 {
        return Err(Error::Precondition(format!("{n} rows; need at least d(K-1)+1 = {}", p + 1)));
    }
    let (coef, mut diagnostics) = fit_mle(design, labels_y, shape, options)?;
    let cov = classical_sandwich(&coef.values, design, labels_y, shape, options.ridge)?;
    let mut warnings = Vec::new();
    if !diagnostics.converged {
        warnings.push(format!("fit did not converge ({:?})", diagnostics.status));
    }
    if cov.condition_warning {
        diagnostics.condition_warning = true;
        warnings.push("Hessian inverted with a ridge".into());
    }
    let lambda = match kind {
        EstimatorKind::Naive => LambdaRecord { mode: LambdaModeTag::NotApplicable, raw: 0.0, clipped: 0.0 },
        _ => LambdaRecord { mode: LambdaModeTag::Fixed, raw: 0.0, clipped: 0.0 },
    };
    InferenceReport::assemble(kind, &coef.values, &cov.sigma, shape, names, alpha, lambda, n, 0, diagnostics, warnings)
}

/// Classical MLE with sandwich intervals on labeled rows. Use
/// [`EstimatorKind::GroundTruth`] when the rows are the full dataset and
/// [`EstimatorKind::Classical`] for a labeled subset.
pub fn fit_classical(
    design: &Design,
    labels_y: &[usize],
    shape: ModelShape,
    alpha: f64,
    names: &CoefficientLabels,
    kind: EstimatorKind,
    options: &NewtonOptions,
) -> Result<InferenceReport> {
    if !matches!(kind, EstimatorKind::GroundTruth | EstimatorKind::Classical) {
        return Err(Error::Parameter("fit_classical reports ground-truth or classical only".into()));
    }
    classical_report(kind, design, labels_y, shape, alpha, names, options)
}

/// Classical fit treating predicted labels as truth on every row.
pub fn fit_naive(
    design: &Design,
    predicted: &[usize],
    shape: ModelShape,
    alpha: f64,
    names: &CoefficientLabels,
    options: &NewtonOptions,
) -> Result<InferenceReport> {
    classical_report(EstimatorKind::Naive, design, predicted, shape, alpha, names, options)
}
