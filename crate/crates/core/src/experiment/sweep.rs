use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlogit::NewtonOptions;
use crate::ppi::{infer_multippi, CoefficientLabels, LambdaMode, PpiInputs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Set when the fit at this lambda failed; estimates are then empty.
    pub error: Option<String>,
}

/// Fixed-lambda rectified fits over `grid`, in grid order. A failed fit
/// (for instance an unbounded objective near lambda = 1) is recorded in its
/// row rather than aborting the sweep.
pub fn lambda_sweep(
    inputs: &PpiInputs,
    grid: &[f64],
    alpha: f64,
    labels: &CoefficientLabels,
    options: &NewtonOptions,
) -> Result<Vec<SweepRow>> {
    if let Some(bad) = grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::Parameter(format!("sweep value {bad} outside [0, 1]")));
    }
    inputs.validate()?;
    Ok(grid
        .iter()
        .map(|&lambda| match infer_multippi(inputs, LambdaMode::Fixed(lambda), alpha, labels, options) {
            Ok(r) => SweepRow { lambda, estimates: r.estimates(), std_errors: r.std_errors(), error: None },
            Err(e) => SweepRow { lambda, estimates: Vec::new(), std_errors: Vec::new(), error: Some(e.to_string()) },
        })
        .collect())
}

/// Evenly spaced grid `0, step, ..., 1`.
pub fn uniform_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Parameter(format!("grid step must lie in (0, 1], got {step}")));
    }
    let m = (1.0 / step).round() as usize;
    Ok((0..=m).map(|i| (i as f64 / m as f64).min(1.0)).collect())
}
