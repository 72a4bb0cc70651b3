use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A smooth convex objective with analytic derivatives.
pub trait Objective {
    fn n_params(&self) -> usize;
    fn value(&self, theta: &[f64]) -> Result<f64>;
    fn gradient(&self, theta: &[f64]) -> Result<DVector<f64>>;
    fn hessian(&self, theta: &[f64]) -> Result<DMatrix<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Converged once the gradient max-norm is at or below this.
    pub gradient_tolerance: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking step multiplier.
    pub shrink: f64,
    /// Coefficient 2-norm above which a still-decreasing fit is declared separated.
    pub separation_bound: f64,
    /// Initial ridge added to the Hessian when its Cholesky factorization fails.
    pub ridge: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iterations: 100,
            gradient_tolerance: 1e-8,
            armijo: 1e-4,
            shrink: 0.5,
            separation_bound: 1e4,
            ridge: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    /// Max-norm of the final gradient.
    pub gradient_norm: f64,
    pub converged: bool,
    /// Set when a Hessian needed a ridge to factor.
    pub condition_warning: bool,
    pub status: FitStatus,
}

/// Solves `H x = b` by Cholesky, adding a growing ridge when `H` fails to
/// factor. Returns the solution and whether a ridge was needed.
pub(crate) fn ridge_solve(h: &DMatrix<f64>, b: &DVector<f64>, ridge: f64) -> Result<(DVector<f64>, bool)> {
    if let Some(ch) = h.clone().cholesky() {
        return Ok((ch.solve(b), false));
    }
    let scale = h.diagonal().amax().max(1.0);
    let mut r = ridge * scale;
    for _ in 0..16 {
        let shifted = h + DMatrix::identity(h.nrows(), h.ncols()) * r;
        if let Some(ch) = shifted.cholesky() {
            return Ok((ch.solve(b), true));
        }
        r *= 10.0;
    }
    Err(Error::Numeric("Hessian could not be factored even with a ridge".into()))
}

/// Damped Newton with Armijo backtracking, started at `start` (zero when `None`).
pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    start: Option<&[f64]>,
    options: &NewtonOptions,
) -> Result<(Vec<f64>, FitDiagnostics)> {
    let p = objective.n_params();
    let mut theta = match start {
        Some(s) if s.len() == p => DVector::from_column_slice(s),
        Some(s) => return Err(Error::Shape(format!("start has length {}, expected {p}", s.len()))),
        None => DVector::zeros(p),
    };
    let mut value = objective.value(theta.as_slice())?;
    if !value.is_finite() {
        return Err(Error::Numeric("objective is not finite at the starting point".into()));
    }
    let mut condition_warning = false;
    let mut iterations = 0;
    let mut status = FitStatus::MaxIterations;
    let mut grad = objective.gradient(theta.as_slice())?;

    while iterations < options.max_iterations {
        if grad.amax() <= options.gradient_tolerance {
            status = FitStatus::Converged;
            break;
        }
        iterations += 1;
        let hess = objective.hessian(theta.as_slice())?;
        let (step, ridged) = ridge_solve(&hess, &(-&grad), options.ridge)?;
        condition_warning |= ridged;
        let slope = grad.dot(&step);
        // Round-off slack so that steps taken at the optimum are accepted.
        let slack = 8.0 * f64::EPSILON * value.abs();

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &theta + &step * t;
            if let Ok(v) = objective.value(candidate.as_slice()) {
                if v.is_finite() && v <= value + options.armijo * t * slope + slack {
                    accepted = Some((candidate, v));
                    break;
                }
            }
            t *= options.shrink;
        }
        let Some((candidate, v)) = accepted else {
            status = FitStatus::LineSearchStalled;
            break;
        };
        let decreased = v < value;
        theta = candidate;
        value = v;
        grad = objective.gradient(theta.as_slice())?;
        let norm = theta.norm();
        if decreased && norm > options.separation_bound {
            return Err(Error::Separation { norm, bound: options.separation_bound, iterations });
        }
    }
    if status == FitStatus::MaxIterations && grad.amax() <= options.gradient_tolerance {
        status = FitStatus::Converged;
    }
    // A small gradient can also mean the loss is flattening toward an infimum
    // at infinity; probe the ray through theta out to the bound.
    let norm = theta.norm();
    if norm > 0.0 && norm < options.separation_bound {
        let far = &theta * (options.separation_bound / norm);
        if let Ok(v) = objective.value(far.as_slice()) {
            if v.is_finite() && v < value - 8.0 * f64::EPSILON * value.abs() {
                return Err(Error::Separation { norm, bound: options.separation_bound, iterations });
            }
        }
    }
    let diag = FitDiagnostics {
        iterations,
        gradient_norm: grad.amax(),
        converged: status == FitStatus::Converged,
        condition_warning,
        status,
    };
    Ok((theta.as_slice().to_vec(), diag))
}
