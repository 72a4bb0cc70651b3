use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::covariance::{cross_covariance, sample_covariance, spd_inverse, stack};
use super::PpiInputs;
use crate::error::{Error, Result};
use crate::mlogit::{hessian_sum, row_gradients};

/// How the rectification weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LambdaMode {
    Fixed(f64),
    /// Pilot fit at lambda = 1, plug-in estimate, final fit at the clipped estimate.
    #[default]
    Tuned,
}

impl fmt::Display for LambdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaMode::Tuned => f.write_str("tuned"),
            LambdaMode::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for LambdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("tuned") {
            return Ok(LambdaMode::Tuned);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Parameter(format!("lambda must be `tuned` or a number in [0, 1], got `{s}`")))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Parameter(format!("fixed lambda must lie in [0, 1], got {v}")));
        }
        Ok(LambdaMode::Fixed(v))
    }
}

impl Serialize for LambdaMode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LambdaMode::Tuned => s.serialize_str("tuned"),
            LambdaMode::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(LambdaMode::Fixed(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaModeTag {
    Fixed,
    Tuned,
    /// The estimator has no rectification weight (naive).
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaChoice {
    /// Unclipped plug-in value (equal to `clipped` for fixed lambda).
    pub raw: f64,
    /// `min(1, max(0, raw))`, the value actually used.
    pub clipped: f64,
    pub mode: LambdaModeTag,
    pub condition_warning: bool,
    pub warnings: Vec<String>,
}

impl LambdaChoice {
    pub fn fixed(value: f64) -> Self {
        LambdaChoice { raw: value, clipped: value.clamp(0.0, 1.0), mode: LambdaModeTag::Fixed, condition_warning: false, warnings: vec![] }
    }

    pub fn from_raw(raw: f64) -> Self {
        LambdaChoice { raw, clipped: raw.clamp(0.0, 1.0), mode: LambdaModeTag::Tuned, condition_warning: false, warnings: vec![] }
    }
}

/// Plug-in estimate of the variance-minimizing lambda at `theta_pilot`:
///
/// ```text
/// lambda = 1 / (2 (1 + n/N)) * tr(H^-1 (C + C^T) H^-1) / tr(H^-1 V H^-1)
/// ```
///
/// with `C = Cov_n(grad l(y), grad l(yhat))` over labeled rows, `V` the
/// covariance of predicted-label gradients pooled over all `n + N` rows, and
/// `H` the pooled empirical Hessian. The result is clipped to `[0, 1]`.
pub fn tune_lambda(inputs: &PpiInputs, theta_pilot: &[f64], ridge: f64) -> Result<LambdaChoice> {
    inputs.validate()?;
    if theta_pilot.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("pilot estimate is not finite".into()));
    }
    let s = inputs.shape;
    let n = inputs.n() as f64;
    let big_n = inputs.N() as f64;

    let h = (hessian_sum(theta_pilot, &inputs.labeled_x, s)? + hessian_sum(theta_pilot, &inputs.unlabeled_x, s)?)
        / (n + big_n);
    let (h_inv, condition_warning) = spd_inverse(&h, ridge)?;

    let g_true = row_gradients(theta_pilot, &inputs.labeled_x, &inputs.labeled_y, s)?;
    let g_pred_l = row_gradients(theta_pilot, &inputs.labeled_x, &inputs.labeled_yhat, s)?;
    let g_pred_u = row_gradients(theta_pilot, &inputs.unlabeled_x, &inputs.unlabeled_yhat, s)?;

    let cross = cross_covariance(&g_true, &g_pred_l)?;
    let pooled = sample_covariance(&stack(&g_pred_l, &g_pred_u))?;

    let num = (&h_inv * (&cross + cross.transpose()) * &h_inv).trace();
    let den = (&h_inv * pooled * &h_inv).trace();

    let mut warnings = Vec::new();
    if condition_warning {
        warnings.push("pooled Hessian was singular; inverted with a ridge".to_string());
    }
    let raw = if !den.is_finite() || den <= 0.0 {
        warnings.push("predicted-label gradient variance is zero; lambda set to 0".to_string());
        0.0
    } else {
        num / (2.0 * (1.0 + n / big_n) * den)
    };
    let mut choice = LambdaChoice::from_raw(raw);
    choice.condition_warning = condition_warning;
    choice.warnings = warnings;
    Ok(choice)
}
