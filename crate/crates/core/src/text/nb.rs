use serde::{Deserialize, Serialize};

use super::bow::SparseVector;
use super::check_training;
use crate::error::{Error, Result};
use crate::ingest::CodClass;

/// Multinomial naive Bayes over token counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    /// Classes seen in training, in enumeration order.
    pub classes: Vec<CodClass>,
    pub log_prior: Vec<f64>,
    /// `log_likelihood[c][j]` is `ln P(token j | class c)`.
    pub log_likelihood: Vec<Vec<f64>>,
    pub alpha: f64,
}

/// Fits class priors and Laplace-smoothed token distributions with
/// pseudo-count `alpha`, in log space.
pub fn train_nb(x: &[SparseVector], y: &[CodClass], vocab_size: usize, alpha: f64) -> Result<NbModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("smoothing alpha must be positive, got {alpha}")));
    }
    let classes = check_training(x, y, vocab_size)?;
    let k = classes.len();
    let mut docs = vec![0usize; k];
    let mut counts = vec![vec![0.0; vocab_size]; k];
    for (v, c) in x.iter().zip(y) {
        let ci = classes.binary_search(c).expect("class collected above");
        docs[ci] += 1;
        for &(j, w) in v.entries() {
            counts[ci][j] += w;
        }
    }
    let n = x.len() as f64;
    let log_prior = docs.iter().map(|&d| (d as f64 / n).ln()).collect();
    let log_likelihood = counts
        .iter()
        .map(|row| {
            let total = row.iter().sum::<f64>() + alpha * vocab_size as f64;
            row.iter().map(|&c| ((c + alpha) / total).ln()).collect()
        })
        .collect();
    Ok(NbModel { classes, log_prior, log_likelihood, alpha })
}

impl NbModel {
    pub fn vocab_size(&self) -> usize {
        self.log_likelihood.first().map_or(0, Vec::len)
    }

    /// Unnormalized log posterior per class.
    pub fn scores(&self, x: &SparseVector) -> Vec<f64> {
        self.log_prior
            .iter()
            .zip(&self.log_likelihood)
            .map(|(p, ll)| p + x.entries().iter().filter(|e| e.0 < ll.len()).map(|&(j, w)| w * ll[j]).sum::<f64>())
            .collect()
    }

    /// Highest-scoring class; ties go to the earlier class.
    pub fn predict(&self, x: &SparseVector) -> CodClass {
        self.classes[super::argmax(&self.scores(x))]
    }
}
