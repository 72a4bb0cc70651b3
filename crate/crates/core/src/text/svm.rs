use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::bow::SparseVector;
use crate::error::{Error, Result};
use crate::ingest::CodClass;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmOptions {
    /// Hinge-loss weight against the `||w||^2 / 2` penalty.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions { c: 1.0, epochs: 20, seed: 0x5eed }
    }
}

/// One-vs-rest linear hinge-loss classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<CodClass>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub options: SvmOptions,
}

/// Trains one binary classifier per class by stochastic subgradient descent
/// on `||w||^2 / 2 + C * sum hinge(y (w.x + b))`.
///
/// Steps follow the Pegasos schedule `1 / (lambda t)` with `lambda = 1 / (C n)`;
/// the unpenalized bias takes steps `1 / t`. Visiting order is a seeded
/// shuffle per epoch, shared by all classes.
pub fn train_svm_ovr(x: &[SparseVector], y: &[CodClass], vocab_size: usize, options: SvmOptions) -> Result<SvmModel> {
    if !(options.c > 0.0 && options.c.is_finite()) {
        return Err(Error::Parameter(format!("C must be positive, got {}", options.c)));
    }
    if options.epochs == 0 {
        return Err(Error::Parameter("epochs must be at least 1".into()));
    }
    let classes = super::check_training(x, y, vocab_size)?;
    if classes.len() < 2 {
        return Err(Error::Degenerate("svm training data contains a single class".into()));
    }
    let n = x.len();
    let lambda = 1.0 / (options.c * n as f64);
    let mut rng = stream_rng(options.seed, 0);
    let mut schedule = Vec::with_capacity(n * options.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..options.epochs {
        order.shuffle(&mut rng);
        schedule.extend_from_slice(&order);
    }

    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for &class in &classes {
        // w = scale * v keeps the shrink step O(1).
        let mut v = vec![0.0; vocab_size];
        let mut scale = 1.0;
        let mut b = 0.0;
        for (step, &i) in schedule.iter().enumerate() {
            let t = (step + 1) as f64;
            let target = if y[i] == class { 1.0 } else { -1.0 };
            let margin = target * (scale * x[i].dot_dense(&v) + b);
            let eta = 1.0 / (lambda * t);
            let shrink = 1.0 - 1.0 / t;
            if shrink == 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let g = eta * target / scale;
                for &(j, w) in x[i].entries() {
                    v[j] += g * w;
                }
                b += target / t;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        v.iter_mut().for_each(|w| *w *= scale);
        if v.iter().any(|w| !w.is_finite()) || !b.is_finite() {
            return Err(Error::Numeric("svm weights diverged".into()));
        }
        weights.push(v);
        biases.push(b);
    }
    Ok(SvmModel { classes, weights, biases, options })
}

impl SvmModel {
    pub fn decision_values(&self, x: &SparseVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| x.entries().iter().filter(|e| e.0 < w.len()).map(|&(j, v)| v * w[j]).sum::<f64>() + b)
            .collect()
    }
}

/// Class with the largest decision value; ties go to the earlier class.
pub fn predict_svm(model: &SvmModel, x: &SparseVector) -> CodClass {
    model.classes[super::argmax(&model.decision_values(x))]
}
