use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CodClass;

/// Counts with rows = truth and columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>, counts: Vec<Vec<usize>>) -> Result<Self> {
        let k = labels.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("confusion matrix must be K x K".into()));
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    /// Tallies class indices in `0..k`.
    pub fn from_indices(truth: &[usize], predicted: &[usize], labels: Vec<String>) -> Result<Self> {
        let k = labels.len();
        if truth.len() != predicted.len() {
            return Err(Error::Shape("truth and predictions differ in length".into()));
        }
        let mut counts = vec![vec![0; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::Parameter(format!("class index out of range for K={k}")));
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    /// Tallies over the five broad classes in enumeration order.
    pub fn from_classes(truth: &[CodClass], predicted: &[CodClass]) -> Result<Self> {
        let idx = |c: &CodClass| c.ordinal().ok_or_else(|| Error::Parameter("unclassified label in confusion matrix".into()));
        let t = truth.iter().map(idx).collect::<Result<Vec<_>>>()?;
        let p = predicted.iter().map(idx).collect::<Result<Vec<_>>>()?;
        Self::from_indices(&t, &p, CodClass::BROAD.iter().map(|c| c.to_string()).collect())
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_totals(&self) -> Vec<usize> {
        (0..self.labels.len()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

/// `trace / total`; NaN for an empty matrix.
pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    let hits: usize = (0..cm.labels.len()).map(|i| cm.counts[i][i]).sum();
    hits as f64 / cm.total() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Summary {
    pub macro_f1: f64,
    pub per_class: Vec<f64>,
    /// Classes with precision + recall = 0, scored as F1 = 0.
    pub zero_f1_classes: Vec<String>,
    /// Classes with neither true nor predicted instances.
    pub absent_classes: Vec<String>,
}

/// Unweighted mean of per-class F1 over every class of the matrix.
pub fn macro_f1(cm: &ConfusionMatrix) -> F1Summary {
    let rows = cm.row_totals();
    let cols = cm.column_totals();
    let mut per_class = Vec::with_capacity(rows.len());
    let mut zero = Vec::new();
    let mut absent = Vec::new();
    for i in 0..rows.len() {
        let tp = cm.counts[i][i] as f64;
        let precision = if cols[i] > 0 { tp / cols[i] as f64 } else { 0.0 };
        let recall = if rows[i] > 0 { tp / rows[i] as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            zero.push(cm.labels[i].clone());
            0.0
        };
        if rows[i] == 0 && cols[i] == 0 {
            absent.push(cm.labels[i].clone());
        }
        per_class.push(f1);
    }
    F1Summary {
        macro_f1: per_class.iter().sum::<f64>() / per_class.len() as f64,
        per_class,
        zero_f1_classes: zero,
        absent_classes: absent,
    }
}
