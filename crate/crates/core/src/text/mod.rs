//! Bag-of-words cause predictors and external prediction files.
//!
//! Three classifiers are provided: multinomial naive Bayes on raw counts,
//! k-nearest neighbours on cosine similarity of tf-idf vectors, and a linear
//! one-vs-rest SVM on unit-length tf-idf vectors.

mod bow;
mod knn;
mod nb;
mod predictions;
mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bow::{build_vocabulary, tokenize, vectorize, SparseVector, Vocabulary, Weighting};
pub use knn::{cosine, predict_knn, KnnModel, DEFAULT_K};
pub use nb::{train_nb, NbModel};
pub use predictions::{
    load_external_predictions, majority_class, parse_external_predictions, read_external_predictions, PredictionCounts,
    PredictionSet, Provenance, RawPredictions, UnclassifiedPolicy,
};
pub use svm::{predict_svm, train_svm_ovr, SvmModel, SvmOptions};

use crate::error::{Error, Result};
use crate::ingest::{CodClass, VaRecord};

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Validates a training set and returns its classes in enumeration order.
fn check_training(x: &[SparseVector], y: &[CodClass], vocab_size: usize) -> Result<Vec<CodClass>> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} vectors but {} labels", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::Precondition("training set is empty".into()));
    }
    if y.iter().any(|c| c.is_unclassified()) {
        return Err(Error::Precondition("training labels must not be unclassified".into()));
    }
    if x.iter().any(|v| v.entries().last().is_some_and(|e| e.0 >= vocab_size)) {
        return Err(Error::Shape(format!("feature index beyond vocabulary size {vocab_size}")));
    }
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    Ok(classes)
}

/// First index of the maximum.
fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    Nb,
    Knn,
    Svm,
}

impl PredictorKind {
    pub fn provenance(self) -> Provenance {
        match self {
            PredictorKind::Nb => Provenance::Nb,
            PredictorKind::Knn => Provenance::Knn,
            PredictorKind::Svm => Provenance::Svm,
        }
    }

    /// Feature weighting the predictor is trained on.
    pub fn weighting(self) -> Weighting {
        match self {
            PredictorKind::Nb => Weighting::Count,
            PredictorKind::Knn | PredictorKind::Svm => Weighting::TfIdf,
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.provenance().fmt(f)
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nb" => Ok(PredictorKind::Nb),
            "knn" => Ok(PredictorKind::Knn),
            "svm" => Ok(PredictorKind::Svm),
            _ => Err(Error::Parameter(format!("unknown predictor `{s}`"))),
        }
    }
}

/// Predictor choice and hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    pub min_count: usize,
    pub nb_alpha: f64,
    pub knn_k: usize,
    pub svm: SvmOptions,
}

impl PredictorSpec {
    pub fn new(kind: PredictorKind) -> Self {
        PredictorSpec { kind, min_count: 2, nb_alpha: 1.0, knn_k: DEFAULT_K, svm: SvmOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ModelParams {
    Nb(NbModel),
    Knn(KnnModel),
    Svm(SvmModel),
}

/// A fitted predictor together with its vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: PredictorSpec,
    pub vocabulary: Vocabulary,
    pub params: ModelParams,
}

impl TrainedModel {
    /// Builds the vocabulary from `narratives` and trains on them.
    pub fn train<S: AsRef<str> + Sync>(spec: PredictorSpec, narratives: &[S], labels: &[CodClass]) -> Result<Self> {
        if narratives.len() != labels.len() {
            return Err(Error::Shape(format!("{} narratives but {} labels", narratives.len(), labels.len())));
        }
        let tokens: Vec<Vec<String>> = narratives.par_iter().map(|t| tokenize(t.as_ref())).collect();
        let vocabulary = build_vocabulary(&tokens, spec.min_count)?;
        let v = vocabulary.len();
        let features = |w: Weighting| -> Vec<SparseVector> { tokens.par_iter().map(|t| vectorize(t, &vocabulary, w)).collect() };
        let params = match spec.kind {
            PredictorKind::Nb => ModelParams::Nb(train_nb(&features(Weighting::Count), labels, v, spec.nb_alpha)?),
            PredictorKind::Knn => ModelParams::Knn(KnnModel::new(features(Weighting::TfIdf), labels.to_vec(), v, spec.knn_k)?),
            PredictorKind::Svm => {
                let x: Vec<_> = features(Weighting::TfIdf).iter().map(SparseVector::l2_normalized).collect();
                ModelParams::Svm(train_svm_ovr(&x, labels, v, spec.svm)?)
            }
        };
        Ok(TrainedModel { format_version: MODEL_FORMAT_VERSION, spec, vocabulary, params })
    }

    pub fn predict(&self, narrative: &str) -> CodClass {
        let tokens = tokenize(narrative);
        let x = vectorize(&tokens, &self.vocabulary, self.spec.kind.weighting());
        match &self.params {
            ModelParams::Nb(m) => m.predict(&x),
            ModelParams::Knn(m) => m.predict(&x),
            ModelParams::Svm(m) => predict_svm(m, &x.l2_normalized()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut m: TrainedModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        if let ModelParams::Knn(k) = m.params {
            m.params = ModelParams::Knn(k.restore());
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Predicts every record's cause with `model`, in record order.
pub fn predict_all(model: &TrainedModel, records: &[VaRecord]) -> PredictionSet {
    let labels: Vec<CodClass> = records.par_iter().map(|r| model.predict(&r.narrative)).collect();
    let raw = RawPredictions {
        provenance: model.spec.kind.provenance(),
        record_ids: records.iter().map(|r| r.record_id.clone()).collect(),
        labels,
    };
    raw.resolve(UnclassifiedPolicy::Drop, None).expect("bag-of-words predictors never abstain")
}
