use std::collections::{BTreeSet, HashMap, HashSet};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analysis::{analyze, AnalysisOutcome, InferenceSpec};
use super::metrics::{accuracy, macro_f1, ConfusionMatrix, F1Summary};
use crate::error::{Error, Result};
use crate::ingest::{split, CodClass, SplitParams, SplitStrategy, VaRecord};
use crate::rng::{stream_key, stream_rng};
use crate::text::{
    majority_class, PredictionCounts, PredictorSpec, RawPredictions, TrainedModel, UnclassifiedPolicy,
};

/// Where held-out-site predictions come from.
#[derive(Debug, Clone)]
pub enum PredictorSource {
    /// Train on the other sites' narratives and truth.
    Train(PredictorSpec),
    /// Precomputed predictions keyed by record id.
    External(RawPredictions),
}

#[derive(Debug, Clone)]
pub struct LosoSpec {
    pub predictor: PredictorSource,
    pub policy: UnclassifiedPolicy,
    pub split: SplitStrategy,
    pub labeled_fraction: f64,
    pub seed: u64,
    pub inference: InferenceSpec,
    /// Restrict to these held-out sites; `None` runs all.
    pub sites: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyStats {
    pub size: usize,
    pub min_count: usize,
    pub raw_token_total: usize,
    pub retained_token_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub strategy: SplitStrategy,
    pub labeled_fraction: f64,
    pub seed: u64,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    /// Which records the labeled subset is drawn from.
    pub labeled_source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteReport {
    pub site: String,
    pub provenance: String,
    pub training_sites: Vec<String>,
    pub n_training_records: usize,
    pub n_site_records: usize,
    pub vocabulary: Option<VocabularyStats>,
    pub raw_prediction_counts: PredictionCounts,
    pub dropped: Vec<String>,
    pub imputed: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub f1: F1Summary,
    pub split: SplitInfo,
    pub inference: AnalysisOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteFailure {
    pub site: String,
    pub kind: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoOutcome {
    pub reports: Vec<SiteReport>,
    pub skipped: Vec<SiteFailure>,
}

/// Distinct sites in sorted order.
pub fn sites_of(records: &[VaRecord]) -> Vec<String> {
    records.iter().map(|r| r.site.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Record indices outside and inside `site`.
pub fn partition_by_site(records: &[VaRecord], site: &str) -> (Vec<usize>, Vec<usize>) {
    (0..records.len()).partition(|&i| records[i].site != site)
}

/// Seed of the labeled/unlabeled split for the site at `site_index` in [`sites_of`].
pub fn site_split_seed(master: u64, site_index: usize) -> u64 {
    stream_rng(master, stream_key(site_index, 0)).next_u64()
}

/// Leave-one-site-out evaluation. For each held-out site: predict its
/// records from the other sites, keep true labels on a random
/// `labeled_fraction` of the site, and fit the estimators.
pub fn run_loso(records: &[VaRecord], spec: &LosoSpec) -> Result<LosoOutcome> {
    run_loso_with_progress(records, spec, &|_| {})
}

pub fn run_loso_with_progress(
    records: &[VaRecord],
    spec: &LosoSpec,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<LosoOutcome> {
    let all_sites = sites_of(records);
    if all_sites.len() < 2 {
        return Err(Error::Precondition(format!("leave-one-site-out needs at least 2 sites, found {}", all_sites.len())));
    }
    if let Some(r) = records.iter().find(|r| r.true_cause.is_none_or(CodClass::is_unclassified)) {
        return Err(Error::Precondition(format!("record `{}` has no true cause", r.record_id)));
    }
    let selected: Vec<(usize, &String)> = match &spec.sites {
        None => all_sites.iter().enumerate().collect(),
        Some(want) => {
            if let Some(bad) = want.iter().find(|w| !all_sites.contains(w)) {
                return Err(Error::Parameter(format!("unknown site `{bad}`")));
            }
            all_sites.iter().enumerate().filter(|(_, s)| want.contains(s)).collect()
        }
    };
    let results: Vec<std::result::Result<SiteReport, SiteFailure>> = selected
        .par_iter()
        .map(|&(index, site)| {
            let r = run_site(records, &all_sites, index, spec).map_err(|e| SiteFailure {
                site: site.clone(),
                kind: e.kind().to_string(),
                error: e.to_string(),
            });
            progress(&match &r {
                Ok(rep) => format!("site {site}: accuracy {:.3}", rep.accuracy),
                Err(f) => format!("site {site}: skipped ({})", f.error),
            });
            r
        })
        .collect();
    let mut out = LosoOutcome { reports: Vec::new(), skipped: Vec::new() };
    for r in results {
        match r {
            Ok(rep) => out.reports.push(rep),
            Err(f) => out.skipped.push(f),
        }
    }
    Ok(out)
}

fn run_site(records: &[VaRecord], all_sites: &[String], index: usize, spec: &LosoSpec) -> Result<SiteReport> {
    let site = &all_sites[index];
    let (train, held) = partition_by_site(records, site);
    let truth = |i: usize| records[i].true_cause.expect("checked by caller");

    let (labels, provenance, vocabulary) = match &spec.predictor {
        PredictorSource::Train(pspec) => {
            let text: Vec<&str> = train.iter().map(|&i| records[i].narrative.as_str()).collect();
            let y: Vec<CodClass> = train.iter().map(|&i| truth(i)).collect();
            let model = TrainedModel::train(*pspec, &text, &y)?;
            let labels: Vec<CodClass> = held.par_iter().map(|&i| model.predict(&records[i].narrative)).collect();
            let v = &model.vocabulary;
            let stats = VocabularyStats {
                size: v.len(),
                min_count: v.min_count(),
                raw_token_total: v.raw_token_total(),
                retained_token_total: v.retained_token_total(),
            };
            (labels, pspec.kind.provenance(), Some(stats))
        }
        PredictorSource::External(raw) => {
            let map: HashMap<&str, CodClass> =
                raw.record_ids.iter().map(String::as_str).zip(raw.labels.iter().copied()).collect();
            let mut missing = Vec::new();
            let labels: Vec<CodClass> = held
                .iter()
                .map(|&i| {
                    map.get(records[i].record_id.as_str()).copied().unwrap_or_else(|| {
                        missing.push(records[i].record_id.clone());
                        CodClass::Unclassified
                    })
                })
                .collect();
            if !missing.is_empty() {
                return Err(Error::Precondition(format!(
                    "{} record(s) of site {site} have no external prediction (first: {})",
                    missing.len(),
                    missing[0]
                )));
            }
            (labels, raw.provenance.clone(), None)
        }
    };

    // Split the held-out site into labeled and unlabeled parts.
    let site_records: Vec<VaRecord> = held.iter().map(|&i| records[i].clone()).collect();
    let params = SplitParams { strategy: spec.split, labeled_fraction: spec.labeled_fraction, seed: site_split_seed(spec.seed, index) };
    let parts = split(&site_records, &params)?;
    let majority = majority_class(parts.labeled.iter().map(|&i| site_records[i].true_cause.as_ref().unwrap()));
    let raw = RawPredictions {
        provenance: provenance.clone(),
        record_ids: site_records.iter().map(|r| r.record_id.clone()).collect(),
        labels,
    };
    let resolved = raw.resolve(spec.policy, majority)?;

    // Drop rows the policy removed, re-indexing the split.
    let dropped: HashSet<&str> = resolved.dropped.iter().map(String::as_str).collect();
    let mut new_index = vec![usize::MAX; site_records.len()];
    let mut kept = Vec::with_capacity(site_records.len() - dropped.len());
    for (i, r) in site_records.iter().enumerate() {
        if !dropped.contains(r.record_id.as_str()) {
            new_index[i] = kept.len();
            kept.push(r.clone());
        }
    }
    let remap = |v: &[usize]| v.iter().map(|&i| new_index[i]).filter(|&j| j != usize::MAX).collect::<Vec<_>>();
    let (labeled, unlabeled) = (remap(&parts.labeled), remap(&parts.unlabeled));
    let predicted = resolved.labels.clone();

    let kept_truth: Vec<CodClass> = kept.iter().map(|r| r.true_cause.unwrap()).collect();
    let confusion = ConfusionMatrix::from_classes(&kept_truth, &predicted)?;
    let inference = analyze(&kept, &predicted, &labeled, &unlabeled, &spec.inference)?;

    Ok(SiteReport {
        site: site.clone(),
        provenance: provenance.to_string(),
        training_sites: all_sites.iter().filter(|s| *s != site).cloned().collect(),
        n_training_records: train.len(),
        n_site_records: held.len(),
        vocabulary,
        raw_prediction_counts: resolved.raw_counts.clone(),
        dropped: resolved.dropped.clone(),
        imputed: resolved.imputed.clone(),
        accuracy: accuracy(&confusion),
        f1: macro_f1(&confusion),
        confusion,
        split: SplitInfo {
            strategy: spec.split,
            labeled_fraction: spec.labeled_fraction,
            seed: params.seed,
            n_labeled: labeled.len(),
            n_unlabeled: unlabeled.len(),
            labeled_source: "held-out site".into(),
        },
        inference,
    })
}
