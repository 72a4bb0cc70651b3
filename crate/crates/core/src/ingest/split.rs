use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::cause::CodClass;
use super::records::VaRecord;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitStrategy {
    /// Simple random sample of all rows.
    #[default]
    FullRandom,
    /// Independent random sample within each true cause.
    StratifiedByCause,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitParams {
    pub strategy: SplitStrategy,
    pub labeled_fraction: f64,
    pub seed: u64,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams { strategy: SplitStrategy::FullRandom, labeled_fraction: 0.2, seed: 0 }
    }
}

/// A partition of row indices into labeled and unlabeled subsets. Both
/// lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSplit {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub strategy: SplitStrategy,
    pub labeled_fraction: f64,
    pub seed: u64,
}

/// Splits `records` into labeled/unlabeled index sets.
pub fn split(records: &[VaRecord], params: &SplitParams) -> Result<DataSplit> {
    match params.strategy {
        SplitStrategy::FullRandom => split_indices(records.len(), params),
        SplitStrategy::StratifiedByCause => {
            let causes = records
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r.true_cause.ok_or_else(|| {
                        Error::Split(format!(
                            "record `{}` (row {i}) has no true cause; stratified split needs one",
                            r.record_id
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            split_stratified(&causes, params)
        }
    }
}

/// Full-random split of `0..total`.
pub fn split_indices(total: usize, params: &SplitParams) -> Result<DataSplit> {
    check_fraction(params.labeled_fraction)?;
    let mut idx: Vec<usize> = (0..total).collect();
    let mut rng = stream_rng(params.seed, 0);
    idx.shuffle(&mut rng);
    let n_labeled = (params.labeled_fraction * total as f64).round() as usize;
    let mut labeled = idx[..n_labeled].to_vec();
    let mut unlabeled = idx[n_labeled..].to_vec();
    labeled.sort_unstable();
    unlabeled.sort_unstable();
    Ok(DataSplit {
        labeled,
        unlabeled,
        strategy: SplitStrategy::FullRandom,
        labeled_fraction: params.labeled_fraction,
        seed: params.seed,
    })
}

/// Stratified split given each row's class. Each class is sampled with its
/// own rounding, so the labeled count of a class is `round(fraction * m)`.
pub fn split_stratified(causes: &[CodClass], params: &SplitParams) -> Result<DataSplit> {
    check_fraction(params.labeled_fraction)?;
    let mut rng = stream_rng(params.seed, 0);
    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    for class in CodClass::BROAD.into_iter().chain([CodClass::Unclassified]) {
        let mut members: Vec<usize> = causes
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == class)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::Split(format!(
                "class `{class}` has {} member(s); stratified split needs at least 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let k = (params.labeled_fraction * members.len() as f64).round() as usize;
        labeled.extend_from_slice(&members[..k]);
        unlabeled.extend_from_slice(&members[k..]);
    }
    labeled.sort_unstable();
    unlabeled.sort_unstable();
    Ok(DataSplit {
        labeled,
        unlabeled,
        strategy: SplitStrategy::StratifiedByCause,
        labeled_fraction: params.labeled_fraction,
        seed: params.seed,
    })
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("labeled fraction must lie in (0, 1), got {f}")))
    }
}
