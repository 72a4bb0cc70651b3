use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::CodClass;

/// Where a set of predictions came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Provenance {
    Nb,
    Knn,
    Svm,
    External(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Nb => f.write_str("nb"),
            Provenance::Knn => f.write_str("knn"),
            Provenance::Svm => f.write_str("svm"),
            Provenance::External(name) => write!(f, "external:{name}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nb" => Ok(Provenance::Nb),
            "knn" => Ok(Provenance::Knn),
            "svm" => Ok(Provenance::Svm),
            _ => match s.strip_prefix("external:") {
                Some(name) if !name.is_empty() => Ok(Provenance::External(name.to_string())),
                _ => Err(Error::Parse(format!("unknown provenance `{s}`"))),
            },
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// What to do with `unclassified` predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnclassifiedPolicy {
    #[default]
    Drop,
    ImputeMajority,
    KeepAsError,
}

impl fmt::Display for UnclassifiedPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnclassifiedPolicy::Drop => "drop",
            UnclassifiedPolicy::ImputeMajority => "impute-majority",
            UnclassifiedPolicy::KeepAsError => "keep-as-error",
        })
    }
}

impl FromStr for UnclassifiedPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(UnclassifiedPolicy::Drop),
            "impute-majority" => Ok(UnclassifiedPolicy::ImputeMajority),
            "keep-as-error" => Ok(UnclassifiedPolicy::KeepAsError),
            _ => Err(Error::Parameter(format!("unknown unclassified policy `{s}`"))),
        }
    }
}

/// Predictions before the unclassified policy runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPredictions {
    pub provenance: Provenance,
    pub record_ids: Vec<String>,
    pub labels: Vec<CodClass>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PredictionCounts {
    /// Indexed like [`CodClass::BROAD`].
    pub per_class: [usize; 5],
    pub unclassified: usize,
}

impl PredictionCounts {
    pub fn tally<'a>(labels: impl IntoIterator<Item = &'a CodClass>) -> Self {
        let mut c = PredictionCounts::default();
        for l in labels {
            match l.ordinal() {
                Some(i) => c.per_class[i] += 1,
                None => c.unclassified += 1,
            }
        }
        c
    }
}

/// Policy-resolved predictions, free of `unclassified`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub provenance: Provenance,
    pub policy: UnclassifiedPolicy,
    pub record_ids: Vec<String>,
    pub labels: Vec<CodClass>,
    /// Counts before the policy ran.
    pub raw_counts: PredictionCounts,
    pub counts: PredictionCounts,
    pub dropped: Vec<String>,
    pub imputed: Vec<String>,
    pub imputed_class: Option<CodClass>,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, record_id: &str) -> Option<CodClass> {
        self.record_ids.iter().position(|r| r == record_id).map(|i| self.labels[i])
    }

    pub fn to_map(&self) -> HashMap<&str, CodClass> {
        self.record_ids.iter().map(String::as_str).zip(self.labels.iter().copied()).collect()
    }
}

impl RawPredictions {
    /// Applies `policy`. `majority` is the labeled-subset majority class and
    /// is required for [`UnclassifiedPolicy::ImputeMajority`] when anything
    /// needs imputing.
    pub fn resolve(self, policy: UnclassifiedPolicy, majority: Option<CodClass>) -> Result<PredictionSet> {
        let raw_counts = PredictionCounts::tally(&self.labels);
        let bad: Vec<String> = self
            .record_ids
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| l.is_unclassified())
            .map(|(r, _)| r.clone())
            .collect();
        let mut set = PredictionSet {
            provenance: self.provenance,
            policy,
            record_ids: Vec::with_capacity(self.labels.len()),
            labels: Vec::with_capacity(self.labels.len()),
            raw_counts,
            counts: PredictionCounts::default(),
            dropped: Vec::new(),
            imputed: Vec::new(),
            imputed_class: None,
        };
        match policy {
            UnclassifiedPolicy::KeepAsError if !bad.is_empty() => return Err(Error::Unclassified { ids: bad }),
            UnclassifiedPolicy::ImputeMajority if !bad.is_empty() => {
                let m = majority
                    .filter(|m| !m.is_unclassified())
                    .ok_or_else(|| Error::Precondition("impute-majority needs a labeled majority class".into()))?;
                set.imputed_class = Some(m);
            }
            _ => {}
        }
        for (id, label) in self.record_ids.into_iter().zip(self.labels) {
            if label.is_unclassified() {
                match set.imputed_class {
                    Some(m) => {
                        set.imputed.push(id.clone());
                        set.record_ids.push(id);
                        set.labels.push(m);
                    }
                    None => set.dropped.push(id),
                }
            } else {
                set.record_ids.push(id);
                set.labels.push(label);
            }
        }
        set.counts = PredictionCounts::tally(&set.labels);
        Ok(set)
    }
}

/// Most frequent class, ties to the earlier class; `None` for no labels.
pub fn majority_class<'a>(labels: impl IntoIterator<Item = &'a CodClass>) -> Option<CodClass> {
    let c = PredictionCounts::tally(labels);
    let best = (0..5).fold(0, |b, i| if c.per_class[i] > c.per_class[b] { i } else { b });
    (c.per_class[best] > 0).then_some(CodClass::BROAD[best])
}

/// Reads a `record_id,predicted_label` CSV. Lines starting with `#` are
/// comments. Every id must belong to `known_ids`.
pub fn read_external_predictions(path: impl AsRef<Path>, known_ids: &HashSet<&str>) -> Result<RawPredictions> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "predictions".into());
    parse_external_predictions(file, &name, known_ids)
}

pub fn parse_external_predictions<R: std::io::Read>(reader: R, name: &str, known_ids: &HashSet<&str>) -> Result<RawPredictions> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |n: &str| {
        headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::Schema(format!("prediction file lacks a `{n}` column")))
    };
    let (id_col, label_col) = (col("record_id")?, col("predicted_label")?);
    let mut out = RawPredictions { provenance: Provenance::External(name.to_string()), record_ids: Vec::new(), labels: Vec::new() };
    let mut seen = HashSet::new();
    let mut unknown = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let id = rec.get(id_col).unwrap_or_default().to_string();
        let raw = rec.get(label_col).unwrap_or_default();
        let label = parse_label(raw).ok_or_else(|| Error::Parse(format!("row {}: unknown label `{raw}`", row + 1)))?;
        if !seen.insert(id.clone()) {
            return Err(Error::Parse(format!("row {}: duplicate record id `{id}`", row + 1)));
        }
        if !known_ids.contains(id.as_str()) {
            unknown.push(id);
            continue;
        }
        out.record_ids.push(id);
        out.labels.push(label);
    }
    if !unknown.is_empty() {
        return Err(Error::Alignment { ids: unknown });
    }
    Ok(out)
}

fn parse_label(s: &str) -> Option<CodClass> {
    [CodClass::Unclassified].into_iter().chain(CodClass::BROAD).find(|c| c.as_str() == s)
}

/// Loads external predictions and applies `policy`; see [`RawPredictions::resolve`].
pub fn load_external_predictions(
    path: impl AsRef<Path>,
    policy: UnclassifiedPolicy,
    known_ids: &HashSet<&str>,
    labeled_majority: Option<CodClass>,
) -> Result<PredictionSet> {
    read_external_predictions(path, known_ids)?.resolve(policy, labeled_majority)
}
