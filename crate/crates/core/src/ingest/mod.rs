//! Record ingestion: CSV loading, cause mapping, labeled/unlabeled splits.

mod cause;
mod records;
mod split;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cause::{map_cause, CauseMap, CodClass, DISPUTED_LABELS};
pub use records::{
    load_records, read_records, CauseEncoding, ColumnMap, LoadSummary, LoadedRecords, RowError,
    VaRecord, ADULT_MIN_AGE,
};
pub use split::{split, split_indices, split_stratified, DataSplit, SplitParams, SplitStrategy};

use crate::error::{Error, Result};

/// Declarative ingest configuration, read from a TOML file:
///
/// ```toml
/// [columns]
/// id = "newid"
/// site = "site"
/// age = "age_years"
/// narrative = "open_response"
/// cause = "gs_text34"
/// cause_encoding = "fine"
/// delimiter = ","
///
/// [split]
/// strategy = "full-random"
/// labeled_fraction = 0.2
/// seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub columns: ColumnMap,
    pub split: SplitParams,
}

impl IngestConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
