use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cause::{map_cause, CodClass, DISPUTED_LABELS};
use crate::error::{Error, Result};

/// Minimum decedent age kept by the adult filter.
pub const ADULT_MIN_AGE: f64 = 12.0;

/// One verbal-autopsy death record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaRecord {
    pub record_id: String,
    pub site: String,
    pub age: f64,
    pub narrative: String,
    pub true_cause: Option<CodClass>,
    pub predicted_cause: Option<CodClass>,
}

/// How the cause column is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CauseEncoding {
    /// PHMRC 34-cause labels, mapped through the cause table.
    #[default]
    Fine,
    /// Already one of the five broad class strings.
    Broad,
}

/// Binds record roles to CSV column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub id: String,
    pub site: String,
    pub age: String,
    pub narrative: String,
    /// Optional; records carry no true cause when unbound or absent from the file.
    pub cause: Option<String>,
    pub cause_encoding: CauseEncoding,
    pub delimiter: char,
}

impl Default for ColumnMap {
    /// Column names of the public PHMRC adult narrative release.
    fn default() -> Self {
        ColumnMap {
            id: "newid".into(),
            site: "site".into(),
            age: "age_years".into(),
            narrative: "open_response".into(),
            cause: Some("gs_text34".into()),
            cause_encoding: CauseEncoding::Fine,
            delimiter: ',',
        }
    }
}

impl ColumnMap {
    /// Parses an inline binding list such as `id=newid,age=age_years,cause=`.
    /// An empty value for `cause` unbinds it.
    pub fn apply_overrides(&mut self, spec: &str) -> Result<()> {
        for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (role, col) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected role=column, got `{pair}`")))?;
            let col = col.trim().to_string();
            match role.trim() {
                "id" => self.id = col,
                "site" => self.site = col,
                "age" => self.age = col,
                "narrative" => self.narrative = col,
                "cause" => self.cause = (!col.is_empty()).then_some(col),
                "cause_encoding" => {
                    self.cause_encoding = match col.as_str() {
                        "fine" => CauseEncoding::Fine,
                        "broad" => CauseEncoding::Broad,
                        other => {
                            return Err(Error::Config(format!("unknown cause encoding `{other}`")))
                        }
                    }
                }
                other => return Err(Error::Config(format!("unknown column role `{other}`"))),
            }
        }
        Ok(())
    }
}

/// A data row that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based data row number (the header is row 0).
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadSummary {
    pub data_rows: usize,
    pub loaded: usize,
    pub filtered_under_age: usize,
    pub row_errors: Vec<RowError>,
    /// Rows whose cause went through a disputed table entry.
    pub disputed_mappings: usize,
    pub warnings: Vec<String>,
    /// True when the cause column was bound but absent from the header.
    pub cause_column_missing: bool,
}

#[derive(Debug, Clone)]
pub struct LoadedRecords {
    pub records: Vec<VaRecord>,
    pub summary: LoadSummary,
}

/// Loads records from a headed CSV file.
///
/// Rows with age below [`ADULT_MIN_AGE`] are dropped and counted. Rows that
/// fail to parse are collected in the summary rather than aborting the load.
pub fn load_records(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<LoadedRecords> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(file, columns)
}

/// Same as [`load_records`] over any reader.
pub fn read_records<R: std::io::Read>(reader: R, columns: &ColumnMap) -> Result<LoadedRecords> {
    if !columns.delimiter.is_ascii() {
        return Err(Error::Config("delimiter must be a single ASCII character".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(columns.delimiter as u8)
        .has_headers(true)
        .flexible(false)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |role: &str, name: &str| {
        find(name).ok_or_else(|| {
            Error::Schema(format!("column `{name}` bound to role `{role}` not found in header"))
        })
    };
    let id_col = required("id", &columns.id)?;
    let site_col = required("site", &columns.site)?;
    let age_col = required("age", &columns.age)?;
    let narrative_col = required("narrative", &columns.narrative)?;
    let cause_col = columns.cause.as_deref().and_then(find);

    let mut summary = LoadSummary {
        cause_column_missing: columns.cause.is_some() && cause_col.is_none(),
        ..Default::default()
    };
    let mut records = Vec::new();

    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        summary.data_rows += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                summary.row_errors.push(RowError { row: row_no, message: e.to_string() });
                continue;
            }
        };
        let field = |c: usize| row.get(c).unwrap_or("").trim();

        let record_id = field(id_col).to_string();
        if record_id.is_empty() {
            summary.row_errors.push(RowError { row: row_no, message: "empty record id".into() });
            continue;
        }
        let site = field(site_col).to_string();
        if site.is_empty() {
            summary.row_errors.push(RowError { row: row_no, message: "empty site".into() });
            continue;
        }
        let age = match field(age_col).parse::<f64>() {
            Ok(a) if a.is_finite() && a >= 0.0 => a,
            _ => {
                summary.row_errors.push(RowError {
                    row: row_no,
                    message: format!("unparseable age `{}`", field(age_col)),
                });
                continue;
            }
        };
        let true_cause = match cause_col.map(field).filter(|s| !s.is_empty()) {
            None => None,
            Some(label) => {
                let parsed = match columns.cause_encoding {
                    CauseEncoding::Fine => map_cause(label),
                    CauseEncoding::Broad => label
                        .parse::<CodClass>()
                        .and_then(|c| if c.is_unclassified() {
                            Err(Error::Parse("true cause cannot be unclassified".into()))
                        } else {
                            Ok(c)
                        }),
                };
                match parsed {
                    Ok(c) => {
                        if columns.cause_encoding == CauseEncoding::Fine
                            && DISPUTED_LABELS.contains(&label.to_lowercase().as_str())
                            && age >= ADULT_MIN_AGE
                        {
                            summary.disputed_mappings += 1;
                        }
                        Some(c)
                    }
                    Err(e) => {
                        summary.row_errors.push(RowError { row: row_no, message: e.to_string() });
                        continue;
                    }
                }
            }
        };
        if age < ADULT_MIN_AGE {
            summary.filtered_under_age += 1;
            continue;
        }
        records.push(VaRecord {
            record_id,
            site,
            age,
            narrative: field(narrative_col).to_string(),
            true_cause,
            predicted_cause: None,
        });
    }

    summary.loaded = records.len();
    if summary.disputed_mappings > 0 {
        summary.warnings.push(format!(
            "{} row(s) labelled `malaria` mapped to non-communicable per the cause table",
            summary.disputed_mappings
        ));
    }
    if summary.cause_column_missing {
        summary.warnings.push("cause column not present; records carry no true cause".into());
    }
    Ok(LoadedRecords { records, summary })
}
