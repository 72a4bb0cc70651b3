//! Broad cause-of-death classes and the PHMRC 34-cause mapping.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the five broad cause classes, plus a sentinel for predictions
/// that a predictor declined to classify.
///
/// `Unclassified` only ever appears in raw prediction sets; it is resolved
/// away by an [`UnclassifiedPolicy`](crate::text::UnclassifiedPolicy) before
/// any row reaches a model fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodClass {
    NonCommunicable,
    Communicable,
    External,
    Maternal,
    AidsTb,
    Unclassified,
}

impl CodClass {
    /// The five real classes in enumeration order.
    pub const BROAD: [CodClass; 5] = [
        CodClass::NonCommunicable,
        CodClass::Communicable,
        CodClass::External,
        CodClass::Maternal,
        CodClass::AidsTb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CodClass::NonCommunicable => "non-communicable",
            CodClass::Communicable => "communicable",
            CodClass::External => "external",
            CodClass::Maternal => "maternal",
            CodClass::AidsTb => "aids-tb",
            CodClass::Unclassified => "unclassified",
        }
    }

    /// Position in [`CodClass::BROAD`]; `None` for the sentinel.
    pub fn ordinal(self) -> Option<usize> {
        CodClass::BROAD.iter().position(|&c| c == self)
    }

    pub fn is_unclassified(self) -> bool {
        self == CodClass::Unclassified
    }
}

impl fmt::Display for CodClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase();
        [
            CodClass::NonCommunicable,
            CodClass::Communicable,
            CodClass::External,
            CodClass::Maternal,
            CodClass::AidsTb,
            CodClass::Unclassified,
        ]
        .into_iter()
        .find(|c| c.as_str() == norm)
        .ok_or_else(|| Error::Parse(format!("unknown class label `{}`", s.trim())))
    }
}

/// Fine label (lowercase) to broad class, row for row from the PHMRC
/// all-cause table.
const CAUSE_TABLE: [(&str, CodClass); 34] = [
    ("cirrhosis", CodClass::NonCommunicable),
    ("epilepsy", CodClass::NonCommunicable),
    ("pneumonia", CodClass::Communicable),
    ("copd", CodClass::NonCommunicable),
    ("acute myocardial infarction", CodClass::NonCommunicable),
    ("fires", CodClass::External),
    ("renal failure", CodClass::NonCommunicable),
    ("lung cancer", CodClass::NonCommunicable),
    ("maternal", CodClass::Maternal),
    ("drowning", CodClass::External),
    ("other cardiovascular diseases", CodClass::NonCommunicable),
    ("aids", CodClass::AidsTb),
    ("other non-communicable diseases", CodClass::NonCommunicable),
    ("falls", CodClass::External),
    ("road traffic", CodClass::External),
    ("diabetes", CodClass::NonCommunicable),
    ("other infectious diseases", CodClass::Communicable),
    ("tb", CodClass::AidsTb),
    ("suicide", CodClass::External),
    ("other injuries", CodClass::External),
    ("cervical cancer", CodClass::NonCommunicable),
    ("stroke", CodClass::NonCommunicable),
    // Listed as communicable in the narrative description of the groups;
    // the table assigns it here and the table is what we follow.
    ("malaria", CodClass::NonCommunicable),
    ("asthma", CodClass::NonCommunicable),
    ("colorectal cancer", CodClass::NonCommunicable),
    ("homicide", CodClass::External),
    ("diarrhea/dysentery", CodClass::Communicable),
    ("breast cancer", CodClass::NonCommunicable),
    ("leukemia/lymphomas", CodClass::NonCommunicable),
    ("poisonings", CodClass::External),
    ("prostate cancer", CodClass::NonCommunicable),
    ("esophageal cancer", CodClass::NonCommunicable),
    ("stomach cancer", CodClass::NonCommunicable),
    ("bite of venomous animal", CodClass::External),
];

/// Fine labels whose table assignment disagrees with the prose grouping.
pub const DISPUTED_LABELS: [&str; 1] = ["malaria"];

/// The fixed 34-row mapping.
#[derive(Debug, Clone, Copy, Default)]
pub struct CauseMap;

impl CauseMap {
    pub fn entries(&self) -> impl Iterator<Item = (&'static str, CodClass)> {
        CAUSE_TABLE.iter().copied()
    }

    pub fn len(&self) -> usize {
        CAUSE_TABLE.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, fine_label: &str) -> Option<CodClass> {
        let norm = fine_label.trim().to_lowercase();
        CAUSE_TABLE
            .iter()
            .find(|(label, _)| *label == norm)
            .map(|&(_, c)| c)
    }
}

/// Maps a PHMRC fine-grained cause label to its broad class.
pub fn map_cause(fine_label: &str) -> Result<CodClass> {
    CauseMap
        .get(fine_label)
        .ok_or_else(|| Error::UnknownCause(fine_label.trim().to_string()))
}
