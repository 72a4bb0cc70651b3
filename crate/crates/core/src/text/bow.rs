//! Tokenization, vocabulary construction and sparse bag-of-words vectors.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases `text` and splits it into alphanumeric tokens.
///
/// A `.` between two digits and an apostrophe between two letters or digits
/// stay inside the token, so `1.5` and `didn't` survive intact. Everything
/// else that is not alphanumeric separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        let keep = if c.is_alphanumeric() {
            true
        } else if c == '.' {
            !current.is_empty()
                && prev.is_some_and(|p| p.is_ascii_digit())
                && next.is_some_and(|n| n.is_ascii_digit())
        } else if c == '\'' || c == '\u{2019}' {
            !current.is_empty() && prev.is_some_and(char::is_alphanumeric) && next.is_some_and(char::is_alphanumeric)
        } else {
            false
        };
        if keep {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Count,
    /// `tf * (ln((1 + D) / (1 + df)) + 1)`.
    TfIdf,
}

/// Token to column mapping with corpus statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_documents: usize,
    min_count: usize,
    raw_token_total: usize,
    retained_token_total: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    doc_freq: Vec<usize>,
    n_documents: usize,
    min_count: usize,
    raw_token_total: usize,
    retained_token_total: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            tokens: r.tokens,
            index,
            doc_freq: r.doc_freq,
            n_documents: r.n_documents,
            min_count: r.min_count,
            raw_token_total: r.raw_token_total,
            retained_token_total: r.retained_token_total,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            tokens: v.tokens,
            doc_freq: v.doc_freq,
            n_documents: v.n_documents,
            min_count: v.min_count,
            raw_token_total: v.raw_token_total,
            retained_token_total: v.retained_token_total,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Number of corpus documents containing each retained token.
    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Token occurrences in the corpus before filtering.
    pub fn raw_token_total(&self) -> usize {
        self.raw_token_total
    }

    /// Token occurrences belonging to retained tokens.
    pub fn retained_token_total(&self) -> usize {
        self.retained_token_total
    }

    pub fn idf(&self, column: usize) -> f64 {
        ((1.0 + self.n_documents as f64) / (1.0 + self.doc_freq[column] as f64)).ln() + 1.0
    }
}

/// Indexes tokens whose corpus frequency is at least `min_count`, in order
/// of first occurrence.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &[Vec<S>], min_count: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::Precondition("vocabulary corpus is empty".into()));
    }
    let mut order: Vec<&str> = Vec::new();
    let mut freq: HashMap<&str, (usize, usize, usize)> = HashMap::new(); // (count, df, last doc)
    let mut raw = 0;
    for (doc, tokens) in corpus.iter().enumerate() {
        for t in tokens {
            let t = t.as_ref();
            raw += 1;
            let e = freq.entry(t).or_insert_with(|| {
                order.push(t);
                (0, 0, usize::MAX)
            });
            e.0 += 1;
            if e.2 != doc {
                e.1 += 1;
                e.2 = doc;
            }
        }
    }
    let mut tokens = Vec::new();
    let mut doc_freq = Vec::new();
    let mut retained = 0;
    for t in order {
        let (count, df, _) = freq[t];
        if count >= min_count {
            tokens.push(t.to_string());
            doc_freq.push(df);
            retained += count;
        }
    }
    if tokens.is_empty() {
        return Err(Error::Degenerate(format!("no token reaches min_count {min_count}")));
    }
    Ok(VocabularyRepr {
        tokens,
        doc_freq,
        n_documents: corpus.len(),
        min_count,
        raw_token_total: raw,
        retained_token_total: retained,
    }
    .into())
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds from `(index, weight)` pairs, which must be strictly increasing
    /// in index and finite.
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Parameter("sparse indices must be strictly increasing".into()));
        }
        if entries.iter().any(|e| !e.1.is_finite()) {
            return Err(Error::Numeric("sparse weights must be finite".into()));
        }
        Ok(SparseVector { entries })
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    /// Inner product, accumulated in index order.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector { entries: self.entries.iter().map(|&(i, w)| (i, w * factor)).collect() }
    }

    /// Unit-length copy; the zero vector is returned unchanged.
    pub fn l2_normalized(&self) -> SparseVector {
        let n = self.norm();
        if n > 0.0 {
            self.scaled(1.0 / n)
        } else {
            self.clone()
        }
    }
}

/// Counts in-vocabulary tokens, optionally reweighted by idf.
pub fn vectorize<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, weighting: Weighting) -> SparseVector {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for t in tokens {
        if let Some(i) = vocab.index_of(t.as_ref()) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(i, c)| {
            let tf = c as f64;
            let w = match weighting {
                Weighting::Count => tf,
                Weighting::TfIdf => tf * vocab.idf(i),
            };
            (i, w)
        })
        .collect();
    entries.sort_unstable_by_key(|e| e.0);
    SparseVector { entries }
}
