use serde::{Deserialize, Serialize};

use super::bow::SparseVector;
use crate::error::{Error, Result};
use crate::ingest::CodClass;

pub const DEFAULT_K: usize = 9;

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(b) / (na * nb)
    }
}

/// Majority label among the `k` training vectors most cosine-similar to `query`.
///
/// Similarity ties go to the lower training index and vote ties to the
/// earlier class in enumeration order.
pub fn predict_knn(train: &[(SparseVector, CodClass)], query: &SparseVector, k: usize) -> Result<CodClass> {
    if train.is_empty() {
        return Err(Error::Precondition("knn training set is empty".into()));
    }
    if k == 0 || k > train.len() {
        return Err(Error::Parameter(format!("k = {k} must lie in 1..={}", train.len())));
    }
    let sims: Vec<f64> = train.iter().map(|(x, _)| cosine(x, query)).collect();
    let labels: Vec<CodClass> = train.iter().map(|t| t.1).collect();
    Ok(vote(&sims, &labels, k))
}

fn vote(sims: &[f64], labels: &[CodClass], k: usize) -> CodClass {
    let mut order: Vec<usize> = (0..sims.len()).collect();
    // Stable sort keeps lower indices first among equal similarities.
    order.sort_by(|&a, &b| sims[b].total_cmp(&sims[a]));
    let mut votes = [0usize; 6];
    for &i in &order[..k] {
        votes[labels[i] as usize] += 1;
    }
    let best = (0..votes.len()).fold(0, |b, c| if votes[c] > votes[b] { c } else { b });
    labels[order[..k].iter().copied().find(|&i| labels[i] as usize == best).expect("winner has a vote")]
}

/// Stored training set with an inverted index over unit-normalized rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub vectors: Vec<SparseVector>,
    pub labels: Vec<CodClass>,
    #[serde(skip)]
    postings: Vec<Vec<(usize, f64)>>,
}

impl KnnModel {
    pub fn new(vectors: Vec<SparseVector>, labels: Vec<CodClass>, vocab_size: usize, k: usize) -> Result<Self> {
        super::check_training(&vectors, &labels, vocab_size)?;
        if k == 0 || k > vectors.len() {
            return Err(Error::Parameter(format!("k = {k} must lie in 1..={}", vectors.len())));
        }
        let mut m = KnnModel { k, vectors, labels, postings: Vec::new() };
        m.build_index(vocab_size);
        Ok(m)
    }

    fn build_index(&mut self, vocab_size: usize) {
        let mut postings = vec![Vec::new(); vocab_size];
        for (i, v) in self.vectors.iter().enumerate() {
            for &(j, w) in v.l2_normalized().entries() {
                postings[j].push((i, w));
            }
        }
        self.postings = postings;
    }

    fn ensure_index(&mut self) {
        if self.postings.is_empty() {
            let v = self.vectors.iter().filter_map(|x| x.entries().last()).map(|e| e.0 + 1).max().unwrap_or(0);
            self.build_index(v);
        }
    }

    /// Rebuilds the inverted index after deserialization.
    pub fn restore(mut self) -> Self {
        self.ensure_index();
        self
    }

    pub fn similarities(&self, query: &SparseVector) -> Vec<f64> {
        let mut sims = vec![0.0; self.vectors.len()];
        let q = query.l2_normalized();
        for &(j, w) in q.entries() {
            if let Some(list) = self.postings.get(j) {
                for &(i, t) in list {
                    sims[i] += w * t;
                }
            }
        }
        sims
    }

    pub fn predict(&self, query: &SparseVector) -> CodClass {
        vote(&self.similarities(query), &self.labels, self.k)
    }
}
