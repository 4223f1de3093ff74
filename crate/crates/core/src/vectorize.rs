//! Capped vocabulary, smoothed TF-IDF weighting and label encoding.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SentimentLabel;
use crate::sparse::SparseVector;

pub const TFIDF_FORMAT_VERSION: u32 = 1;
/// Feature cap used for the SVM feature space.
pub const DEFAULT_MAX_FEATURES: usize = 5000;

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("max_features must be at least 1")]
    ZeroFeatures,
    #[error("label code {0} is not one of 0, 1, 2")]
    LabelCode(usize),
    #[error("unsupported tf-idf model version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt tf-idf model: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    document_frequency: Vec<usize>,
    max_features: usize,
}

impl Vocabulary {
    fn from_terms(terms: Vec<String>, document_frequency: Vec<usize>, max_features: usize) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            index,
            document_frequency,
            max_features,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.document_frequency[i])
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }
}

/// Keeps the `max_features` most frequent terms (total occurrences, ties
/// broken lexicographically) and indexes them in lexicographic order.
pub fn build_vocabulary<S: AsRef<str>>(docs: &[Vec<S>], max_features: usize) -> Result<Vocabulary, VectorizeError> {
    if max_features == 0 {
        return Err(VectorizeError::ZeroFeatures);
    }
    let mut freq: HashMap<&str, (usize, usize)> = HashMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for tok in doc {
            let tok = tok.as_ref();
            let e = freq.entry(tok).or_insert((0, 0));
            e.0 += 1;
            if seen.insert(tok) {
                e.1 += 1;
            }
        }
    }
    if freq.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let mut ranked: Vec<(&str, usize, usize)> = freq.into_iter().map(|(t, (c, df))| (t, c, df)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_features);
    ranked.sort_by(|a, b| a.0.cmp(b.0));
    let terms = ranked.iter().map(|r| r.0.to_string()).collect();
    let df = ranked.iter().map(|r| r.2).collect();
    Ok(Vocabulary::from_terms(terms, df, max_features))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    l2_normalize: bool,
}

/// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn tfidf_fit<S: AsRef<str>>(docs: &[Vec<S>], vocab: Vocabulary, l2_normalize: bool) -> TfIdfModel {
    let mut df = vec![0usize; vocab.len()];
    for doc in docs {
        let present: HashSet<usize> = doc.iter().filter_map(|t| vocab.index_of(t.as_ref())).collect();
        for i in present {
            df[i] += 1;
        }
    }
    let idf = df.iter().map(|&d| smoothed_idf(docs.len(), d)).collect();
    TfIdfModel {
        vocabulary: vocab,
        idf,
        l2_normalize,
    }
}

/// Wire shape of a fitted model.
#[derive(Debug, Serialize, Deserialize)]
struct TfIdfFile {
    version: u32,
    max_features: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
    l2_normalize: bool,
    #[serde(default)]
    document_frequency: Vec<usize>,
}

impl TfIdfModel {
    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocabulary.index_of(term).map(|i| self.idf[i])
    }

    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn l2_normalize(&self) -> bool {
        self.l2_normalize
    }

    /// Term counts times idf, optionally scaled to unit length.
    /// Out-of-vocabulary tokens are ignored.
    pub fn transform<S: AsRef<str>>(&self, doc: &[S]) -> SparseVector {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in doc {
            if let Some(i) = self.vocabulary.index_of(t.as_ref()) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let mut v = SparseVector::from_sorted(self.dim(), counts.into_iter().map(|(i, c)| (i, c as f64 * self.idf[i])))
            .expect("indices come from the vocabulary");
        if self.l2_normalize {
            let norm = v.norm_sq().sqrt();
            if norm > 0.0 {
                v.scale(1.0 / norm);
            }
        }
        v
    }

    pub fn transform_all<S: AsRef<str>>(&self, docs: &[Vec<S>]) -> Vec<SparseVector> {
        docs.iter().map(|d| self.transform(d)).collect()
    }

    pub fn to_json(&self) -> String {
        let file = TfIdfFile {
            version: TFIDF_FORMAT_VERSION,
            max_features: self.vocabulary.max_features,
            terms: self.vocabulary.terms.clone(),
            idf: self.idf.clone(),
            l2_normalize: self.l2_normalize,
            document_frequency: self.vocabulary.document_frequency.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, VectorizeError> {
        let file: TfIdfFile = serde_json::from_str(s).map_err(|e| VectorizeError::Corrupt(e.to_string()))?;
        if file.version != TFIDF_FORMAT_VERSION {
            return Err(VectorizeError::Version {
                found: file.version,
                expected: TFIDF_FORMAT_VERSION,
            });
        }
        if file.terms.len() != file.idf.len() {
            return Err(VectorizeError::Corrupt(format!(
                "{} terms but {} idf weights",
                file.terms.len(),
                file.idf.len()
            )));
        }
        if file.idf.iter().any(|w| !(*w > 0.0)) {
            return Err(VectorizeError::Corrupt("idf weights must be positive".into()));
        }
        let df = if file.document_frequency.len() == file.terms.len() {
            file.document_frequency
        } else {
            vec![0; file.terms.len()]
        };
        Ok(TfIdfModel {
            vocabulary: Vocabulary::from_terms(file.terms, df, file.max_features),
            idf: file.idf,
            l2_normalize: file.l2_normalize,
        })
    }
}

pub fn encode_label(label: SentimentLabel) -> usize {
    label.code()
}

pub fn decode_label(code: usize) -> Result<SentimentLabel, VectorizeError> {
    SentimentLabel::from_code(code).ok_or(VectorizeError::LabelCode(code))
}
