use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TopicsError;

/// Token ↔ id map with ids dense from 0 in first-appearance order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    ids: HashMap<String, usize>,
    tokens: Vec<String>,
    /// Total occurrences per id.
    collection_freq: Vec<usize>,
    /// Documents containing each id.
    doc_freq: Vec<usize>,
}

/// Sorted `(term id, count)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BowDoc {
    pub entries: Vec<(usize, usize)>,
}

impl BowDoc {
    pub fn len(&self) -> usize {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.entries.binary_search_by_key(&id, |(i, _)| *i).is_ok()
    }
}

pub fn build_dictionary<S: AsRef<str>>(docs: &[Vec<S>]) -> Result<Dictionary, TopicsError> {
    let mut d = Dictionary {
        ids: HashMap::new(),
        tokens: Vec::new(),
        collection_freq: Vec::new(),
        doc_freq: Vec::new(),
    };
    for doc in docs {
        let mut seen = Vec::new();
        for tok in doc {
            let tok = tok.as_ref();
            let id = match d.ids.get(tok) {
                Some(&id) => id,
                None => {
                    let id = d.tokens.len();
                    d.ids.insert(tok.to_string(), id);
                    d.tokens.push(tok.to_string());
                    d.collection_freq.push(0);
                    d.doc_freq.push(0);
                    id
                }
            };
            d.collection_freq[id] += 1;
            if !seen.contains(&id) {
                seen.push(id);
                d.doc_freq[id] += 1;
            }
        }
    }
    if d.tokens.is_empty() {
        return Err(TopicsError::EmptyCorpus);
    }
    Ok(d)
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn collection_freq(&self, id: usize) -> usize {
        self.collection_freq.get(id).copied().unwrap_or(0)
    }

    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq.get(id).copied().unwrap_or(0)
    }

    /// Out-of-dictionary tokens are ignored.
    pub fn to_bow<S: AsRef<str>>(&self, doc: &[S]) -> BowDoc {
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for tok in doc {
            if let Some(id) = self.id(tok.as_ref()) {
                match counts.iter_mut().find(|(i, _)| *i == id) {
                    Some(e) => e.1 += 1,
                    None => counts.push((id, 1)),
                }
            }
        }
        counts.sort_unstable();
        BowDoc { entries: counts }
    }

    pub fn to_bows<S: AsRef<str>>(&self, docs: &[Vec<S>]) -> Vec<BowDoc> {
        docs.iter().map(|d| self.to_bow(d)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_appearance_ids() {
        let d = build_dictionary(&[vec!["a", "b"], vec!["b"]]).unwrap();
        assert_eq!(d.id("a"), Some(0));
        assert_eq!(d.id("b"), Some(1));
        assert_eq!(d.to_bow(&["b", "b"]).entries, vec![(1, 2)]);
        assert_eq!(d.to_bow(&["z", "a"]).entries, vec![(0, 1)]);
        assert_eq!(d.doc_freq(1), 2);
        for id in 0..d.len() {
            assert_eq!(d.id(d.token(id).unwrap()), Some(id));
        }
    }

    #[test]
    fn empty_corpus() {
        let docs: Vec<Vec<&str>> = vec![vec![]];
        assert!(matches!(build_dictionary(&docs), Err(TopicsError::EmptyCorpus)));
    }
}
