use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

pub const DEFAULT_MIN_COUNT: usize = 5;
pub const DEFAULT_THRESHOLD: f64 = 10.0;

/// Collocation scores for adjacent token pairs. Scored pairs all occur at
/// least `min_count` times.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhraseTable {
    pub scores: BTreeMap<(String, String), f64>,
}

impl PhraseTable {
    fn merges(&self, a: &str, b: &str, threshold: f64) -> bool {
        self.scores
            .get(&(a.to_string(), b.to_string()))
            .is_some_and(|s| *s > threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseModel {
    pub bigrams: PhraseTable,
    /// Scores from the second pass, over bigram-merged documents.
    pub trigrams: PhraseTable,
    pub min_count: usize,
    pub threshold: f64,
}

/// (count(a,b) − min_count) · V / (count(a) · count(b)).
pub fn phrase_score(pair: usize, count_a: usize, count_b: usize, vocab: usize, min_count: usize) -> f64 {
    (pair as f64 - min_count as f64) * vocab as f64 / (count_a as f64 * count_b as f64)
}

fn score_pairs(docs: &[Vec<String>], min_count: usize) -> PhraseTable {
    let mut unigrams: HashMap<&str, usize> = HashMap::new();
    let mut pairs: HashMap<(&str, &str), usize> = HashMap::new();
    for doc in docs {
        for w in doc {
            *unigrams.entry(w).or_default() += 1;
        }
        for p in doc.windows(2) {
            *pairs.entry((&p[0], &p[1])).or_default() += 1;
        }
    }
    let v = unigrams.len();
    let scores = pairs
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|((a, b), c)| {
            let s = phrase_score(c, unigrams[a], unigrams[b], v, min_count);
            ((a.to_string(), b.to_string()), s)
        })
        .collect();
    PhraseTable { scores }
}

fn merge(table: &PhraseTable, threshold: f64, doc: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(doc.len());
    let mut i = 0;
    while i < doc.len() {
        if i + 1 < doc.len() && table.merges(&doc[i], &doc[i + 1], threshold) {
            out.push(format!("{}_{}", doc[i], doc[i + 1]));
            i += 2;
        } else {
            out.push(doc[i].clone());
            i += 1;
        }
    }
    out
}

/// Two-pass collocation detection: bigrams, then pairs over the
/// bigram-merged corpus (yielding trigram tokens such as `a_b_c`).
pub fn detect_phrases(docs: &[Vec<String>], min_count: usize, threshold: f64) -> PhraseModel {
    let min_count = min_count.max(1);
    let bigrams = score_pairs(docs, min_count);
    let merged: Vec<Vec<String>> = docs.iter().map(|d| merge(&bigrams, threshold, d)).collect();
    let trigrams = score_pairs(&merged, min_count);
    PhraseModel {
        bigrams,
        trigrams,
        min_count,
        threshold,
    }
}

pub fn apply_phrases(pm: &PhraseModel, docs: &[Vec<String>]) -> Vec<Vec<String>> {
    docs.iter()
        .map(|d| merge(&pm.trigrams, pm.threshold, &merge(&pm.bigrams, pm.threshold, d)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn corpus() -> Vec<Vec<String>> {
        let mut docs = Vec::new();
        for i in 0..10 {
            docs.push(toks(&format!("a{i} side effects b{i}")));
        }
        for i in 0..10 {
            docs.push(toks(&format!("queue long c{i} d{i}")));
        }
        docs
    }

    #[test]
    fn bigram_score_by_hand() {
        let pm = detect_phrases(&corpus(), 2, 1.0);
        // V = 20 + 2 + 2 + 20 = 44; count(side)=count(effects)=count(side effects)=10
        let s = pm.bigrams.scores[&("side".to_string(), "effects".to_string())];
        assert!((s - (10.0 - 2.0) * 44.0 / 100.0).abs() < 1e-12);
        let out = apply_phrases(&pm, &corpus());
        assert_eq!(out[0][1], "side_effects");
    }

    #[test]
    fn second_pass_builds_trigram() {
        let mut docs = Vec::new();
        for i in 0..10 {
            docs.push(toks(&format!("side effects serious a{i} b{i} c{i}")));
        }
        docs.push(toks("serious z1"));
        docs.push(toks("serious z2"));
        // pass 1, V=35: side·effects = 8·35/100 = 2.8 merges first (greedy)
        // pass 2, V=34: side_effects·serious = 8·34/120 ≈ 2.27
        let pm = detect_phrases(&docs, 2, 2.0);
        let out = apply_phrases(&pm, &docs);
        assert_eq!(out[0][0], "side_effects_serious");
    }

    #[test]
    fn infinite_threshold_is_identity() {
        let docs = corpus();
        let pm = detect_phrases(&docs, 1, f64::INFINITY);
        assert_eq!(apply_phrases(&pm, &docs), docs);
    }
}
