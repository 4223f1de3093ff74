use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dictionary::Dictionary;
use super::lda::LdaModel;

pub const DEFAULT_TOP_N: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermProb {
    pub term: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub id: usize,
    pub prevalence: f64,
    pub terms: Vec<TermProb>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCoherence {
    pub k: usize,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub chosen_k: usize,
    pub coherence_by_k: Vec<KCoherence>,
    pub topics: Vec<TopicSummary>,
    /// Most frequent terms over the whole modelled corpus.
    pub corpus_top_terms: Vec<TermProb>,
}

/// `n` most probable terms per topic; `n` is clamped to the vocabulary.
pub fn top_terms(m: &LdaModel, dict: &Dictionary, n: usize) -> TopicReport {
    let n = if n > m.vocab_size {
        log::warn!("top_n {n} exceeds vocabulary of {}, clamped", m.vocab_size);
        m.vocab_size
    } else {
        n.max(1)
    };
    let term = |id: usize| dict.token(id).unwrap_or("<unknown>").to_string();
    let prevalence = m.prevalence();
    let topics = (0..m.k)
        .map(|k| {
            let dist = m.topic_term_dist(k);
            TopicSummary {
                id: k,
                prevalence: prevalence[k],
                terms: m
                    .ranked_terms(k)
                    .into_iter()
                    .take(n)
                    .map(|id| TermProb {
                        term: term(id),
                        prob: dist[id],
                    })
                    .collect(),
            }
        })
        .collect();
    let total: usize = (0..dict.len()).map(|id| dict.collection_freq(id)).sum();
    let mut ids: Vec<usize> = (0..dict.len()).collect();
    ids.sort_by(|&a, &b| dict.collection_freq(b).cmp(&dict.collection_freq(a)).then(a.cmp(&b)));
    let corpus_top_terms = ids
        .into_iter()
        .take(n)
        .map(|id| TermProb {
            term: term(id),
            prob: dict.collection_freq(id) as f64 / total as f64,
        })
        .collect();
    TopicReport {
        chosen_k: m.k,
        coherence_by_k: Vec::new(),
        topics,
        corpus_top_terms,
    }
}

impl TopicReport {
    pub fn with_coherence(mut self, by_k: &[(usize, f64)]) -> Self {
        self.coherence_by_k = by_k.iter().map(|&(k, coherence)| KCoherence { k, coherence }).collect();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per topic with its first `n` terms, then an "All" line.
    pub fn render_text(&self, n: usize) -> String {
        let mut out = String::new();
        for c in &self.coherence_by_k {
            let _ = writeln!(out, "K={:<3} coherence {:.4}", c.k, c.coherence);
        }
        let _ = writeln!(out, "chosen K = {}", self.chosen_k);
        let join = |terms: &[TermProb]| {
            terms
                .iter()
                .take(n)
                .map(|t| t.term.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        };
        for t in &self.topics {
            let _ = writeln!(
                out,
                "T{:<3} {:>5.1}%  {}",
                t.id + 1,
                t.prevalence * 100.0,
                join(&t.terms)
            );
        }
        let _ = writeln!(out, "All {:>7}  {}", "", join(&self.corpus_top_terms));
        out
    }
}
