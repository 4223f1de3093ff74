//! Collapsed Gibbs sampling for LDA.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dictionary::BowDoc;
use super::TopicsError;

pub const DEFAULT_BETA: f64 = 0.01;
pub const DEFAULT_ITERATIONS: usize = 200;
pub const DEFAULT_BURN_IN: usize = 50;
pub const DEFAULT_COHERENCE_TOP_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means 50/K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            k: 5,
            alpha: None,
            beta: DEFAULT_BETA,
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
        }
    }
}

impl LdaParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn with_k(&self, k: usize) -> Self {
        LdaParams { k, ..*self }
    }

    fn validate(&self) -> Result<(), TopicsError> {
        if self.k < 2 {
            return Err(TopicsError::Param(format!("need K ≥ 2, got {}", self.k)));
        }
        if self.iterations <= self.burn_in {
            return Err(TopicsError::Param(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burn_in
            )));
        }
        if !(self.alpha() > 0.0 && self.beta > 0.0) {
            return Err(TopicsError::Param("priors must be positive".into()));
        }
        Ok(())
    }
}

/// Live sampler state. Exposed so callers can inspect counts between sweeps.
pub struct LdaSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    words: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    n_dk: Vec<Vec<u32>>,
    n_kw: Vec<Vec<u32>>,
    n_k: Vec<u32>,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
}

impl LdaSampler {
    pub fn new(docs: &[BowDoc], vocab_size: usize, params: &LdaParams) -> Result<Self, TopicsError> {
        params.validate()?;
        if docs.iter().all(BowDoc::is_empty) {
            return Err(TopicsError::EmptyCorpus);
        }
        if let Some(bad) = docs.iter().flat_map(|d| &d.entries).find(|(id, _)| *id >= vocab_size) {
            return Err(TopicsError::Param(format!(
                "term id {} outside vocabulary of {vocab_size}",
                bad.0
            )));
        }
        let k = params.k;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let words: Vec<Vec<usize>> = docs
            .iter()
            .map(|d| {
                d.entries
                    .iter()
                    .flat_map(|&(id, c)| std::iter::repeat_n(id, c))
                    .collect()
            })
            .collect();
        let mut s = LdaSampler {
            k,
            v: vocab_size,
            alpha: params.alpha(),
            beta: params.beta,
            z: Vec::with_capacity(words.len()),
            n_dk: vec![vec![0; k]; words.len()],
            n_kw: vec![vec![0; vocab_size]; k],
            n_k: vec![0; k],
            probs: vec![0.0; k],
            words,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        for (d, doc) in s.words.iter().enumerate() {
            let mut zd = Vec::with_capacity(doc.len());
            for &w in doc {
                let t = rng.gen_range(0..k);
                zd.push(t);
                s.n_dk[d][t] += 1;
                s.n_kw[t][w] += 1;
                s.n_k[t] += 1;
            }
            s.z.push(zd);
        }
        s.rng = rng;
        Ok(s)
    }

    /// One pass resampling every token's topic.
    pub fn sweep(&mut self) {
        let vbeta = self.v as f64 * self.beta;
        for d in 0..self.words.len() {
            for i in 0..self.words[d].len() {
                let w = self.words[d][i];
                let old = self.z[d][i];
                self.n_dk[d][old] -= 1;
                self.n_kw[old][w] -= 1;
                self.n_k[old] -= 1;
                let mut total = 0.0;
                for t in 0..self.k {
                    total += (self.n_dk[d][t] as f64 + self.alpha) * (self.n_kw[t][w] as f64 + self.beta)
                        / (self.n_k[t] as f64 + vbeta);
                    self.probs[t] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.probs.iter().position(|&c| u < c).unwrap_or(self.k - 1);
                self.z[d][i] = new;
                self.n_dk[d][new] += 1;
                self.n_kw[new][w] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    /// Checks that every count table agrees with the topic assignments.
    pub fn check_conservation(&self) -> Result<(), String> {
        for (d, doc) in self.words.iter().enumerate() {
            let sum: u32 = self.n_dk[d].iter().sum();
            if sum as usize != doc.len() {
                return Err(format!("doc {d}: Σ_k n_dk = {sum}, length {}", doc.len()));
            }
        }
        for t in 0..self.k {
            let by_term: u32 = self.n_kw[t].iter().sum();
            let by_doc: u32 = self.n_dk.iter().map(|row| row[t]).sum();
            if by_term != self.n_k[t] || by_doc != self.n_k[t] {
                return Err(format!(
                    "topic {t}: Σ_w n_kw = {by_term}, Σ_d n_dk = {by_doc}, n_k = {}",
                    self.n_k[t]
                ));
            }
        }
        Ok(())
    }

    pub fn topic_term_counts(&self) -> &[Vec<u32>] {
        &self.n_kw
    }

    pub fn doc_topic_counts(&self) -> &[Vec<u32>] {
        &self.n_dk
    }
}

/// Posterior-mean counts averaged over the post-burn-in sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub vocab_size: usize,
    /// K × V.
    pub topic_term_counts: Vec<Vec<f64>>,
    /// D × K.
    pub doc_topic_counts: Vec<Vec<f64>>,
}

impl LdaModel {
    /// Normalized term distribution (n_kw + β) / (n_k + Vβ).
    pub fn topic_term_dist(&self, k: usize) -> Vec<f64> {
        let row = &self.topic_term_counts[k];
        let denom = row.iter().sum::<f64>() + self.vocab_size as f64 * self.beta;
        row.iter().map(|c| (c + self.beta) / denom).collect()
    }

    pub fn doc_topic_dist(&self, d: usize) -> Vec<f64> {
        let row = &self.doc_topic_counts[d];
        let denom = row.iter().sum::<f64>() + self.k as f64 * self.alpha;
        row.iter().map(|c| (c + self.alpha) / denom).collect()
    }

    /// Term ids by descending probability, ties by id.
    pub fn ranked_terms(&self, k: usize) -> Vec<usize> {
        let dist = self.topic_term_dist(k);
        let mut ids: Vec<usize> = (0..self.vocab_size).collect();
        ids.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
        ids
    }

    /// Σ_d n_dk normalized over topics.
    pub fn prevalence(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.k];
        for row in &self.doc_topic_counts {
            for (m, c) in mass.iter_mut().zip(row) {
                *m += c;
            }
        }
        let total: f64 = mass.iter().sum();
        mass.iter().map(|m| m / total).collect()
    }
}

/// Runs `iterations` sweeps and averages counts after `burn_in`. `check`
/// is called with the sampler after every sweep.
pub fn lda_gibbs_with(
    docs: &[BowDoc],
    vocab_size: usize,
    params: &LdaParams,
    mut check: impl FnMut(usize, &LdaSampler),
) -> Result<LdaModel, TopicsError> {
    let mut s = LdaSampler::new(docs, vocab_size, params)?;
    let mut ttc = vec![vec![0.0; vocab_size]; params.k];
    let mut dtc = vec![vec![0.0; params.k]; docs.len()];
    for it in 1..=params.iterations {
        s.sweep();
        check(it, &s);
        if it > params.burn_in {
            for (acc, row) in ttc.iter_mut().zip(&s.n_kw) {
                for (a, c) in acc.iter_mut().zip(row) {
                    *a += f64::from(*c);
                }
            }
            for (acc, row) in dtc.iter_mut().zip(&s.n_dk) {
                for (a, c) in acc.iter_mut().zip(row) {
                    *a += f64::from(*c);
                }
            }
        }
    }
    let samples = (params.iterations - params.burn_in) as f64;
    for row in ttc.iter_mut().chain(dtc.iter_mut()) {
        for a in row.iter_mut() {
            *a /= samples;
        }
    }
    Ok(LdaModel {
        k: params.k,
        alpha: s.alpha,
        beta: params.beta,
        iterations: params.iterations,
        burn_in: params.burn_in,
        seed: params.seed,
        vocab_size,
        topic_term_counts: ttc,
        doc_topic_counts: dtc,
    })
}

pub fn lda_gibbs(docs: &[BowDoc], vocab_size: usize, params: &LdaParams) -> Result<LdaModel, TopicsError> {
    lda_gibbs_with(docs, vocab_size, params, |_, _| {})
}

/// ln((D(wᵢ,wⱼ) + 1) / D(wⱼ)).
pub fn umass_pair(co_doc_freq: usize, doc_freq_j: usize) -> f64 {
    ((co_doc_freq as f64 + 1.0) / doc_freq_j as f64).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub per_topic: Vec<f64>,
    pub mean: f64,
}

/// UMass coherence of each topic's `top_n` terms, averaged over ordered
/// pairs (i > j, j ranked higher). Terms absent from `docs` are skipped.
pub fn coherence_umass(m: &LdaModel, docs: &[BowDoc], top_n: usize) -> Result<Coherence, TopicsError> {
    if top_n < 2 {
        return Err(TopicsError::Param(format!("coherence needs top_n ≥ 2, got {top_n}")));
    }
    let df = |w: usize| docs.iter().filter(|d| d.contains(w)).count();
    let co = |a: usize, b: usize| docs.iter().filter(|d| d.contains(a) && d.contains(b)).count();
    let mut per_topic = Vec::with_capacity(m.k);
    for k in 0..m.k {
        let mut terms = Vec::new();
        for w in m.ranked_terms(k) {
            if terms.len() == top_n {
                break;
            }
            if df(w) == 0 {
                log::warn!("topic {k}: term {w} has zero document frequency, skipped");
                continue;
            }
            terms.push(w);
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 1..terms.len() {
            for j in 0..i {
                sum += umass_pair(co(terms[i], terms[j]), df(terms[j]));
                pairs += 1;
            }
        }
        per_topic.push(if pairs == 0 { 0.0 } else { sum / pairs as f64 });
    }
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(Coherence { per_topic, mean })
}

#[derive(Debug, Clone)]
pub struct TopicSelection {
    pub best_k: usize,
    pub coherence_by_k: Vec<(usize, f64)>,
    pub model: LdaModel,
}

/// Fits every candidate K with the same seed and keeps the highest mean
/// coherence; ties go to the smaller K.
pub fn select_topic_count(
    docs: &[BowDoc],
    vocab_size: usize,
    candidates: &[usize],
    params: &LdaParams,
    coherence_top_n: usize,
) -> Result<TopicSelection, TopicsError> {
    if candidates.is_empty() {
        return Err(TopicsError::Param("no topic-count candidates".into()));
    }
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let fits: Vec<Result<(usize, f64, LdaModel), TopicsError>> = ks
        .par_iter()
        .map(|&k| {
            let m = lda_gibbs(docs, vocab_size, &params.with_k(k))?;
            let c = coherence_umass(&m, docs, coherence_top_n)?;
            Ok((k, c.mean, m))
        })
        .collect();
    let mut best: Option<(usize, f64, LdaModel)> = None;
    let mut coherence_by_k = Vec::new();
    for fit in fits {
        let (k, c, m) = fit?;
        coherence_by_k.push((k, c));
        if best.as_ref().is_none_or(|(_, bc, _)| c > *bc) {
            best = Some((k, c, m));
        }
    }
    let (best_k, _, model) = best.expect("at least one candidate");
    Ok(TopicSelection {
        best_k,
        coherence_by_k,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bow(entries: &[(usize, usize)]) -> BowDoc {
        BowDoc {
            entries: entries.to_vec(),
        }
    }

    #[test]
    fn single_token_corpus() {
        let p = LdaParams {
            k: 2,
            ..LdaParams::default()
        };
        let m = lda_gibbs(&[bow(&[(0, 1)])], 1, &p).unwrap();
        let theta = m.doc_topic_dist(0);
        // α = 25 swamps a single token
        assert!((theta[0] - 0.5).abs() < 0.03);
        for k in 0..2 {
            assert!((m.topic_term_dist(k)[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn preconditions() {
        let docs = [bow(&[(0, 2), (1, 1)])];
        let bad_iter = LdaParams {
            k: 2,
            iterations: 50,
            burn_in: 50,
            ..LdaParams::default()
        };
        assert!(matches!(lda_gibbs(&docs, 2, &bad_iter), Err(TopicsError::Param(_))));
        let one_topic = LdaParams { k: 1, ..bad_iter };
        assert!(lda_gibbs(&docs, 2, &one_topic).is_err());
        assert!(matches!(
            lda_gibbs(&[bow(&[])], 2, &LdaParams::default()),
            Err(TopicsError::EmptyCorpus)
        ));
    }

    #[test]
    fn umass_hand_values() {
        assert!((umass_pair(10, 10) - (11.0f64 / 10.0).ln()).abs() < 1e-12);
        assert!((umass_pair(0, 10) - (0.1f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn two_term_topic_equals_pair_score() {
        // term 0 in all 10 docs, term 1 in 4 of them
        let docs: Vec<BowDoc> = (0..10)
            .map(|i| if i < 4 { bow(&[(0, 1), (1, 1)]) } else { bow(&[(0, 1)]) })
            .collect();
        let m = LdaModel {
            k: 2,
            alpha: 1.0,
            beta: 0.01,
            iterations: 2,
            burn_in: 1,
            seed: 0,
            vocab_size: 2,
            topic_term_counts: vec![vec![5.0, 1.0], vec![1.0, 5.0]],
            doc_topic_counts: vec![vec![1.0, 1.0]; 10],
        };
        let c = coherence_umass(&m, &docs, 2).unwrap();
        // topic 0 ranks term 0 first: ln((4+1)/10); topic 1: ln((4+1)/4)
        assert!((c.per_topic[0] - (0.5f64).ln()).abs() < 1e-12);
        assert!((c.per_topic[1] - (1.25f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn single_candidate() {
        let docs: Vec<BowDoc> = (0..6).map(|i| bow(&[(i % 3, 2), (3 + i % 2, 1)])).collect();
        let p = LdaParams {
            iterations: 20,
            burn_in: 5,
            ..LdaParams::default()
        };
        let s = select_topic_count(&docs, 5, &[5], &p, 3).unwrap();
        assert_eq!(s.best_k, 5);
        assert_eq!(s.coherence_by_k.len(), 1);
    }
}
