//! Hyperparameter search: seeded random search and a tree-structured
//! Parzen estimator (TPE) searcher, plus the cross-validated F1 objective.
//!
//! Trial `i` of a search with seed `s` draws from its own RNG stream
//! `(s, i)`, so a resumed search proposes exactly what an uninterrupted
//! one would have, and the first `init` SMBO trials coincide with random
//! search.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SentimentLabel;
use crate::eval::{weighted_f1, EvalError};
use crate::svm::{train_multiclass, KernelSpec, SvmError, SvmHyperParams};
use crate::vectorize::{build_vocabulary, tfidf_fit, VectorizeError};

pub const DEFAULT_BUDGET: usize = 50;
pub const DEFAULT_INIT: usize = 10;
/// Candidates drawn from the good-trial density per SMBO step.
pub const SMBO_CANDIDATES: usize = 24;

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("invalid search space: {0}")]
    Space(String),
    #[error("invalid search settings: {0}")]
    Settings(String),
    #[error("class {label} has {count} members, fewer than {folds} folds")]
    ClassTooSmall {
        label: SentimentLabel,
        count: usize,
        folds: usize,
    },
    #[error("{docs} documents but {labels} labels")]
    LengthMismatch { docs: usize, labels: usize },
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("trial ledger: {0}")]
    Io(#[from] std::io::Error),
    #[error("trial ledger line {line}: {reason}")]
    Ledger { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ParamSpec {
    Categorical { choices: Vec<String> },
    Continuous { lo: f64, hi: f64, scale: Scale },
    Integer { lo: i64, hi: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Real(r) => Some(*r),
            ParamValue::Cat(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Cat(s) => Some(s),
            _ => None,
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

impl ParamSpec {
    /// Search coordinate: log10 for log-scaled ranges, the value otherwise.
    fn bounds(&self) -> (f64, f64) {
        match self {
            ParamSpec::Continuous {
                lo,
                hi,
                scale: Scale::Log10,
            } => (lo.log10(), hi.log10()),
            ParamSpec::Continuous { lo, hi, .. } => (*lo, *hi),
            ParamSpec::Integer { lo, hi } => (*lo as f64 - 0.5, *hi as f64 + 0.5),
            ParamSpec::Categorical { .. } => (0.0, 0.0),
        }
    }

    fn to_coord(&self, v: &ParamValue) -> Option<f64> {
        let x = v.as_f64()?;
        Some(match self {
            ParamSpec::Continuous {
                scale: Scale::Log10, ..
            } => x.log10(),
            _ => x,
        })
    }

    fn value_at(&self, t: f64) -> ParamValue {
        match self {
            ParamSpec::Continuous { lo, hi, scale } => {
                let v = match scale {
                    Scale::Log10 => 10f64.powf(t),
                    Scale::Linear => t,
                };
                ParamValue::Real(v.clamp(*lo, *hi))
            }
            ParamSpec::Integer { lo, hi } => ParamValue::Int((t.round() as i64).clamp(*lo, *hi)),
            ParamSpec::Categorical { .. } => unreachable!("categorical has no coordinate"),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> ParamValue {
        match self {
            ParamSpec::Categorical { choices } => ParamValue::Cat(choices.choose(rng).expect("non-empty").clone()),
            ParamSpec::Integer { lo, hi } => ParamValue::Int(rng.gen_range(*lo..=*hi)),
            ParamSpec::Continuous { .. } => {
                let (a, b) = self.bounds();
                self.value_at(rng.gen_range(a..=b))
            }
        }
    }

    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (ParamSpec::Categorical { choices }, ParamValue::Cat(c)) => choices.contains(c),
            (ParamSpec::Integer { lo, hi }, ParamValue::Int(i)) => lo <= i && i <= hi,
            (ParamSpec::Continuous { lo, hi, .. }, v) => v.as_f64().is_some_and(|x| *lo <= x && x <= *hi),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchSpace {
    params: Vec<(String, ParamSpec)>,
}

impl SearchSpace {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(mut self, name: &str, spec: ParamSpec) -> Result<Self, TuneError> {
        if self.params.iter().any(|(n, _)| n == name) {
            return Err(TuneError::Space(format!("duplicate parameter {name:?}")));
        }
        self.params.push((name.to_string(), spec));
        Ok(self)
    }

    pub fn categorical(self, name: &str, choices: &[&str]) -> Result<Self, TuneError> {
        if choices.is_empty() {
            return Err(TuneError::Space(format!("{name}: empty choice list")));
        }
        let choices = choices.iter().map(|s| s.to_string()).collect();
        self.push(name, ParamSpec::Categorical { choices })
    }

    pub fn continuous(self, name: &str, lo: f64, hi: f64, scale: Scale) -> Result<Self, TuneError> {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(TuneError::Space(format!("{name}: need lo < hi, got [{lo}, {hi}]")));
        }
        if scale == Scale::Log10 && lo <= 0.0 {
            return Err(TuneError::Space(format!("{name}: log10 range must be positive")));
        }
        self.push(name, ParamSpec::Continuous { lo, hi, scale })
    }

    pub fn integer(self, name: &str, lo: i64, hi: i64) -> Result<Self, TuneError> {
        if lo > hi {
            return Err(TuneError::Space(format!("{name}: need lo ≤ hi, got [{lo}, {hi}]")));
        }
        self.push(name, ParamSpec::Integer { lo, hi })
    }

    pub fn params(&self) -> &[(String, ParamSpec)] {
        &self.params
    }

    pub fn get(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn contains(&self, p: &Params) -> bool {
        p.len() == self.params.len() && self.params.iter().all(|(n, s)| p.get(n).is_some_and(|v| s.contains(v)))
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Params {
        self.params.iter().map(|(n, s)| (n.clone(), s.sample(rng))).collect()
    }
}

/// kernel ∈ {rbf, linear}; gamma ∈ [1e-4, 1] and C ∈ [1e-4, 10], both
/// searched in log10.
pub fn svm_default_space() -> SearchSpace {
    SearchSpace::new()
        .categorical("kernel", &["rbf", "linear"])
        .and_then(|s| s.continuous("gamma", 1e-4, 1.0, Scale::Log10))
        .and_then(|s| s.continuous("C", 1e-4, 10.0, Scale::Log10))
        .expect("default space is valid")
}

/// Applies `kernel`, `gamma` and `C` from `p` on top of `base`.
pub fn params_to_svm(p: &Params, base: &SvmHyperParams) -> Result<SvmHyperParams, SvmError> {
    let mut hp = *base;
    if let Some(c) = p.get("C").and_then(ParamValue::as_f64) {
        hp.c = c;
    }
    let gamma = p.get("gamma").and_then(ParamValue::as_f64).or(base.kernel.gamma());
    if let Some(kind) = p.get("kernel").and_then(ParamValue::as_str) {
        hp.kernel = KernelSpec::from_parts(kind, gamma)?;
    } else if let (KernelSpec::Rbf { .. }, Some(g)) = (hp.kernel, gamma) {
        hp.kernel = KernelSpec::rbf(g);
    }
    hp.validate()?;
    Ok(hp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub params: Params,
    /// Objective value; −∞ for failed trials.
    pub score: f64,
    pub seed: u64,
    pub duration_ms: u64,
    pub status: TrialStatus,
    pub error: Option<String>,
}

impl Trial {
    pub fn succeeded(&self) -> bool {
        self.status == TrialStatus::Ok
    }
}

/// Highest score; earliest trial wins ties. `None` if every trial failed.
pub fn best_trial(trials: &[Trial]) -> Option<&Trial> {
    trials
        .iter()
        .filter(|t| t.succeeded())
        .fold(None, |best: Option<&Trial>, t| match best {
            Some(b) if b.score >= t.score => Some(b),
            _ => Some(t),
        })
}

#[derive(Serialize, Deserialize)]
struct TrialRecord {
    index: usize,
    params: Params,
    score: Option<f64>,
    seed: u64,
    duration_ms: u64,
    status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl From<&Trial> for TrialRecord {
    fn from(t: &Trial) -> Self {
        TrialRecord {
            index: t.index,
            params: t.params.clone(),
            score: t.succeeded().then_some(t.score),
            seed: t.seed,
            duration_ms: t.duration_ms,
            status: t.status.clone(),
            error: t.error.clone(),
        }
    }
}

pub fn trial_to_json(t: &Trial) -> String {
    serde_json::to_string(&TrialRecord::from(t)).expect("trial serializes")
}

pub fn read_ledger(path: &Path) -> Result<Vec<Trial>, TuneError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |reason: String| TuneError::Ledger { line: i + 1, reason };
        let r: TrialRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let score = match (&r.status, r.score) {
            (TrialStatus::Ok, Some(s)) => s,
            (TrialStatus::Failed, _) => f64::NEG_INFINITY,
            (TrialStatus::Ok, None) => return Err(bad("successful trial without score".into())),
        };
        out.push(Trial {
            index: r.index,
            params: r.params,
            score,
            seed: r.seed,
            duration_ms: r.duration_ms,
            status: r.status,
            error: r.error,
        });
    }
    Ok(out)
}

fn append_ledger(path: &Path, trials: &[Trial]) -> Result<(), TuneError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    for t in trials {
        writeln!(f, "{}", trial_to_json(t))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Searcher {
    Random,
    Smbo { init: usize },
}

#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    /// Append each finished trial to this JSONL file.
    pub ledger: Option<PathBuf>,
    /// Replay existing ledger trials instead of re-running them.
    pub resume: bool,
}

pub trait Objective: Sync {
    fn evaluate(&self, params: &Params) -> Result<f64, String>;
}

impl<F> Objective for F
where
    F: Fn(&Params) -> Result<f64, String> + Sync,
{
    fn evaluate(&self, params: &Params) -> Result<f64, String> {
        self(params)
    }
}

fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn run_trial(objective: &dyn Objective, params: Params, index: usize, seed: u64) -> Trial {
    let start = Instant::now();
    let result = objective.evaluate(&params);
    let duration_ms = start.elapsed().as_millis() as u64;
    let (score, status, error) = match result {
        Ok(s) if s.is_finite() => (s, TrialStatus::Ok, None),
        Ok(s) => (
            f64::NEG_INFINITY,
            TrialStatus::Failed,
            Some(format!("non-finite score {s}")),
        ),
        Err(e) => (f64::NEG_INFINITY, TrialStatus::Failed, Some(e)),
    };
    if let Some(e) = &error {
        log::warn!("trial {index} failed: {e}");
    }
    Trial {
        index,
        params,
        score,
        seed,
        duration_ms,
        status,
        error,
    }
}

pub fn random_search(
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    seed: u64,
) -> Result<Vec<Trial>, TuneError> {
    run_search(
        Searcher::Random,
        space,
        objective,
        budget,
        seed,
        &SearchOptions::default(),
    )
}

pub fn smbo_search(
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    seed: u64,
    init: usize,
) -> Result<Vec<Trial>, TuneError> {
    run_search(
        Searcher::Smbo { init },
        space,
        objective,
        budget,
        seed,
        &SearchOptions::default(),
    )
}

pub fn run_search(
    searcher: Searcher,
    space: &SearchSpace,
    objective: &dyn Objective,
    budget: usize,
    seed: u64,
    opts: &SearchOptions,
) -> Result<Vec<Trial>, TuneError> {
    if budget == 0 {
        return Err(TuneError::Settings("budget must be at least 1".into()));
    }
    if space.is_empty() {
        return Err(TuneError::Space("no parameters".into()));
    }
    let init = match searcher {
        Searcher::Random => budget,
        Searcher::Smbo { init } if init < 2 => {
            return Err(TuneError::Settings(format!("SMBO needs init ≥ 2, got {init}")));
        }
        Searcher::Smbo { init } => init.min(budget),
    };

    let mut trials = Vec::new();
    if let Some(path) = &opts.ledger {
        if opts.resume && path.exists() {
            trials = read_ledger(path)?;
            for (i, t) in trials.iter().enumerate() {
                if t.index != i || t.seed != seed || !space.contains(&t.params) {
                    return Err(TuneError::Ledger {
                        line: i + 1,
                        reason: "trial does not belong to this search (index, seed or space differ)".into(),
                    });
                }
            }
            trials.truncate(budget);
            log::info!("resumed {} trials from {}", trials.len(), path.display());
        } else if path.exists() {
            fs::remove_file(path)?;
        }
    }

    // random phase: proposals depend only on (seed, index), evaluate in parallel
    let start = trials.len();
    if start < init {
        let batch: Vec<Trial> = (start..init)
            .into_par_iter()
            .map(|i| run_trial(objective, space.sample(&mut trial_rng(seed, i)), i, seed))
            .collect();
        if let Some(path) = &opts.ledger {
            append_ledger(path, &batch)?;
        }
        trials.extend(batch);
    }
    while trials.len() < budget {
        let i = trials.len();
        let params = propose_tpe(space, &trials, &mut trial_rng(seed, i));
        let t = run_trial(objective, params, i, seed);
        if let Some(path) = &opts.ledger {
            append_ledger(path, std::slice::from_ref(&t))?;
        }
        trials.push(t);
    }
    Ok(trials)
}

/// Fixed-bandwidth Gaussian mixture over observed coordinates plus a
/// uniform prior component, on `[a, b]`.
struct Parzen {
    centres: Vec<f64>,
    h: f64,
    a: f64,
    b: f64,
}

impl Parzen {
    fn new(centres: Vec<f64>, a: f64, b: f64) -> Self {
        let n = centres.len().max(1) as f64;
        let h = (b - a) * (0.3 * n.powf(-0.2)).clamp(0.05, 0.5);
        Parzen { centres, h, a, b }
    }

    fn density(&self, x: f64) -> f64 {
        let k = self.centres.len() as f64 + 1.0;
        let norm = 1.0 / (self.h * (2.0 * std::f64::consts::PI).sqrt());
        let mix: f64 = self
            .centres
            .iter()
            .map(|c| norm * (-0.5 * ((x - c) / self.h).powi(2)).exp())
            .sum();
        (mix + 1.0 / (self.b - self.a)) / k
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let pick = rng.gen_range(0..=self.centres.len());
        if pick == self.centres.len() {
            return rng.gen_range(self.a..=self.b);
        }
        let c = self.centres[pick];
        for _ in 0..16 {
            let x = c + self.h * standard_normal(rng);
            if (self.a..=self.b).contains(&x) {
                return x;
            }
        }
        c
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn categorical_probs(choices: &[String], values: &[&ParamValue]) -> Vec<f64> {
    let total = values.len() as f64 + choices.len() as f64;
    choices
        .iter()
        .map(|c| (values.iter().filter(|v| v.as_str() == Some(c)).count() as f64 + 1.0) / total)
        .collect()
}

/// Draws candidates from the good-trial density l(x) and returns the one
/// maximising l(x)/g(x). Trials are split at the median score; failures
/// always count as bad.
fn propose_tpe(space: &SearchSpace, history: &[Trial], rng: &mut ChaCha8Rng) -> Params {
    let mut ranked: Vec<&Trial> = history.iter().filter(|t| t.succeeded()).collect();
    if ranked.len() < 2 {
        return space.sample(rng);
    }
    ranked.sort_by(|x, y| y.score.total_cmp(&x.score).then(x.index.cmp(&y.index)));
    let n_good = ranked.len().div_ceil(2);
    let good: Vec<&Trial> = ranked[..n_good].to_vec();
    let bad: Vec<&Trial> = ranked[n_good..]
        .iter()
        .copied()
        .chain(history.iter().filter(|t| !t.succeeded()))
        .collect();

    enum Model {
        Cont(Parzen, Parzen),
        Cat(Vec<f64>, Vec<f64>),
    }
    let models: Vec<Model> = space
        .params()
        .iter()
        .map(|(name, spec)| {
            let vals = |set: &[&Trial]| -> Vec<ParamValue> {
                set.iter().filter_map(|t| t.params.get(name).cloned()).collect()
            };
            let (gv, bv) = (vals(&good), vals(&bad));
            match spec {
                ParamSpec::Categorical { choices } => Model::Cat(
                    categorical_probs(choices, &gv.iter().collect::<Vec<_>>()),
                    categorical_probs(choices, &bv.iter().collect::<Vec<_>>()),
                ),
                _ => {
                    let (a, b) = spec.bounds();
                    let coords = |vs: &[ParamValue]| vs.iter().filter_map(|v| spec.to_coord(v)).collect::<Vec<_>>();
                    Model::Cont(Parzen::new(coords(&gv), a, b), Parzen::new(coords(&bv), a, b))
                }
            }
        })
        .collect();

    let mut best: Option<(f64, Params)> = None;
    for _ in 0..SMBO_CANDIDATES {
        let mut params = Params::new();
        let mut score = 0.0;
        for ((name, spec), model) in space.params().iter().zip(&models) {
            match (spec, model) {
                (ParamSpec::Categorical { choices }, Model::Cat(l, g)) => {
                    let u: f64 = rng.gen();
                    let mut acc = 0.0;
                    let mut k = choices.len() - 1;
                    for (i, p) in l.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            k = i;
                            break;
                        }
                    }
                    score += l[k].ln() - g[k].ln();
                    params.insert(name.clone(), ParamValue::Cat(choices[k].clone()));
                }
                (_, Model::Cont(l, g)) => {
                    let v = spec.value_at(l.sample(rng));
                    let x = spec.to_coord(&v).expect("numeric");
                    score += l.density(x).ln() - g.density(x).ln();
                    params.insert(name.clone(), v);
                }
                _ => unreachable!("model kind follows spec kind"),
            }
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, params));
        }
    }
    best.expect("at least one candidate").1
}

/// Tokenized training data for cross-validation.
#[derive(Debug, Clone, Copy)]
pub struct CvData<'a> {
    pub docs: &'a [Vec<String>],
    pub labels: &'a [SentimentLabel],
    pub max_features: usize,
    pub l2_normalize: bool,
}

/// Fold index per record: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[SentimentLabel], k: usize, seed: u64) -> Result<Vec<usize>, TuneError> {
    if k < 2 {
        return Err(TuneError::Settings(format!("need at least 2 folds, got {k}")));
    }
    let mut fold = vec![0; labels.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for label in SentimentLabel::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < k {
            return Err(TuneError::ClassTooSmall {
                label,
                count: idx.len(),
                folds: k,
            });
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    Ok(fold)
}

/// Mean weighted F1 over stratified folds; the vectorizer is refit on each
/// fold's training part.
pub fn cross_val_f1(data: &CvData<'_>, hp: &SvmHyperParams, k: usize, seed: u64) -> Result<f64, TuneError> {
    if data.docs.len() != data.labels.len() {
        return Err(TuneError::LengthMismatch {
            docs: data.docs.len(),
            labels: data.labels.len(),
        });
    }
    hp.validate()?;
    let folds = stratified_folds(data.labels, k, seed)?;
    let scores: Vec<Result<f64, TuneError>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let (mut tr_docs, mut tr_y, mut te_docs, mut te_y) = (vec![], vec![], vec![], vec![]);
            for ((doc, &y), &fold) in data.docs.iter().zip(data.labels).zip(&folds) {
                if fold == f {
                    te_docs.push(doc.clone());
                    te_y.push(y);
                } else {
                    tr_docs.push(doc.clone());
                    tr_y.push(y);
                }
            }
            let vocab = build_vocabulary(&tr_docs, data.max_features)?;
            let tfidf = tfidf_fit(&tr_docs, vocab, data.l2_normalize);
            let model = train_multiclass(&tfidf.transform_all(&tr_docs), &tr_y, hp, seed.wrapping_add(f as u64))?;
            let pred = model.predict_all(&tfidf.transform_all(&te_docs))?;
            Ok(weighted_f1(&te_y, &pred)?)
        })
        .collect();
    let mut sum = 0.0;
    for s in scores {
        sum += s?;
    }
    Ok(sum / k as f64)
}
