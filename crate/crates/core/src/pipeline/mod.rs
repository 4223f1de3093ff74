//! End-to-end orchestration: ingest, dedupe, normalize, split, vectorize,
//! train (or tune), evaluate and topic-model the misclassified tweets.
//!
//! Every artifact lands under the output directory. `manifest.json` is
//! rewritten after each stage so a failed run still documents what it
//! produced.

mod config;
mod demo;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::corpus::{dedupe, load_corpus, stratified_split, Dataset, SentimentLabel};
use crate::eval::{classification_report, confusion_matrix, two_path_check, weighted_f1, ClassificationReport};
use crate::normalize::{bundled_lexicon, normalize, LexiconSet, NormalizedText};
use crate::svm::{save_model, train_multiclass_with_report, SvmHyperParams, SvmModel};
use crate::topics::{
    apply_phrases, build_dictionary, detect_phrases, misclassified, select_topic_count, top_terms, LdaParams,
    LdaPreprocessor, TopicReport,
};
use crate::tune::{
    best_trial, cross_val_f1, params_to_svm, run_search, svm_default_space, trial_to_json, CvData, Params,
    SearchOptions, Searcher,
};
use crate::vectorize::{build_vocabulary, tfidf_fit, TfIdfModel};

pub use config::{sha256_hex, ConfigError, LdaSettings, LexiconPaths, PipelineConfig, TuneSearcher, TuneSettings};
pub use demo::{generate_demo, DemoSpec};

pub const STAGES: [&str; 8] = [
    "ingest",
    "dedupe",
    "normalize",
    "split",
    "vectorize",
    "train",
    "evaluate",
    "topics",
];
pub const MANIFEST_FILE: &str = "manifest.json";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stage `index`: splitmix64 of `master + (index + 1) * golden`.
pub fn stage_seed(master: u64, index: usize) -> u64 {
    mix(master.wrapping_add((index as u64 + 1).wrapping_mul(GOLDEN)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StageStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub output_paths: Vec<String>,
    pub seed: u64,
    /// SHA-256 per output path.
    #[serde(default)]
    pub sha256: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub input_sha256: String,
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Io(std::io::Error::other(e)))
    }

    pub fn all_ok(&self) -> bool {
        self.stages.len() == STAGES.len() && self.stages.iter().all(|s| s.status == StageStatus::Ok)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage {stage} failed: {cause}")]
    Stage { stage: &'static str, cause: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// 2 for configuration problems, 3 for anything raised while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub manifest: Manifest,
    pub report: ClassificationReport,
    pub topic_report: TopicReport,
    /// "misclassified" or "test" when too few errors were left to model.
    pub topic_corpus: String,
    pub hyper_params: SvmHyperParams,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: PathBuf,
    manifest: Manifest,
}

impl Run<'_> {
    fn write(&self, rel: &str, bytes: &[u8]) -> Result<(), String> {
        let path = self.out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| e.to_string())?;
        }
        fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))
    }

    fn save_manifest(&self) -> Result<(), PipelineError> {
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(self.out.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }

    /// Runs stage `index`; `body` returns the relative paths it wrote.
    fn stage<T>(
        &mut self,
        index: usize,
        body: impl FnOnce(&Self, u64) -> Result<(T, Vec<String>), String>,
    ) -> Result<T, PipelineError> {
        let name = STAGES[index];
        let seed = stage_seed(self.cfg.seed, index);
        log::info!("stage {name} (seed {seed})");
        match body(self, seed) {
            Ok((value, paths)) => {
                let mut sha256 = Vec::with_capacity(paths.len());
                for p in &paths {
                    sha256.push(sha256_hex(&fs::read(self.out.join(p))?));
                }
                self.manifest.stages.push(StageRecord {
                    name: name.to_string(),
                    status: StageStatus::Ok,
                    output_paths: paths,
                    seed,
                    sha256,
                    error: None,
                });
                self.save_manifest()?;
                Ok(value)
            }
            Err(cause) => {
                self.manifest.stages.push(StageRecord {
                    name: name.to_string(),
                    status: StageStatus::Failed,
                    output_paths: Vec::new(),
                    seed,
                    sha256: Vec::new(),
                    error: Some(cause.clone()),
                });
                self.save_manifest()?;
                Err(PipelineError::Stage { stage: name, cause })
            }
        }
    }
}

fn normalized_jsonl(d: &Dataset, norm: &[NormalizedText]) -> String {
    let mut s = String::new();
    for (r, n) in d.records.iter().zip(norm) {
        let line = json!({
            "id": r.tweet.id,
            "label": r.label.map(|l| l.as_str()),
            "mode": n.mode,
            "text": n.text,
            "tokens": n.tokens,
        });
        s.push_str(&line.to_string());
        s.push('\n');
    }
    s
}

fn tune_hyper_params(
    cfg: &PipelineConfig,
    docs: &[Vec<String>],
    labels: &[SentimentLabel],
    seed: u64,
) -> Result<(SvmHyperParams, String), String> {
    let data = CvData {
        docs,
        labels,
        max_features: cfg.max_features,
        l2_normalize: cfg.l2_normalize,
    };
    let base = cfg.svm;
    let folds = cfg.tune.folds;
    let objective = move |p: &Params| -> Result<f64, String> {
        let hp = params_to_svm(p, &base).map_err(|e| e.to_string())?;
        cross_val_f1(&data, &hp, folds, seed).map_err(|e| e.to_string())
    };
    let searcher = match cfg.tune.searcher {
        TuneSearcher::Random => Searcher::Random,
        TuneSearcher::Smbo => Searcher::Smbo { init: cfg.tune.init },
    };
    let trials = run_search(
        searcher,
        &svm_default_space(),
        &objective,
        cfg.tune.budget,
        seed,
        &SearchOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let best = best_trial(&trials).ok_or("every tuning trial failed")?;
    let hp = params_to_svm(&best.params, &base).map_err(|e| e.to_string())?;
    let mut ledger = String::new();
    for t in &trials {
        log::debug!("trial {} took {} ms", t.index, t.duration_ms);
        // wall-clock times would make the artifact irreproducible
        let mut t = t.clone();
        t.duration_ms = 0;
        ledger.push_str(&trial_to_json(&t));
        ledger.push('\n');
    }
    Ok((hp, ledger))
}

/// Validates `cfg` and runs all stages. Artifacts and the manifest are
/// written even when a stage fails.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    cfg.validate()?;
    let lexicon = match (&cfg.lexicons.emoji, &cfg.lexicons.slang, &cfg.lexicons.contractions) {
        (Some(e), Some(s), Some(c)) => LexiconSet::load(e, s, c).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        _ => bundled_lexicon().clone(),
    };
    let pre = match (&cfg.lda.stopwords, &cfg.lda.lemmas) {
        (Some(s), Some(l)) => LdaPreprocessor::load(s, l).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        _ => LdaPreprocessor::bundled(),
    };
    let input = fs::read(&cfg.dataset).map_err(|e| ConfigError::Invalid(format!("{}: {e}", cfg.dataset.display())))?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut run = Run {
        cfg,
        out: cfg.output_dir.clone(),
        manifest: Manifest {
            config_hash: cfg.hash(),
            master_seed: cfg.seed,
            input_sha256: sha256_hex(&input),
            stages: Vec::new(),
        },
    };
    fs::write(run.out.join("config.ini"), cfg.to_ini())?;
    run.save_manifest()?;

    let raw = run.stage(0, |r, _| {
        let d = load_corpus(&cfg.dataset, cfg.corpus_format()).map_err(|e| e.to_string())?;
        r.write("corpus.jsonl", d.to_jsonl().as_bytes())?;
        log::info!("ingested {} records", d.len());
        Ok((d, vec!["corpus.jsonl".into()]))
    })?;

    let unique = run.stage(1, |r, _| {
        let d = dedupe(&raw);
        log::info!("dedupe kept {} of {}", d.len(), raw.len());
        r.write("deduped.jsonl", d.to_jsonl().as_bytes())?;
        Ok((d, vec!["deduped.jsonl".into()]))
    })?;

    let normalized = run.stage(2, |r, _| {
        let norm: Vec<NormalizedText> = unique
            .records
            .par_iter()
            .map(|t| normalize(&t.tweet.text, cfg.mode, &lexicon))
            .collect();
        r.write("normalized.jsonl", normalized_jsonl(&unique, &norm).as_bytes())?;
        Ok((norm, vec!["normalized.jsonl".into()]))
    })?;
    let tokens_of: HashMap<&str, &Vec<String>> = unique
        .records
        .iter()
        .zip(&normalized)
        .map(|(r, n)| (r.tweet.id.as_str(), &n.tokens))
        .collect();
    let docs_of = |d: &Dataset| -> Vec<Vec<String>> {
        d.records
            .iter()
            .map(|r| tokens_of[r.tweet.id.as_str()].clone())
            .collect()
    };

    let splits = run.stage(3, |r, seed| {
        let s = stratified_split(&unique, &cfg.split_spec(seed)).map_err(|e| e.to_string())?;
        let mut paths = Vec::new();
        for (name, d) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
            let rel = format!("split/{name}.jsonl");
            r.write(&rel, d.to_jsonl().as_bytes())?;
            paths.push(rel);
        }
        Ok((s, paths))
    })?;
    let train_docs = docs_of(&splits.train);
    let train_labels = splits.train.labels().map_err(|e| PipelineError::Stage {
        stage: "split",
        cause: e.to_string(),
    })?;

    let tfidf: TfIdfModel = run.stage(4, |r, _| {
        let vocab = build_vocabulary(&train_docs, cfg.max_features).map_err(|e| e.to_string())?;
        let m = tfidf_fit(&train_docs, vocab, cfg.l2_normalize);
        r.write("tfidf.json", m.to_json().as_bytes())?;
        Ok((m, vec!["tfidf.json".into()]))
    })?;

    let (model, hp): (SvmModel, SvmHyperParams) = run.stage(5, |r, seed| {
        let mut paths = Vec::new();
        let hp = if cfg.tune.enabled {
            let (hp, ledger) = tune_hyper_params(cfg, &train_docs, &train_labels, seed)?;
            r.write("trials.jsonl", ledger.as_bytes())?;
            paths.push("trials.jsonl".to_string());
            hp
        } else {
            cfg.svm
        };
        let xs = tfidf.transform_all(&train_docs);
        let (model, summary) =
            train_multiclass_with_report(&xs, &train_labels, &hp, seed).map_err(|e| e.to_string())?;
        if !summary.all_converged() {
            log::warn!("some pairwise machines hit the iteration cap");
        }
        let val_pred = model
            .predict_all(&tfidf.transform_all(&docs_of(&splits.val)))
            .map_err(|e| e.to_string())?;
        let val_f1 =
            weighted_f1(&splits.val.labels().map_err(|e| e.to_string())?, &val_pred).map_err(|e| e.to_string())?;
        let machines: Vec<_> = model
            .machines
            .iter()
            .zip(&summary.reports)
            .map(|(m, rep)| {
                json!({
                    "pair": [m.class_pair.0.as_str(), m.class_pair.1.as_str()],
                    "converged": rep.status == crate::svm::SmoStatus::Converged,
                    "iterations": rep.iterations,
                    "gap": rep.gap,
                    "support_vectors": m.support_vectors.len(),
                })
            })
            .collect();
        let summary_json = json!({
            "tuned": cfg.tune.enabled,
            "kernel": hp.kernel.name(),
            "gamma": hp.kernel.gamma(),
            "C": hp.c,
            "train_records": xs.len(),
            "val_weighted_f1": val_f1,
            "machines": machines,
        });
        save_model(&model, &r.out.join("model.json")).map_err(|e| e.to_string())?;
        r.write(
            "train_summary.json",
            (serde_json::to_string_pretty(&summary_json).expect("json") + "\n").as_bytes(),
        )?;
        paths.push("model.json".into());
        paths.push("train_summary.json".into());
        Ok(((model, hp), paths))
    })?;

    let test_docs = docs_of(&splits.test);
    let (report, predictions) = run.stage(6, |r, _| {
        let gold = splits.test.labels().map_err(|e| e.to_string())?;
        let pred = model
            .predict_all(&tfidf.transform_all(&test_docs))
            .map_err(|e| e.to_string())?;
        let m = confusion_matrix(&gold, &pred).map_err(|e| e.to_string())?;
        let report = classification_report(&m).map_err(|e| e.to_string())?;
        two_path_check(&gold, &pred, &report, 1e-9).map_err(|e| e.to_string())?;
        let mut tsv = String::from("id\tgold\tpredicted\n");
        for ((rec, g), p) in splits.test.records.iter().zip(&gold).zip(&pred) {
            tsv.push_str(&format!("{}\t{}\t{}\n", rec.tweet.id, g.as_str(), p.as_str()));
        }
        r.write("predictions.tsv", tsv.as_bytes())?;
        r.write("classification_report.json", (report.to_json() + "\n").as_bytes())?;
        r.write("classification_report.txt", report.render_text().as_bytes())?;
        Ok((
            (report, pred),
            vec![
                "predictions.tsv".into(),
                "classification_report.json".into(),
                "classification_report.txt".into(),
            ],
        ))
    })?;

    let (topic_report, topic_corpus) = run.stage(7, |r, seed| {
        let wrong = misclassified(&splits.test, &predictions).map_err(|e| e.to_string())?;
        r.write("misclassified.jsonl", wrong.to_jsonl().as_bytes())?;
        let (corpus, used) = if wrong.len() < cfg.lda.min_docs {
            log::warn!(
                "only {} misclassified records (< {}); modelling the whole test split",
                wrong.len(),
                cfg.lda.min_docs
            );
            (&splits.test, "test")
        } else {
            (&wrong, "misclassified")
        };
        let prepared: Vec<Vec<String>> = corpus
            .records
            .iter()
            .map(|t| pre.prepare(&t.tweet.text, &lexicon))
            .collect();
        let phrases = detect_phrases(&prepared, cfg.lda.phrase_min_count, cfg.lda.phrase_threshold);
        let docs = apply_phrases(&phrases, &prepared);
        let dict = build_dictionary(&docs).map_err(|e| e.to_string())?;
        let bows = dict.to_bows(&docs);
        let params = LdaParams {
            k: cfg.lda.k_candidates[0],
            alpha: cfg.lda.alpha,
            beta: cfg.lda.beta,
            iterations: cfg.lda.iterations,
            burn_in: cfg.lda.burn_in,
            seed,
        };
        let sel = select_topic_count(
            &bows,
            dict.len(),
            &cfg.lda.k_candidates,
            &params,
            cfg.lda.coherence_top_n,
        )
        .map_err(|e| e.to_string())?;
        let report = top_terms(&sel.model, &dict, cfg.lda.top_n).with_coherence(&sel.coherence_by_k);
        let mut value = serde_json::to_value(&report).expect("report serializes");
        value["corpus_used"] = json!(used);
        value["documents"] = json!(docs.len());
        r.write(
            "topic_report.json",
            (serde_json::to_string_pretty(&value).expect("json") + "\n").as_bytes(),
        )?;
        r.write("topic_report.txt", report.render_text(10).as_bytes())?;
        Ok((
            (report, used.to_string()),
            vec![
                "misclassified.jsonl".into(),
                "topic_report.json".into(),
                "topic_report.txt".into(),
            ],
        ))
    })?;

    Ok(PipelineOutcome {
        manifest: run.manifest,
        report,
        topic_report,
        topic_corpus,
        hyper_params: hp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_seeds_differ_and_are_stable() {
        let seeds: Vec<u64> = (0..STAGES.len()).map(|i| stage_seed(42, i)).collect();
        let mut uniq = seeds.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), seeds.len());
        assert_eq!(stage_seed(42, 3), seeds[3]);
        assert_ne!(stage_seed(43, 3), seeds[3]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(PipelineError::Config(ConfigError::Invalid("x".into())).exit_code(), 2);
        assert_eq!(
            PipelineError::Stage {
                stage: "split",
                cause: "x".into()
            }
            .exit_code(),
            3
        );
    }

    #[test]
    fn missing_lexicon_fails_before_any_stage() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("d.jsonl");
        fs::write(&data, generate_demo(&DemoSpec::default()).to_jsonl()).unwrap();
        let mut cfg = PipelineConfig::new(&data, dir.path().join("out"));
        cfg.lexicons.emoji = Some(dir.path().join("nope.tsv"));
        cfg.lexicons.slang = Some(data.clone());
        cfg.lexicons.contractions = Some(data.clone());
        let err = run_pipeline(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn stage_failure_leaves_failed_marker() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("d.jsonl");
        // unlabelled records cannot be split
        fs::write(
            &data,
            "{\"id\":\"1\",\"text\":\"hello\"}\n{\"id\":\"2\",\"text\":\"there\"}\n",
        )
        .unwrap();
        let cfg = PipelineConfig::new(&data, dir.path().join("out"));
        let err = run_pipeline(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("split"));
        let m = Manifest::load(&dir.path().join("out").join(MANIFEST_FILE)).unwrap();
        let names: Vec<_> = m.stages.iter().map(|s| (s.name.as_str(), s.status)).collect();
        assert_eq!(
            names,
            vec![
                ("ingest", StageStatus::Ok),
                ("dedupe", StageStatus::Ok),
                ("normalize", StageStatus::Ok),
                ("split", StageStatus::Failed)
            ]
        );
        assert!(dir.path().join("out/normalized.jsonl").exists());
    }
}
