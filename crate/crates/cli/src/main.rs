use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tweetsent_core::corpus::{class_distribution, dedupe, load_corpus, stratified_split, CorpusFormat};
use tweetsent_core::eval::{classification_report, confusion_matrix, two_path_check, AgreementFixture};
use tweetsent_core::normalize::{bundled_lexicon, normalize};
use tweetsent_core::pipeline::{generate_demo, run_pipeline, DemoSpec, PipelineConfig, PipelineError};
use tweetsent_core::svm::{load_model, save_model, train_multiclass_with_report};
use tweetsent_core::topics::{
    apply_phrases, build_dictionary, detect_phrases, misclassified, select_topic_count, top_terms, LdaParams,
    LdaPreprocessor, DEFAULT_MIN_COUNT, DEFAULT_THRESHOLD,
};
use tweetsent_core::tune::{
    best_trial, cross_val_f1, params_to_svm, run_search, svm_default_space, CvData, Params, SearchOptions, Searcher,
    DEFAULT_BUDGET, DEFAULT_INIT,
};
use tweetsent_core::vectorize::{build_vocabulary, tfidf_fit, TfIdfModel};
use tweetsent_core::{Dataset, KernelSpec, LabeledTweet, LexiconSet, NormalizationMode, SplitSpec, SvmHyperParams};

/// Bad input or settings; mapped to exit code 2.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

#[derive(Parser)]
#[command(
    name = "tweetsent",
    version,
    about = "Tweet sentiment classification and topic analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a JSONL/CSV corpus, optionally dedupe, and write canonical JSONL.
    Ingest(IngestArgs),
    /// Normalize tweets (one per line for .txt input) and emit JSONL.
    Normalize(NormalizeArgs),
    /// Stratified train/validation/test split.
    Split(SplitArgs),
    /// Fit TF-IDF and a one-vs-one SVM on a labelled corpus.
    Train(TrainArgs),
    /// Search SVM hyperparameters by cross-validated weighted F1.
    Tune(TuneArgs),
    /// Score a trained model on a labelled corpus.
    Evaluate(EvaluateArgs),
    /// Agreement between hand labels and a lexicon tool.
    Agreement(AgreementArgs),
    /// LDA topics over a corpus or its misclassified subset.
    Topics(TopicsArgs),
    /// Run every stage from an INI config.
    Run(RunArgs),
    /// Write the synthetic labelled demo corpus.
    GenerateDemo(DemoArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Corpus file.
    #[arg(short, long)]
    input: PathBuf,
    /// jsonl, csv or text; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Default)]
struct LexArgs {
    #[arg(long, requires_all = ["slang", "contractions"])]
    emoji: Option<PathBuf>,
    #[arg(long, requires_all = ["emoji", "contractions"])]
    slang: Option<PathBuf>,
    #[arg(long, requires_all = ["emoji", "slang"])]
    contractions: Option<PathBuf>,
}

impl LexArgs {
    fn load(&self) -> Result<LexiconSet> {
        match (&self.emoji, &self.slang, &self.contractions) {
            (Some(e), Some(s), Some(c)) => LexiconSet::load(e, s, c).map_err(|e| invalid(e.to_string())),
            _ => Ok(bundled_lexicon().clone()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lexical,
    Semantic,
}

impl From<ModeArg> for NormalizationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Lexical => NormalizationMode::Lexical,
            ModeArg::Semantic => NormalizationMode::Semantic,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    dedupe: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NormalizeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "lexical")]
    mode: ModeArg,
    #[command(flatten)]
    lex: LexArgs,
    /// Write here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.8)]
    train: f64,
    #[arg(long, default_value_t = 0.1)]
    val: f64,
    #[arg(long, default_value_t = 0.1)]
    test: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FeatureArgs {
    #[arg(long, value_enum, default_value = "lexical")]
    mode: ModeArg,
    #[arg(long, default_value_t = 5000)]
    max_features: usize,
    /// Skip L2 row normalization.
    #[arg(long)]
    no_l2: bool,
    #[command(flatten)]
    lex: LexArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[arg(long, default_value = "rbf")]
    kernel: String,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(short = 'C', long = "c", default_value_t = 4.0)]
    c: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for tfidf.json, model.json and features.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearcherArg {
    Random,
    Smbo,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[arg(long, value_enum, default_value = "smbo")]
    searcher: SearcherArg,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_INIT)]
    init: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// JSONL trial ledger, appended as trials finish.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Replay trials already in the ledger.
    #[arg(long, requires = "ledger")]
    resume: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Directory written by `train`.
    #[arg(long)]
    model_dir: PathBuf,
    #[command(flatten)]
    lex: LexArgs,
    /// Also write predictions.tsv and classification_report.json here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum AltArg {
    Vader,
    Textblob,
}

#[derive(Args)]
struct AgreementArgs {
    /// `bundled` for the bundled fixture or a TSV path.
    #[arg(long, default_value = "bundled")]
    fixture: String,
    #[arg(long, value_enum, default_value = "vader")]
    alt: AltArg,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TopicsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// predictions.tsv from `evaluate`; keeps only misclassified records.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 50)]
    burn_in: usize,
    #[arg(long, default_value_t = 30)]
    top_n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, requires = "stopwords")]
    lemmas: Option<PathBuf>,
    #[command(flatten)]
    lex: LexArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set svm.C=2`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 0.4)]
    cue_rate: f64,
    #[arg(long, default_value_t = 2021)]
    seed: u64,
}

fn read_dataset(a: &InputArgs) -> Result<Dataset> {
    if !a.input.is_file() {
        return Err(invalid(format!("input {} does not exist", a.input.display())));
    }
    let fmt = a.format.as_deref().map(str::to_ascii_lowercase);
    let is_text = match fmt.as_deref() {
        Some("text") | Some("txt") => true,
        Some(_) => false,
        None => a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt")),
    };
    if is_text {
        let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| LabeledTweet::new((i + 1).to_string(), l, None))
            .collect();
        return Ok(Dataset::new(a.input.display().to_string(), records));
    }
    let format = match fmt {
        Some(f) => f.parse::<CorpusFormat>().map_err(|e| invalid(e.to_string()))?,
        None => CorpusFormat::from_path(&a.input),
    };
    Ok(load_corpus(&a.input, format)?)
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn tokens(d: &Dataset, mode: NormalizationMode, lex: &LexiconSet) -> Vec<Vec<String>> {
    d.records
        .iter()
        .map(|r| normalize(&r.tweet.text, mode, lex).tokens)
        .collect()
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let mut d = read_dataset(&a.input)?;
    if a.dedupe {
        let before = d.len();
        d = dedupe(&d);
        eprintln!("dedupe kept {} of {before}", d.len());
    }
    if let Ok(dist) = class_distribution(&d) {
        eprintln!("{} records; class fractions {:?}", d.len(), dist.fractions);
    }
    emit(a.output.as_deref(), &d.to_jsonl())
}

fn cmd_normalize(a: NormalizeArgs) -> Result<()> {
    let d = read_dataset(&a.input)?;
    let lex = a.lex.load()?;
    let mode = a.mode.into();
    let mut out = String::new();
    for r in &d.records {
        let n = normalize(&r.tweet.text, mode, &lex);
        let line = serde_json::json!({
            "id": r.tweet.id,
            "label": r.label.map(|l| l.as_str()),
            "mode": n.mode,
            "text": n.text,
            "tokens": n.tokens,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    emit(a.output.as_deref(), &out)
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    let d = read_dataset(&a.input)?;
    let s = stratified_split(&d, &SplitSpec::new(a.train, a.val, a.test, a.seed))?;
    fs::create_dir_all(&a.out_dir)?;
    for (name, part) in [("train", &s.train), ("val", &s.val), ("test", &s.test)] {
        fs::write(a.out_dir.join(format!("{name}.jsonl")), part.to_jsonl())?;
        eprintln!("{name}: {} records", part.len());
    }
    Ok(())
}

#[derive(serde::Serialize, serde::Deserialize)]
struct FeatureMeta {
    mode: NormalizationMode,
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let d = read_dataset(&a.input)?;
    let labels = d.labels()?;
    let lex = a.features.lex.load()?;
    let mode = a.features.mode.into();
    let docs = tokens(&d, mode, &lex);
    let vocab = build_vocabulary(&docs, a.features.max_features)?;
    let tfidf = tfidf_fit(&docs, vocab, !a.features.no_l2);
    let kernel = KernelSpec::from_parts(&a.kernel, Some(a.gamma)).map_err(|e| invalid(e.to_string()))?;
    let hp = SvmHyperParams::new(a.c, kernel);
    let (model, summary) = train_multiclass_with_report(&tfidf.transform_all(&docs), &labels, &hp, a.seed)?;
    if !summary.all_converged() {
        log::warn!("some pairwise machines hit the iteration cap");
    }
    fs::create_dir_all(&a.out_dir)?;
    fs::write(a.out_dir.join("tfidf.json"), tfidf.to_json())?;
    fs::write(
        a.out_dir.join("features.json"),
        serde_json::to_string(&FeatureMeta { mode })?,
    )?;
    save_model(&model, &a.out_dir.join("model.json"))?;
    eprintln!(
        "trained {} machines on {} records, vocabulary {}",
        model.machines.len(),
        d.len(),
        tfidf.dim()
    );
    Ok(())
}

fn cmd_tune(a: TuneArgs) -> Result<()> {
    let d = read_dataset(&a.input)?;
    let labels = d.labels()?;
    let lex = a.features.lex.load()?;
    let docs = tokens(&d, a.features.mode.into(), &lex);
    let data = CvData {
        docs: &docs,
        labels: &labels,
        max_features: a.features.max_features,
        l2_normalize: !a.features.no_l2,
    };
    let base = SvmHyperParams::default();
    let (folds, seed) = (a.folds, a.seed);
    let objective = |p: &Params| -> Result<f64, String> {
        let hp = params_to_svm(p, &base).map_err(|e| e.to_string())?;
        cross_val_f1(&data, &hp, folds, seed).map_err(|e| e.to_string())
    };
    let searcher = match a.searcher {
        SearcherArg::Random => Searcher::Random,
        SearcherArg::Smbo => Searcher::Smbo { init: a.init },
    };
    let opts = SearchOptions {
        ledger: a.ledger.clone(),
        resume: a.resume,
    };
    let trials = run_search(searcher, &svm_default_space(), &objective, a.budget, a.seed, &opts)?;
    let Some(best) = best_trial(&trials) else {
        bail!("every trial failed");
    };
    println!(
        "{}",
        serde_json::json!({"trial": best.index, "score": best.score, "params": best.params})
    );
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let d = read_dataset(&a.input)?;
    let gold = d.labels()?;
    let dir = &a.model_dir;
    let tfidf = TfIdfModel::from_json(&fs::read_to_string(dir.join("tfidf.json")).context("reading tfidf.json")?)?;
    let meta: FeatureMeta =
        serde_json::from_str(&fs::read_to_string(dir.join("features.json")).context("reading features.json")?)?;
    let model = load_model(&dir.join("model.json"))?;
    let lex = a.lex.load()?;
    let pred = model.predict_all(&tfidf.transform_all(&tokens(&d, meta.mode, &lex)))?;
    let report = classification_report(&confusion_matrix(&gold, &pred)?)?;
    two_path_check(&gold, &pred, &report, 1e-9)?;
    if let Some(out) = &a.out_dir {
        fs::create_dir_all(out)?;
        let mut tsv = String::from("id\tgold\tpredicted\n");
        for ((r, g), p) in d.records.iter().zip(&gold).zip(&pred) {
            tsv.push_str(&format!("{}\t{}\t{}\n", r.tweet.id, g.as_str(), p.as_str()));
        }
        fs::write(out.join("predictions.tsv"), tsv)?;
        fs::write(out.join("classification_report.json"), report.to_json())?;
    }
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.render_text());
    }
    Ok(())
}

fn cmd_agreement(a: AgreementArgs) -> Result<()> {
    let fixture = if a.fixture == "bundled" {
        AgreementFixture::bundled()
    } else {
        AgreementFixture::load(Path::new(&a.fixture)).map_err(|e| invalid(e.to_string()))?
    };
    let (alt, title) = match a.alt {
        AltArg::Vader => (fixture.vader(), "hand vs VADER"),
        AltArg::Textblob => (fixture.textblob(), "hand vs TextBlob"),
    };
    let report = fixture.compare(&alt)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.render_text(title));
    }
    Ok(())
}

fn read_predictions(path: &Path, d: &Dataset) -> Result<Vec<tweetsent_core::SentimentLabel>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut by_id = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate().skip(1).filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(invalid(format!(
                "{}:{}: expected id, gold, predicted",
                path.display(),
                i + 1
            )));
        }
        let label = tweetsent_core::eval::parse_polarity(cols[2])
            .ok_or_else(|| invalid(format!("{}:{}: bad label {:?}", path.display(), i + 1, cols[2])))?;
        by_id.insert(cols[0].to_string(), label);
    }
    d.records
        .iter()
        .map(|r| {
            by_id
                .get(&r.tweet.id)
                .copied()
                .ok_or_else(|| invalid(format!("no prediction for record {}", r.tweet.id)))
        })
        .collect()
}

fn cmd_topics(a: TopicsArgs) -> Result<()> {
    let mut d = read_dataset(&a.input)?;
    if let Some(p) = &a.predictions {
        let pred = read_predictions(p, &d)?;
        d = misclassified(&d, &pred)?;
        eprintln!("{} misclassified records", d.len());
    }
    let pre = match (&a.stopwords, &a.lemmas) {
        (Some(s), Some(l)) => LdaPreprocessor::load(s, l).map_err(|e| invalid(e.to_string()))?,
        (None, None) => LdaPreprocessor::bundled(),
        _ => return Err(invalid("--stopwords and --lemmas go together")),
    };
    let lex = a.lex.load()?;
    let prepared: Vec<Vec<String>> = d.records.iter().map(|r| pre.prepare(&r.tweet.text, &lex)).collect();
    let docs = apply_phrases(
        &detect_phrases(&prepared, DEFAULT_MIN_COUNT, DEFAULT_THRESHOLD),
        &prepared,
    );
    let dict = build_dictionary(&docs)?;
    let params = LdaParams {
        k: a.k.first().copied().unwrap_or(2),
        iterations: a.iterations,
        burn_in: a.burn_in,
        seed: a.seed,
        ..LdaParams::default()
    };
    let sel = select_topic_count(&dict.to_bows(&docs), dict.len(), &a.k, &params, 10)?;
    let report = top_terms(&sel.model, &dict, a.top_n).with_coherence(&sel.coherence_by_k);
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.render_text(10));
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<(), PipelineError> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    let cwd = Path::new(".");
    for o in &a.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| {
            tweetsent_core::pipeline::ConfigError::Invalid(format!("--set expects SECTION.KEY=VALUE, got {o:?}"))
        })?;
        cfg.set(k.trim(), v, cwd)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = a.out_dir {
        cfg.output_dir = o;
    }
    let outcome = run_pipeline(&cfg)?;
    print!("{}", outcome.report.render_text());
    eprintln!(
        "weighted F1 {:.4}; {} topics over the {} records; artifacts in {}",
        outcome.report.weighted.f1,
        outcome.topic_report.topics.len(),
        outcome.topic_corpus,
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_demo(a: DemoArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.cue_rate) {
        return Err(invalid("--cue-rate must be in [0, 1]"));
    }
    let d = generate_demo(&DemoSpec {
        n: a.n,
        cue_rate: a.cue_rate,
        seed: a.seed,
        ..DemoSpec::default()
    });
    emit(Some(&a.output), &d.to_jsonl())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => {
            return match cmd_run(a) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Ingest(a) => cmd_ingest(a),
        Command::Normalize(a) => cmd_normalize(a),
        Command::Split(a) => cmd_split(a),
        Command::Train(a) => cmd_train(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Agreement(a) => cmd_agreement(a),
        Command::Topics(a) => cmd_topics(a),
        Command::GenerateDemo(a) => cmd_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
