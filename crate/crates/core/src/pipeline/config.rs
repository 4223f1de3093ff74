use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{CorpusFormat, SplitSpec};
use crate::normalize::NormalizationMode;
use crate::svm::{KernelSpec, SvmHyperParams};
use crate::topics::{
    DEFAULT_BETA, DEFAULT_BURN_IN, DEFAULT_COHERENCE_TOP_N, DEFAULT_ITERATIONS, DEFAULT_MIN_COUNT, DEFAULT_THRESHOLD,
    DEFAULT_TOP_N,
};
use crate::tune::{DEFAULT_BUDGET, DEFAULT_INIT};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("{key} = {value:?}: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("{key}: file {path} does not exist")]
    MissingFile { key: String, path: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneSearcher {
    Random,
    Smbo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneSettings {
    pub enabled: bool,
    pub searcher: TuneSearcher,
    pub budget: usize,
    pub init: usize,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaSettings {
    pub k_candidates: Vec<usize>,
    /// `None` means 50/K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub top_n: usize,
    pub coherence_top_n: usize,
    pub phrase_min_count: usize,
    pub phrase_threshold: f64,
    pub stopwords: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    /// Below this many misclassified records the whole test split is modelled.
    pub min_docs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconPaths {
    pub emoji: Option<PathBuf>,
    pub slang: Option<PathBuf>,
    pub contractions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    pub format: Option<CorpusFormat>,
    pub mode: NormalizationMode,
    pub lexicons: LexiconPaths,
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub max_features: usize,
    pub l2_normalize: bool,
    pub svm: SvmHyperParams,
    pub tune: TuneSettings,
    pub lda: LdaSettings,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(dataset: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            dataset: dataset.into(),
            format: None,
            mode: NormalizationMode::Lexical,
            lexicons: LexiconPaths {
                emoji: None,
                slang: None,
                contractions: None,
            },
            train_frac: 0.8,
            val_frac: 0.1,
            test_frac: 0.1,
            max_features: 5000,
            l2_normalize: true,
            svm: SvmHyperParams::default(),
            tune: TuneSettings {
                enabled: false,
                searcher: TuneSearcher::Smbo,
                budget: DEFAULT_BUDGET,
                init: DEFAULT_INIT,
                folds: 5,
            },
            lda: LdaSettings {
                k_candidates: vec![2, 3, 4, 5, 6],
                alpha: None,
                beta: DEFAULT_BETA,
                iterations: DEFAULT_ITERATIONS,
                burn_in: DEFAULT_BURN_IN,
                top_n: DEFAULT_TOP_N,
                coherence_top_n: DEFAULT_COHERENCE_TOP_N,
                phrase_min_count: DEFAULT_MIN_COUNT,
                phrase_threshold: DEFAULT_THRESHOLD,
                stopwords: None,
                lemmas: None,
                min_docs: 5,
            },
            seed: 42,
            output_dir: output_dir.into(),
        }
    }

    /// Reads an INI file; relative paths resolve against its directory.
    /// `[data] path` is required.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_ini_str(&text, base)
    }

    pub fn from_ini_str(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut cfg = PipelineConfig::new("", "out");
        let mut saw_dataset = false;
        for (section, props) in ini.iter() {
            for (k, v) in props.iter() {
                let key = match section {
                    Some(s) => format!("{s}.{k}"),
                    None => k.to_string(),
                };
                saw_dataset |= key == "data.path";
                cfg.set(&key, v, base_dir)?;
            }
        }
        if !saw_dataset {
            return Err(ConfigError::Invalid("missing [data] path".into()));
        }
        Ok(cfg)
    }

    /// Sets one `section.key`; path values are joined onto `base_dir` when
    /// relative. Used for both file entries and command-line overrides.
    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<(), ConfigError> {
        let v = value.trim();
        let bad = |reason: &str| ConfigError::BadValue {
            key: key.to_string(),
            value: v.to_string(),
            reason: reason.to_string(),
        };
        let path = || -> PathBuf {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let opt_path = || if v.is_empty() { None } else { Some(path()) };
        let real = || v.parse::<f64>().map_err(|_| bad("expected a number"));
        let count = || v.parse::<usize>().map_err(|_| bad("expected a non-negative integer"));
        let flag = || match v.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(bad("expected true or false")),
        };
        match key {
            "data.path" => self.dataset = path(),
            "data.format" => {
                self.format = match v.to_ascii_lowercase().as_str() {
                    "" | "auto" => None,
                    _ => Some(v.parse::<CorpusFormat>().map_err(|e| bad(&e.to_string()))?),
                }
            }
            "normalize.mode" => self.mode = v.parse().map_err(|e: String| bad(&e))?,
            "normalize.emoji_lexicon" => self.lexicons.emoji = opt_path(),
            "normalize.slang_lexicon" => self.lexicons.slang = opt_path(),
            "normalize.contraction_lexicon" => self.lexicons.contractions = opt_path(),
            "split.train" => self.train_frac = real()?,
            "split.val" => self.val_frac = real()?,
            "split.test" => self.test_frac = real()?,
            "vectorize.max_features" => self.max_features = count()?,
            "vectorize.l2_normalize" => self.l2_normalize = flag()?,
            "svm.kernel" => {
                self.svm.kernel =
                    KernelSpec::from_parts(v, self.svm.kernel.gamma().or(Some(0.1))).map_err(|e| bad(&e.to_string()))?
            }
            "svm.gamma" => {
                let g = real()?;
                if let KernelSpec::Rbf { .. } = self.svm.kernel {
                    self.svm.kernel = KernelSpec::Rbf { gamma: g };
                } else {
                    log::warn!("svm.gamma ignored for the linear kernel");
                }
            }
            "svm.c" | "svm.C" => self.svm.c = real()?,
            "svm.kkt_tolerance" => self.svm.kkt_tolerance = real()?,
            "svm.max_passes" => self.svm.max_passes = count()?,
            "svm.max_iterations" => self.svm.max_iterations = count()?,
            "tune.enabled" => self.tune.enabled = flag()?,
            "tune.searcher" => {
                self.tune.searcher = match v.to_ascii_lowercase().as_str() {
                    "random" => TuneSearcher::Random,
                    "smbo" | "tpe" | "bayes" => TuneSearcher::Smbo,
                    _ => return Err(bad("expected random or smbo")),
                }
            }
            "tune.budget" => self.tune.budget = count()?,
            "tune.init" => self.tune.init = count()?,
            "tune.folds" => self.tune.folds = count()?,
            "topics.k_candidates" => {
                self.lda.k_candidates = v
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("expected a comma-separated list of integers"))?
            }
            "topics.alpha" => {
                self.lda.alpha = match v.to_ascii_lowercase().as_str() {
                    "" | "auto" => None,
                    _ => Some(real()?),
                }
            }
            "topics.beta" => self.lda.beta = real()?,
            "topics.iterations" => self.lda.iterations = count()?,
            "topics.burn_in" => self.lda.burn_in = count()?,
            "topics.top_n" => self.lda.top_n = count()?,
            "topics.coherence_top_n" => self.lda.coherence_top_n = count()?,
            "topics.phrase_min_count" => self.lda.phrase_min_count = count()?,
            "topics.phrase_threshold" => self.lda.phrase_threshold = real()?,
            "topics.stopwords" => self.lda.stopwords = opt_path(),
            "topics.lemmas" => self.lda.lemmas = opt_path(),
            "topics.min_docs" => self.lda.min_docs = count()?,
            "run.seed" => self.seed = v.parse::<u64>().map_err(|_| bad("expected an unsigned integer"))?,
            "run.output_dir" => self.output_dir = path(),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec::new(self.train_frac, self.val_frac, self.test_frac, seed)
    }

    pub fn corpus_format(&self) -> CorpusFormat {
        self.format.unwrap_or_else(|| CorpusFormat::from_path(&self.dataset))
    }

    /// Checks every setting and that referenced files exist.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let exists = |key: &str, p: &Path| {
            if p.is_file() {
                Ok(())
            } else {
                Err(ConfigError::MissingFile {
                    key: key.to_string(),
                    path: p.display().to_string(),
                })
            }
        };
        exists("data.path", &self.dataset)?;
        let lex = [
            ("normalize.emoji_lexicon", &self.lexicons.emoji),
            ("normalize.slang_lexicon", &self.lexicons.slang),
            ("normalize.contraction_lexicon", &self.lexicons.contractions),
        ];
        let given = lex.iter().filter(|(_, p)| p.is_some()).count();
        if given != 0 && given != 3 {
            return Err(ConfigError::Invalid(
                "give all three lexicon paths or none (bundled lexicons)".into(),
            ));
        }
        for (key, p) in lex {
            if let Some(p) = p {
                exists(key, p)?;
            }
        }
        match (&self.lda.stopwords, &self.lda.lemmas) {
            (Some(s), Some(l)) => {
                exists("topics.stopwords", s)?;
                exists("topics.lemmas", l)?;
            }
            (None, None) => {}
            _ => {
                return Err(ConfigError::Invalid(
                    "give both topics.stopwords and topics.lemmas or neither".into(),
                ))
            }
        }
        self.split_spec(self.seed)
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("split: {e}")))?;
        if self.max_features < 1 {
            return Err(ConfigError::Invalid("vectorize.max_features must be at least 1".into()));
        }
        self.svm
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("svm: {e}")))?;
        if self.tune.enabled {
            if self.tune.budget < 1 {
                return Err(ConfigError::Invalid("tune.budget must be at least 1".into()));
            }
            if self.tune.folds < 2 {
                return Err(ConfigError::Invalid("tune.folds must be at least 2".into()));
            }
            if self.tune.searcher == TuneSearcher::Smbo && self.tune.init < 1 {
                return Err(ConfigError::Invalid("tune.init must be at least 1".into()));
            }
        }
        let l = &self.lda;
        if l.k_candidates.is_empty() || l.k_candidates.iter().any(|&k| k < 2) {
            return Err(ConfigError::Invalid(
                "topics.k_candidates must list values of at least 2".into(),
            ));
        }
        if !(l.beta > 0.0) || l.alpha.is_some_and(|a| !(a > 0.0)) {
            return Err(ConfigError::Invalid("topic priors must be positive".into()));
        }
        if l.iterations <= l.burn_in {
            return Err(ConfigError::Invalid(
                "topics.iterations must exceed topics.burn_in".into(),
            ));
        }
        if l.top_n < 1 || l.coherence_top_n < 2 || l.phrase_min_count < 1 {
            return Err(ConfigError::Invalid(
                "topics.top_n >= 1, coherence_top_n >= 2 and phrase_min_count >= 1 required".into(),
            ));
        }
        Ok(())
    }

    /// Canonical INI rendering of every setting except the output directory.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let p = |o: &Option<PathBuf>| o.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let _ = writeln!(s, "[data]\npath = {}", self.dataset.display());
        let fmt = match self.format {
            None => "auto",
            Some(CorpusFormat::Csv) => "csv",
            Some(CorpusFormat::Jsonl) => "jsonl",
        };
        let _ = writeln!(s, "format = {fmt}\n");
        let _ = writeln!(s, "[normalize]\nmode = {}", self.mode);
        let _ = writeln!(s, "emoji_lexicon = {}", p(&self.lexicons.emoji));
        let _ = writeln!(s, "slang_lexicon = {}", p(&self.lexicons.slang));
        let _ = writeln!(s, "contraction_lexicon = {}\n", p(&self.lexicons.contractions));
        let _ = writeln!(
            s,
            "[split]\ntrain = {}\nval = {}\ntest = {}\n",
            self.train_frac, self.val_frac, self.test_frac
        );
        let _ = writeln!(
            s,
            "[vectorize]\nmax_features = {}\nl2_normalize = {}\n",
            self.max_features, self.l2_normalize
        );
        let _ = writeln!(s, "[svm]\nkernel = {}", self.svm.kernel.name());
        if let Some(g) = self.svm.kernel.gamma() {
            let _ = writeln!(s, "gamma = {g}");
        }
        let _ = writeln!(
            s,
            "C = {}\nkkt_tolerance = {}\nmax_passes = {}\nmax_iterations = {}\n",
            self.svm.c, self.svm.kkt_tolerance, self.svm.max_passes, self.svm.max_iterations
        );
        let searcher = match self.tune.searcher {
            TuneSearcher::Random => "random",
            TuneSearcher::Smbo => "smbo",
        };
        let _ = writeln!(
            s,
            "[tune]\nenabled = {}\nsearcher = {searcher}\nbudget = {}\ninit = {}\nfolds = {}\n",
            self.tune.enabled, self.tune.budget, self.tune.init, self.tune.folds
        );
        let l = &self.lda;
        let ks: Vec<String> = l.k_candidates.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "[topics]\nk_candidates = {}", ks.join(","));
        let _ = writeln!(
            s,
            "alpha = {}",
            l.alpha.map(|a| a.to_string()).unwrap_or_else(|| "auto".into())
        );
        let _ = writeln!(
            s,
            "beta = {}\niterations = {}\nburn_in = {}\ntop_n = {}\ncoherence_top_n = {}",
            l.beta, l.iterations, l.burn_in, l.top_n, l.coherence_top_n
        );
        let _ = writeln!(
            s,
            "phrase_min_count = {}\nphrase_threshold = {}\nstopwords = {}\nlemmas = {}\nmin_docs = {}\n",
            l.phrase_min_count,
            l.phrase_threshold,
            p(&l.stopwords),
            p(&l.lemmas),
            l.min_docs
        );
        let _ = writeln!(s, "[run]\nseed = {}", self.seed);
        s
    }

    /// Hex SHA-256 of [`PipelineConfig::to_ini`].
    pub fn hash(&self) -> String {
        sha256_hex(self.to_ini().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}
