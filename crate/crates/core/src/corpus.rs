//! Labelled tweet datasets: loading, exact-text deduplication, class
//! distribution and stratified splitting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty dataset")]
    Empty,
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: unknown label value {value:?}")]
    UnknownLabel { line: usize, value: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("record {id:?} has no label")]
    Unlabelled { id: String },
    #[error("fractions must sum to 1 (got {0})")]
    FractionSum(f64),
    #[error("fraction {0} is outside (0, 1)")]
    FractionRange(f64),
    #[error("class {label} has {count} records, need at least {needed}")]
    ClassTooSmall {
        label: SentimentLabel,
        count: usize,
        needed: usize,
    },
    #[error("unsupported corpus format {0:?} (expected jsonl or csv)")]
    Format(String),
}

/// Sentiment classes with stable integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Negative = 0,
    Neutral = 1,
    Positive = 2,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Negative => "negative",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Positive => "positive",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            SentimentLabel::Negative => "Neg",
            SentimentLabel::Neutral => "Neu",
            SentimentLabel::Positive => "Pos",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "negative" => Ok(SentimentLabel::Negative),
            "neutral" => Ok(SentimentLabel::Neutral),
            "positive" => Ok(SentimentLabel::Positive),
            _ => Err(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledTweet {
    pub tweet: Tweet,
    pub label: Option<SentimentLabel>,
}

impl LabeledTweet {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<SentimentLabel>) -> Self {
        LabeledTweet {
            tweet: Tweet {
                id: id.into(),
                text: text.into(),
                created_at: None,
            },
            label,
        }
    }
}

/// On-disk record shape shared by the JSONL and CSV readers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

impl From<&LabeledTweet> for CorpusRecord {
    fn from(r: &LabeledTweet) -> Self {
        CorpusRecord {
            id: r.tweet.id.clone(),
            text: r.tweet.text.clone(),
            label: r.label.map(|l| l.as_str().to_string()),
            created_at: r.tweet.created_at.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(CorpusError::Format(other.to_string())),
        }
    }
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    pub name: String,
    pub records: Vec<LabeledTweet>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, records: Vec<LabeledTweet>) -> Self {
        Dataset {
            name: name.into(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.tweet.text.as_str()).collect()
    }

    /// Labels of every record; fails on the first unlabelled one.
    pub fn labels(&self) -> Result<Vec<SentimentLabel>, CorpusError> {
        self.records
            .iter()
            .map(|r| {
                r.label
                    .ok_or_else(|| CorpusError::Unlabelled { id: r.tweet.id.clone() })
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(&CorpusRecord::from(r)).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

fn record_to_tweet(rec: CorpusRecord, line: usize) -> Result<LabeledTweet, CorpusError> {
    if rec.id.trim().is_empty() {
        return Err(CorpusError::Malformed {
            line,
            reason: "empty id".into(),
        });
    }
    if rec.text.trim().is_empty() {
        return Err(CorpusError::Malformed {
            line,
            reason: "empty text".into(),
        });
    }
    let label = match rec.label.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(v) => Some(
            v.parse::<SentimentLabel>()
                .map_err(|value| CorpusError::UnknownLabel { line, value })?,
        ),
    };
    Ok(LabeledTweet {
        tweet: Tweet {
            id: rec.id,
            text: rec.text,
            created_at: rec.created_at.filter(|s| !s.is_empty()),
        },
        label,
    })
}

/// Parses JSONL corpus text. Blank lines are skipped; line numbers are 1-based.
pub fn parse_jsonl(name: &str, content: &str) -> Result<Dataset, CorpusError> {
    let mut records = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(raw).map_err(|e| CorpusError::Malformed {
            line,
            reason: e.to_string(),
        })?;
        records.push((line, record_to_tweet(rec, line)?));
    }
    finish(name, records)
}

/// Parses CSV corpus text with a header row naming `id,text,label` (and
/// optionally `created_at`).
pub fn parse_csv<R: std::io::Read>(name: &str, reader: R) -> Result<Dataset, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CorpusError::Malformed {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    for required in ["id", "text"] {
        if !headers.iter().any(|h| h == required) {
            return Err(CorpusError::Malformed {
                line: 1,
                reason: format!("header is missing column {required:?}"),
            });
        }
    }
    let mut records = Vec::new();
    for (i, row) in rdr.deserialize::<CorpusRecord>().enumerate() {
        // header occupies line 1
        let line = i + 2;
        let rec = row.map_err(|e| CorpusError::Malformed {
            line,
            reason: e.to_string(),
        })?;
        records.push((line, record_to_tweet(rec, line)?));
    }
    finish(name, records)
}

fn finish(name: &str, records: Vec<(usize, LabeledTweet)>) -> Result<Dataset, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut seen = HashSet::new();
    for (line, r) in &records {
        if !seen.insert(r.tweet.id.as_str()) {
            return Err(CorpusError::DuplicateId {
                line: *line,
                id: r.tweet.id.clone(),
            });
        }
    }
    Ok(Dataset::new(name, records.into_iter().map(|(_, r)| r).collect()))
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Dataset, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match format {
        CorpusFormat::Jsonl => {
            let content = fs::read_to_string(path).map_err(io_err)?;
            parse_jsonl(&name, &content)
        }
        CorpusFormat::Csv => {
            let file = fs::File::open(path).map_err(io_err)?;
            parse_csv(&name, BufReader::new(file))
        }
    }
}

/// Keeps the first record for each exact (byte-equal) raw text.
pub fn dedupe(d: &Dataset) -> Dataset {
    let mut seen: HashSet<&str> = HashSet::with_capacity(d.len());
    let records = d
        .records
        .iter()
        .filter(|r| seen.insert(r.tweet.text.as_str()))
        .cloned()
        .collect();
    Dataset::new(d.name.clone(), records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    /// Indexed by label code.
    pub counts: [usize; 3],
    pub fractions: [f64; 3],
}

impl ClassDistribution {
    pub fn fraction(&self, label: SentimentLabel) -> f64 {
        self.fractions[label.code()]
    }

    pub fn count(&self, label: SentimentLabel) -> usize {
        self.counts[label.code()]
    }
}

pub fn class_distribution(d: &Dataset) -> Result<ClassDistribution, CorpusError> {
    let labels = d.labels()?;
    if labels.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut counts = [0usize; 3];
    for l in &labels {
        counts[l.code()] += 1;
    }
    let total = labels.len() as f64;
    let fractions = counts.map(|c| c as f64 / total);
    Ok(ClassDistribution { counts, fractions })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64, seed: u64) -> Self {
        SplitSpec {
            train_frac,
            val_frac,
            test_frac,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        for f in [self.train_frac, self.val_frac, self.test_frac] {
            if !(f > 0.0 && f < 1.0) {
                return Err(CorpusError::FractionRange(f));
            }
        }
        let sum = self.train_frac + self.val_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::FractionSum(sum));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Allocates `n` items over fractions with largest-remainder rounding so
/// every part is within one item of its exact share.
pub(crate) fn apportion(n: usize, fracs: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fracs.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut remaining = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..fracs.len()).collect();
    // stable: larger remainder first, then earlier part
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

/// Per-class, per-split record counts. Every cell is within one record of
/// its exact share and the split totals match `apportion` of the whole set.
pub(crate) fn stratified_counts(class_sizes: &[usize], fracs: &[f64]) -> Vec<Vec<usize>> {
    let total: usize = class_sizes.iter().sum();
    let col_target = apportion(total, fracs);
    let exact: Vec<Vec<f64>> = class_sizes
        .iter()
        .map(|&n| fracs.iter().map(|f| n as f64 * f).collect())
        .collect();
    let mut counts: Vec<Vec<usize>> = exact
        .iter()
        .map(|row| row.iter().map(|e| e.floor() as usize).collect())
        .collect();
    let mut row_need: Vec<usize> = class_sizes
        .iter()
        .zip(&counts)
        .map(|(&n, row)| n - row.iter().sum::<usize>())
        .collect();
    let mut col_need: Vec<usize> = (0..fracs.len())
        .map(|c| col_target[c] - counts.iter().map(|row| row[c]).sum::<usize>())
        .collect();
    let mut bumped = vec![vec![false; fracs.len()]; class_sizes.len()];

    let mut cells: Vec<(usize, usize)> = (0..class_sizes.len())
        .flat_map(|r| (0..fracs.len()).map(move |c| (r, c)))
        .collect();
    cells.sort_by(|&(r1, c1), &(r2, c2)| {
        let f1 = exact[r1][c1] - exact[r1][c1].floor();
        let f2 = exact[r2][c2] - exact[r2][c2].floor();
        f2.partial_cmp(&f1).unwrap().then((r1, c1).cmp(&(r2, c2)))
    });
    for (r, c) in cells {
        if row_need[r] > 0 && col_need[c] > 0 {
            bumped[r][c] = true;
            row_need[r] -= 1;
            col_need[c] -= 1;
        }
    }

    // Greedy can strand a unit; fix with alternating paths
    // (row -> unbumped col -> row holding a bump there -> ...).
    while let Some(start) = row_need.iter().position(|&n| n > 0) {
        let rows = class_sizes.len();
        let cols = fracs.len();
        let mut prev_row_of_col: Vec<Option<usize>> = vec![None; cols];
        let mut seen_row = vec![false; rows];
        let mut via_col: Vec<Option<usize>> = vec![None; rows];
        let mut queue = std::collections::VecDeque::from([start]);
        seen_row[start] = true;
        let mut end_col = None;
        'bfs: while let Some(r) = queue.pop_front() {
            for c in 0..cols {
                if bumped[r][c] || prev_row_of_col[c].is_some() {
                    continue;
                }
                prev_row_of_col[c] = Some(r);
                if col_need[c] > 0 {
                    end_col = Some(c);
                    break 'bfs;
                }
                for r2 in 0..rows {
                    if bumped[r2][c] && !seen_row[r2] {
                        seen_row[r2] = true;
                        via_col[r2] = Some(c);
                        queue.push_back(r2);
                    }
                }
            }
        }
        let mut c = end_col.expect("a feasible stratified allocation exists");
        col_need[c] -= 1;
        loop {
            let r = prev_row_of_col[c].unwrap();
            bumped[r][c] = true;
            if r == start {
                break;
            }
            // r hands over the column it was reached through
            let released = via_col[r].expect("non-start rows are reached through a column");
            bumped[r][released] = false;
            c = released;
        }
        row_need[start] -= 1;
    }

    for (r, row) in counts.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            if bumped[r][c] {
                *v += 1;
            }
        }
    }
    counts
}

/// Per-class stratified split into train/validation/test, seeded.
pub fn stratified_split(d: &Dataset, s: &SplitSpec) -> Result<Splits, CorpusError> {
    s.validate()?;
    let labels = d.labels()?;
    let mut by_class: BTreeMap<SentimentLabel, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(*l).or_default().push(i);
    }
    for (label, idx) in &by_class {
        if idx.len() < 3 {
            return Err(CorpusError::ClassTooSmall {
                label: *label,
                count: idx.len(),
                needed: 3,
            });
        }
    }
    let fracs = [s.train_frac, s.val_frac, s.test_frac];
    let sizes: Vec<usize> = by_class.values().map(Vec::len).collect();
    let counts = stratified_counts(&sizes, &fracs);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut assignment = vec![0u8; d.len()];
    for (idx, counts) in by_class.values().zip(&counts) {
        let mut idx = idx.clone();
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            assignment[i] = if pos < counts[0] {
                0
            } else if pos < counts[0] + counts[1] {
                1
            } else {
                2
            };
        }
    }
    let mut parts: [Vec<LabeledTweet>; 3] = Default::default();
    for (r, &a) in d.records.iter().zip(&assignment) {
        parts[a as usize].push(r.clone());
    }
    let [train, val, test] = parts;
    Ok(Splits {
        train: Dataset::new(format!("{}-train", d.name), train),
        val: Dataset::new(format!("{}-val", d.name), val),
        test: Dataset::new(format!("{}-test", d.name), test),
    })
}
