//! Confusion matrices, classification reports and labeler agreement.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SentimentLabel;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {gold} gold labels vs {other} predicted")]
    LengthMismatch { gold: usize, other: usize },
    #[error("no records to score")]
    Empty,
    #[error("group tags: expected {expected}, got {found}")]
    GroupCount { expected: usize, found: usize },
    #[error("fixture line {line}: {reason}")]
    Fixture { line: usize, reason: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("two-path check failed: {0}")]
    Crosscheck(String),
}

/// Rows are gold labels, columns predictions, both in label-code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    pub fn get(&self, gold: SentimentLabel, pred: SentimentLabel) -> usize {
        self.counts[gold.code()][pred.code()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, label: SentimentLabel) -> usize {
        self.counts[label.code()].iter().sum()
    }

    pub fn predicted(&self, label: SentimentLabel) -> usize {
        let c = label.code();
        self.counts.iter().map(|row| row[c]).sum()
    }
}

fn check_lengths(gold: usize, other: usize) -> Result<(), EvalError> {
    if gold != other {
        return Err(EvalError::LengthMismatch { gold, other });
    }
    Ok(())
}

pub fn confusion_matrix(gold: &[SentimentLabel], pred: &[SentimentLabel]) -> Result<ConfusionMatrix, EvalError> {
    check_lengths(gold.len(), pred.len())?;
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut m = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(pred) {
        m.counts[g.code()][p.code()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: SentimentLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub weighted: Averages,
    /// Unweighted mean over classes that occur in gold or predictions.
    pub macro_avg: Averages,
    pub macro_f1: f64,
    /// Set when some precision, recall or F1 had a zero denominator.
    pub zero_division_hit: bool,
}

fn ratio(num: usize, den: usize, hit: &mut bool) -> f64 {
    if den == 0 {
        *hit = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64, hit: &mut bool) -> f64 {
    if p + r == 0.0 {
        *hit = true;
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn classification_report(m: &ConfusionMatrix) -> Result<ClassificationReport, EvalError> {
    let total = m.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let mut hit = false;
    let mut classes = Vec::with_capacity(3);
    for label in SentimentLabel::ALL {
        let tp = m.get(label, label);
        let precision = ratio(tp, m.predicted(label), &mut hit);
        let recall = ratio(tp, m.support(label), &mut hit);
        let f1 = harmonic(precision, recall, &mut hit);
        classes.push(ClassMetrics {
            label,
            precision,
            recall,
            f1,
            support: m.support(label),
        });
    }
    let weighted = Averages {
        precision: classes.iter().map(|c| c.precision * c.support as f64).sum::<f64>() / total as f64,
        recall: classes.iter().map(|c| c.recall * c.support as f64).sum::<f64>() / total as f64,
        f1: classes.iter().map(|c| c.f1 * c.support as f64).sum::<f64>() / total as f64,
    };
    let present: Vec<&ClassMetrics> = classes
        .iter()
        .filter(|c| c.support > 0 || m.predicted(c.label) > 0)
        .collect();
    let k = present.len() as f64;
    let macro_avg = Averages {
        precision: present.iter().map(|c| c.precision).sum::<f64>() / k,
        recall: present.iter().map(|c| c.recall).sum::<f64>() / k,
        f1: present.iter().map(|c| c.f1).sum::<f64>() / k,
    };
    Ok(ClassificationReport {
        accuracy: m.trace() as f64 / total as f64,
        macro_f1: macro_avg.f1,
        classes,
        weighted,
        macro_avg,
        zero_division_hit: hit,
    })
}

/// Recomputes every metric straight from the label lists, without the
/// matrix, and compares against `report` within `tol`.
pub fn two_path_check(
    gold: &[SentimentLabel],
    pred: &[SentimentLabel],
    report: &ClassificationReport,
    tol: f64,
) -> Result<(), EvalError> {
    check_lengths(gold.len(), pred.len())?;
    let n = gold.len() as f64;
    let close = |what: &str, a: f64, b: f64| {
        if (a - b).abs() <= tol {
            Ok(())
        } else {
            Err(EvalError::Crosscheck(format!("{what}: {a} vs {b}")))
        }
    };
    let mut wf1 = 0.0;
    for c in &report.classes {
        let l = c.label;
        let tp = gold.iter().zip(pred).filter(|(g, p)| **g == l && **p == l).count() as f64;
        let gold_l = gold.iter().filter(|g| **g == l).count() as f64;
        let pred_l = pred.iter().filter(|p| **p == l).count() as f64;
        let p = if pred_l > 0.0 { tp / pred_l } else { 0.0 };
        let r = if gold_l > 0.0 { tp / gold_l } else { 0.0 };
        let f = if tp > 0.0 { 2.0 * tp / (gold_l + pred_l) } else { 0.0 };
        close(&format!("{} precision", l.short()), c.precision, p)?;
        close(&format!("{} recall", l.short()), c.recall, r)?;
        close(&format!("{} f1", l.short()), c.f1, f)?;
        wf1 += f * gold_l / n;
    }
    let acc = gold.iter().zip(pred).filter(|(g, p)| g == p).count() as f64 / n;
    close("accuracy", report.accuracy, acc)?;
    close("weighted f1", report.weighted.f1, wf1)
}

/// Weighted F1 of `pred` against `gold`.
pub fn weighted_f1(gold: &[SentimentLabel], pred: &[SentimentLabel]) -> Result<f64, EvalError> {
    Ok(classification_report(&confusion_matrix(gold, pred)?)?.weighted.f1)
}

/// Label, per-class getter, weighted and macro value.
type MetricRow = (&'static str, fn(&ClassMetrics) -> f64, f64, f64);

fn pct(x: f64) -> String {
    format!("{}", (x * 100.0).round() as i64)
}

impl ClassificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width table with integer percentages, one column per class
    /// plus weighted and macro "All" columns.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let head = ["Class", "Neg", "Neu", "Pos", "All(w)", "All(m)"];
        let line = "-".repeat(10 + 8 * (head.len() - 1));
        let _ = writeln!(out, "{line}");
        let _ = write!(out, "{:<10}", head[0]);
        for h in &head[1..] {
            let _ = write!(out, "{h:>8}");
        }
        let _ = writeln!(out, "\n{line}");
        let rows: [MetricRow; 3] = [
            (
                "Precision",
                |c| c.precision,
                self.weighted.precision,
                self.macro_avg.precision,
            ),
            ("Recall", |c| c.recall, self.weighted.recall, self.macro_avg.recall),
            ("F1-score", |c| c.f1, self.weighted.f1, self.macro_avg.f1),
        ];
        for (name, get, w, m) in rows {
            let _ = write!(out, "{name:<10}");
            for c in &self.classes {
                let _ = write!(out, "{:>8}", pct(get(c)));
            }
            let _ = writeln!(out, "{:>8}{:>8}", pct(w), pct(m));
        }
        let _ = write!(out, "{:<10}", "Support");
        for c in &self.classes {
            let _ = write!(out, "{:>8}", c.support);
        }
        let total: usize = self.classes.iter().map(|c| c.support).sum();
        let _ = writeln!(out, "{total:>8}{:>8}", "");
        let _ = writeln!(out, "{:<10}{:>24}{:>8}{:>8}", "Accuracy", "", pct(self.accuracy), "");
        let _ = writeln!(out, "{line}");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetAgreement {
    pub key: String,
    pub matches: usize,
    pub total: usize,
    /// matches / total, or 0 for an empty subset.
    pub rate: f64,
}

impl SubsetAgreement {
    fn new(key: String, matches: usize, total: usize) -> Self {
        let rate = if total == 0 { 0.0 } else { matches as f64 / total as f64 };
        SubsetAgreement {
            key,
            matches,
            total,
            rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub overall: SubsetAgreement,
    /// Agreement restricted to each gold class, i.e. the alternate
    /// labeler's recall.
    pub per_class: Vec<SubsetAgreement>,
    /// Groups in order of first appearance; empty when no tags were given.
    pub per_group: Vec<SubsetAgreement>,
}

pub fn agreement(
    gold: &[SentimentLabel],
    alt: &[SentimentLabel],
    groups: Option<&[String]>,
) -> Result<AgreementReport, EvalError> {
    check_lengths(gold.len(), alt.len())?;
    if let Some(g) = groups {
        if g.len() != gold.len() {
            return Err(EvalError::GroupCount {
                expected: gold.len(),
                found: g.len(),
            });
        }
    }
    let count = |keep: &dyn Fn(usize) -> bool| {
        let idx: Vec<usize> = (0..gold.len()).filter(|&i| keep(i)).collect();
        let matches = idx.iter().filter(|&&i| gold[i] == alt[i]).count();
        (matches, idx.len())
    };
    let (m, t) = count(&|_| true);
    let overall = SubsetAgreement::new("overall".into(), m, t);
    let per_class = SentimentLabel::ALL
        .iter()
        .map(|&l| {
            let (m, t) = count(&|i| gold[i] == l);
            SubsetAgreement::new(l.as_str().into(), m, t)
        })
        .collect();
    let mut per_group = Vec::new();
    if let Some(tags) = groups {
        let mut seen: Vec<&String> = Vec::new();
        for tag in tags {
            if !seen.contains(&tag) {
                seen.push(tag);
            }
        }
        for tag in seen {
            let (m, t) = count(&|i| &tags[i] == tag);
            per_group.push(SubsetAgreement::new(tag.clone(), m, t));
        }
    }
    Ok(AgreementReport {
        overall,
        per_class,
        per_group,
    })
}

impl AgreementReport {
    pub fn render_text(&self, title: &str) -> String {
        let mut out = format!("{title}\n");
        let mut row = |s: &SubsetAgreement| {
            let _ = writeln!(
                out,
                "  {:<14}{:>3}/{:<3}{:>6.1}%",
                s.key,
                s.matches,
                s.total,
                s.rate * 100.0
            );
        };
        row(&self.overall);
        self.per_class.iter().for_each(&mut row);
        self.per_group.iter().for_each(&mut row);
        out
    }
}

/// One row of a labeler-comparison fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementRow {
    pub group: String,
    pub text: String,
    pub hand: SentimentLabel,
    pub vader: SentimentLabel,
    pub textblob: SentimentLabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementFixture {
    pub rows: Vec<AgreementRow>,
}

/// Accepts `+`/`-`/`0` or a full label name.
pub fn parse_polarity(s: &str) -> Option<SentimentLabel> {
    match s.trim() {
        "+" => Some(SentimentLabel::Positive),
        "-" => Some(SentimentLabel::Negative),
        "0" => Some(SentimentLabel::Neutral),
        other => other.parse().ok(),
    }
}

impl AgreementFixture {
    /// TSV with header `group text hand vader textblob`.
    pub fn parse(tsv: &str) -> Result<Self, EvalError> {
        let mut lines = tsv.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else {
            return Err(EvalError::Empty);
        };
        let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
        if cols != ["group", "text", "hand", "vader", "textblob"] {
            return Err(EvalError::Fixture {
                line: 1,
                reason: format!("unexpected header {cols:?}"),
            });
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split('\t').collect();
            let bad = |reason: String| EvalError::Fixture { line: i + 1, reason };
            if f.len() != 5 {
                return Err(bad(format!("expected 5 fields, found {}", f.len())));
            }
            let label = |s: &str| parse_polarity(s).ok_or_else(|| bad(format!("bad label {s:?}")));
            rows.push(AgreementRow {
                group: f[0].trim().to_string(),
                text: f[1].to_string(),
                hand: label(f[2])?,
                vader: label(f[3])?,
                textblob: label(f[4])?,
            });
        }
        if rows.is_empty() {
            return Err(EvalError::Empty);
        }
        Ok(AgreementFixture { rows })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Twelve hand-labelled vaccine tweets in four difficulty groups, with
    /// the labels two off-the-shelf scorers assigned.
    pub fn bundled() -> Self {
        Self::parse(include_str!("../data/agreement.tsv")).expect("bundled fixture parses")
    }

    pub fn hand(&self) -> Vec<SentimentLabel> {
        self.rows.iter().map(|r| r.hand).collect()
    }

    pub fn vader(&self) -> Vec<SentimentLabel> {
        self.rows.iter().map(|r| r.vader).collect()
    }

    pub fn textblob(&self) -> Vec<SentimentLabel> {
        self.rows.iter().map(|r| r.textblob).collect()
    }

    pub fn groups(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.group.clone()).collect()
    }

    pub fn compare(&self, alt: &[SentimentLabel]) -> Result<AgreementReport, EvalError> {
        agreement(&self.hand(), alt, Some(&self.groups()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use SentimentLabel::*;

    fn six() -> (Vec<SentimentLabel>, Vec<SentimentLabel>) {
        (
            vec![Positive, Positive, Negative, Negative, Neutral, Neutral],
            vec![Positive, Positive, Negative, Neutral, Neutral, Neutral],
        )
    }

    #[test]
    fn hand_tally() {
        let (g, p) = six();
        let m = confusion_matrix(&g, &p).unwrap();
        assert_eq!(m.counts, [[1, 1, 0], [0, 2, 0], [0, 0, 2]]);
        assert_eq!(m.total(), 6);
    }

    #[test]
    fn identity_matrix() {
        let m = confusion_matrix(&[Positive], &[Positive]).unwrap();
        assert_eq!(m.counts, [[0, 0, 0], [0, 0, 0], [0, 0, 1]]);
        let r = classification_report(&m).unwrap();
        assert_eq!(r.classes[2].f1, 1.0);
        assert_eq!(r.weighted.f1, 1.0);
        // absent classes are flagged but carry no weight
        assert!(r.zero_division_hit);
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            confusion_matrix(&[Positive], &[]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(confusion_matrix(&[], &[]), Err(EvalError::Empty)));
        assert!(agreement(&[Positive], &[Negative, Neutral], None).is_err());
    }

    #[test]
    fn six_record_report() {
        let (g, p) = six();
        let r = classification_report(&confusion_matrix(&g, &p).unwrap()).unwrap();
        assert_eq!(r.classes[0].precision, 1.0);
        assert_eq!(r.classes[0].recall, 0.5);
        assert!((r.classes[0].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.classes[1].f1 - 0.8).abs() < 1e-12);
        assert!(!r.zero_division_hit);
        two_path_check(&g, &p, &r, 1e-12).unwrap();
        let text = r.render_text();
        assert!(text.contains("F1-score"));
        assert!(text.contains("67"));
    }

    #[test]
    fn bundled_fixture_shape() {
        let f = AgreementFixture::bundled();
        assert_eq!(f.rows.len(), 12);
        assert_eq!(f.groups().iter().filter(|g| g.as_str() == "Difficult").count(), 3);
    }

    fn arb_labels() -> impl Strategy<Value = Vec<(SentimentLabel, SentimentLabel)>> {
        let l = prop_oneof![Just(Negative), Just(Neutral), Just(Positive)];
        proptest::collection::vec((l.clone(), l), 1..60)
    }

    proptest! {
        #[test]
        fn metrics_bounded_and_crosschecked(pairs in arb_labels()) {
            let (g, p): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let r = classification_report(&confusion_matrix(&g, &p).unwrap()).unwrap();
            for c in &r.classes {
                for v in [c.precision, c.recall, c.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
            prop_assert!((r.accuracy - r.weighted.recall).abs() < 1e-12);
            two_path_check(&g, &p, &r, 1e-12).unwrap();
        }

        #[test]
        fn permutation_invariant(pairs in arb_labels(), seed: u64) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (g1, p1): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let (g2, p2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
            let a = classification_report(&confusion_matrix(&g1, &p1).unwrap()).unwrap();
            let b = classification_report(&confusion_matrix(&g2, &p2).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
