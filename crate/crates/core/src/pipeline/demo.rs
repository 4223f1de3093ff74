//! Synthetic labelled tweets for demos and end-to-end tests.
//!
//! Each class owns a disjoint set of cue terms. Every word slot draws a cue
//! of the tweet's class with probability `cue_rate`, otherwise a shared
//! filler word. Mentions, hashtags, links and emoji are sprinkled in so the
//! normalizers have something to do.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dataset, LabeledTweet, SentimentLabel};

const NEGATIVE_CUES: &[&str] = &[
    "refuse",
    "scared",
    "dangerous",
    "poison",
    "forced",
    "angry",
    "distrust",
    "reaction",
    "terrible",
    "lies",
];
const NEUTRAL_CUES: &[&str] = &[
    "schedule",
    "appointment",
    "clinic",
    "queue",
    "registration",
    "information",
    "update",
    "centre",
    "hours",
    "list",
];
const POSITIVE_CUES: &[&str] = &[
    "grateful",
    "relieved",
    "protected",
    "thankful",
    "hopeful",
    "excited",
    "proud",
    "amazing",
    "blessed",
    "love",
];
const FILLER: &[&str] = &[
    "vaccine",
    "vaccines",
    "the",
    "jab",
    "today",
    "people",
    "government",
    "doctor",
    "second",
    "dose",
    "first",
    "week",
    "health",
    "covid",
    "my",
    "family",
    "got",
    "just",
    "about",
    "south",
    "africa",
    "news",
    "minister",
    "site",
    "we",
    "are",
    "this",
    "is",
    "and",
    "for",
    "rollout",
    "program",
    "nurse",
    "city",
    "workers",
    "elderly",
    "booster",
];
const MENTIONS: &[&str] = &["@HealthZA", "@DrMkhize", "@news24", "@CyrilRamaphosa"];
const HASHTAGS: &[&str] = &["#VaccineRolloutSA", "#COVID19", "#vaccinessavelives", "#Sisonke"];
const EMOJI: &[&str] = &["💉", "😷", "🙏", "😂", "😡", "❤️"];
const CONTRACTIONS: &[&str] = &["it’s", "can’t", "don't", "we're", "i'm"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoSpec {
    pub n: usize,
    pub cue_rate: f64,
    pub words: usize,
    /// Records whose text copies an earlier one, to exercise dedupe.
    pub duplicates: usize,
    pub seed: u64,
}

impl Default for DemoSpec {
    fn default() -> Self {
        DemoSpec {
            n: 300,
            cue_rate: 0.4,
            words: 12,
            duplicates: 6,
            seed: 2021,
        }
    }
}

fn cues(label: SentimentLabel) -> &'static [&'static str] {
    match label {
        SentimentLabel::Negative => NEGATIVE_CUES,
        SentimentLabel::Neutral => NEUTRAL_CUES,
        SentimentLabel::Positive => POSITIVE_CUES,
    }
}

/// Generates `spec.n` labelled tweets with balanced classes.
pub fn generate_demo(spec: &DemoSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels = [
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
    ];
    let mut records: Vec<LabeledTweet> = Vec::with_capacity(spec.n);
    let originals = spec.n.saturating_sub(spec.duplicates);
    let mut used = std::collections::HashSet::new();
    for i in 0..spec.n {
        let label = labels[i % 3];
        let text = if i >= originals && originals >= 3 {
            // distinct earlier record of the same class
            let src = loop {
                let s = rng.gen_range(0..originals);
                let s = s - s % 3 + i % 3;
                if s < originals && used.insert(s) {
                    break s;
                }
            };
            records[src].tweet.text.clone()
        } else {
            tweet_text(&mut rng, label, spec)
        };
        records.push(LabeledTweet::new(format!("demo-{i:04}"), text, Some(label)));
    }
    records.shuffle(&mut rng);
    Dataset::new("demo", records)
}

fn tweet_text(rng: &mut ChaCha8Rng, label: SentimentLabel, spec: &DemoSpec) -> String {
    let mut words: Vec<String> = Vec::with_capacity(spec.words + 4);
    if rng.gen_bool(0.3) {
        words.push(MENTIONS.choose(rng).unwrap().to_string());
    }
    for _ in 0..spec.words {
        let w = if rng.gen_bool(spec.cue_rate) {
            cues(label).choose(rng).unwrap()
        } else if rng.gen_bool(0.05) {
            CONTRACTIONS.choose(rng).unwrap()
        } else {
            FILLER.choose(rng).unwrap()
        };
        words.push(w.to_string());
    }
    if rng.gen_bool(0.4) {
        words.push(HASHTAGS.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(0.25) {
        words.push(EMOJI.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(0.15) {
        words.push(format!("https://t.co/{:08x}", rng.gen::<u32>()));
    }
    words.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::dedupe;

    #[test]
    fn shape_and_determinism() {
        let spec = DemoSpec::default();
        let d = generate_demo(&spec);
        assert_eq!(d.len(), 300);
        assert_eq!(d, generate_demo(&spec));
        let labels = d.labels().unwrap();
        for l in [
            SentimentLabel::Negative,
            SentimentLabel::Neutral,
            SentimentLabel::Positive,
        ] {
            assert_eq!(labels.iter().filter(|x| **x == l).count(), 100);
        }
        assert_eq!(dedupe(&d).len(), 300 - spec.duplicates);
    }

    #[test]
    fn duplicates_keep_their_class() {
        let d = generate_demo(&DemoSpec::default());
        let mut by_text = std::collections::HashMap::new();
        for r in &d.records {
            if let Some(prev) = by_text.insert(r.tweet.text.clone(), r.label) {
                assert_eq!(prev, r.label);
            }
        }
    }
}
