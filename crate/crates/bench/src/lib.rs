//! Shared inputs for the criterion benches.

use tweetsent_core::normalize::{bundled_lexicon, normalize};
use tweetsent_core::pipeline::{generate_demo, DemoSpec};
use tweetsent_core::{Dataset, NormalizationMode, SentimentLabel};

/// Synthetic labelled corpus of `n` tweets.
pub fn corpus(n: usize) -> Dataset {
    generate_demo(&DemoSpec {
        n,
        duplicates: 0,
        ..DemoSpec::default()
    })
}

/// Lexically normalized token lists and gold labels for `d`.
pub fn tokens_and_labels(d: &Dataset) -> (Vec<Vec<String>>, Vec<SentimentLabel>) {
    let lex = bundled_lexicon();
    let docs = d
        .records
        .iter()
        .map(|r| normalize(&r.tweet.text, NormalizationMode::Lexical, lex).tokens)
        .collect();
    (docs, d.labels().expect("demo corpus is labelled"))
}
