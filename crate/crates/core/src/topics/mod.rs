//! Topic modelling: LDA-oriented token cleanup, phrase merging, a
//! dictionary, collapsed Gibbs LDA, UMass coherence and term reports.

mod dictionary;
mod lda;
mod phrases;
mod prepare;
mod report;

use thiserror::Error;

use crate::corpus::{Dataset, SentimentLabel};

pub use dictionary::{build_dictionary, BowDoc, Dictionary};
pub use lda::{
    coherence_umass, lda_gibbs, lda_gibbs_with, select_topic_count, umass_pair, Coherence, LdaModel, LdaParams,
    LdaSampler, TopicSelection, DEFAULT_BETA, DEFAULT_BURN_IN, DEFAULT_COHERENCE_TOP_N, DEFAULT_ITERATIONS,
};
pub use phrases::{
    apply_phrases, detect_phrases, phrase_score, PhraseModel, PhraseTable, DEFAULT_MIN_COUNT, DEFAULT_THRESHOLD,
};
pub use prepare::{lemmatize_rules, prepare_for_lda, LdaPreprocessor};
pub use report::{top_terms, KCoherence, TermProb, TopicReport, TopicSummary, DEFAULT_TOP_N};

#[derive(Debug, Error)]
pub enum TopicsError {
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("invalid topic-model setting: {0}")]
    Param(String),
    #[error("resource line {line}: {reason}")]
    Resource { line: usize, reason: String },
    #[error("{records} records but {predictions} predictions")]
    LengthMismatch { records: usize, predictions: usize },
    #[error("record {0} has no gold label")]
    Unlabelled(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Records whose prediction differs from the gold label, order preserved.
pub fn misclassified(test: &Dataset, predictions: &[SentimentLabel]) -> Result<Dataset, TopicsError> {
    if test.records.len() != predictions.len() {
        return Err(TopicsError::LengthMismatch {
            records: test.records.len(),
            predictions: predictions.len(),
        });
    }
    let mut records = Vec::new();
    for (r, p) in test.records.iter().zip(predictions) {
        let gold = r.label.ok_or_else(|| TopicsError::Unlabelled(r.tweet.id.clone()))?;
        if gold != *p {
            records.push(r.clone());
        }
    }
    Ok(Dataset {
        name: format!("{}-misclassified", test.name),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabeledTweet;
    use SentimentLabel::*;

    fn six() -> (Dataset, Vec<SentimentLabel>) {
        let gold = [Positive, Positive, Negative, Negative, Neutral, Neutral];
        let pred = vec![Positive, Positive, Negative, Neutral, Neutral, Neutral];
        let records = gold
            .iter()
            .enumerate()
            .map(|(i, l)| LabeledTweet::new(i.to_string(), format!("t{i}"), Some(*l)))
            .collect();
        (
            Dataset {
                name: "six".into(),
                records,
            },
            pred,
        )
    }

    #[test]
    fn six_record_example() {
        let (d, p) = six();
        let m = misclassified(&d, &p).unwrap();
        assert_eq!(m.records.len(), 1);
        assert_eq!(m.records[0].tweet.id, "3");
        assert_eq!(m.records[0].label, Some(Negative));
    }

    #[test]
    fn all_right_all_wrong() {
        let (d, _) = six();
        let gold = d.labels().unwrap();
        assert!(misclassified(&d, &gold).unwrap().records.is_empty());
        let wrong: Vec<_> = gold
            .iter()
            .map(|l| if *l == Neutral { Positive } else { Neutral })
            .collect();
        assert_eq!(misclassified(&d, &wrong).unwrap().records, d.records);
        assert!(misclassified(&d, &gold[..2]).is_err());
    }
}
