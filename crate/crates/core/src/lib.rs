//! Tweet sentiment pipeline: normalization, TF-IDF features, SMO-trained
//! kernel SVMs, hyperparameter search, evaluation reports and LDA topic
//! modelling of misclassified tweets.

// `!(x > 0.0)` is used deliberately so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod eval;
pub mod normalize;
pub mod pipeline;
pub mod sparse;
pub mod svm;
pub mod topics;
pub mod tune;
pub mod vectorize;

pub use corpus::{Dataset, LabeledTweet, SentimentLabel, SplitSpec, Tweet};
pub use eval::{ClassificationReport, ConfusionMatrix};
pub use normalize::{LexiconSet, NormalizationMode, NormalizedText};
pub use pipeline::{Manifest, PipelineConfig, PipelineError};
pub use sparse::SparseVector;
pub use svm::{KernelSpec, SvmHyperParams, SvmModel};
pub use vectorize::{TfIdfModel, Vocabulary};
