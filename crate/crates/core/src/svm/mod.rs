//! Kernel SVM classification with one-vs-one voting.

mod kernel;
mod smo;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SentimentLabel;
use crate::sparse::{SparseError, SparseVector};

pub use kernel::{kernel_eval, KernelSpec};
pub use smo::{train_binary_smo, SmoOutcome, SmoReport, SmoStatus, GRAM_CACHE_LIMIT};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Dimension(#[from] SparseError),
    #[error("{xs} inputs but {ys} labels")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("need at least 2 training points, got {0}")]
    TooFewPoints(usize),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("class {0} has no samples in its pair subset")]
    EmptyClass(SentimentLabel),
    #[error("unsupported model version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("model I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyperParams {
    pub c: f64,
    pub kernel: KernelSpec,
    pub kkt_tolerance: f64,
    pub max_passes: usize,
    pub max_iterations: usize,
}

impl Default for SvmHyperParams {
    fn default() -> Self {
        SvmHyperParams {
            c: 4.0,
            kernel: KernelSpec::rbf(0.1),
            kkt_tolerance: 1e-3,
            max_passes: 10,
            max_iterations: 1_000_000,
        }
    }
}

impl SvmHyperParams {
    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        SvmHyperParams {
            c,
            kernel,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::InvalidParam(format!("C must be positive, got {}", self.c)));
        }
        if !(self.kkt_tolerance > 0.0) {
            return Err(SvmError::InvalidParam(format!(
                "tolerance must be positive, got {}",
                self.kkt_tolerance
            )));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidParam("max_passes must be at least 1".into()));
        }
        self.kernel.validate()
    }
}

/// A trained two-class machine. A positive decision value votes for
/// `class_pair.0`, anything else for `class_pair.1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub support_vectors: Vec<SparseVector>,
    /// αᵢyᵢ for each support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelSpec,
    pub class_pair: (SentimentLabel, SentimentLabel),
    pub dim: usize,
}

impl BinarySvm {
    /// Σ αᵢyᵢ K(xᵢ, x) + b. Callers are responsible for the dimension check.
    pub fn decision(&self, x: &SparseVector) -> f64 {
        let nx = x.norm_sq();
        let mut sum = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefficients) {
            sum += coef * self.kernel.eval_dot(sv.dot(x), sv.norm_sq(), nx);
        }
        sum
    }

    pub fn predict(&self, x: &SparseVector) -> Result<SentimentLabel, SvmError> {
        self.check_dim(x)?;
        Ok(self.vote(self.decision(x)))
    }

    fn vote(&self, decision: f64) -> SentimentLabel {
        if decision > 0.0 {
            self.class_pair.0
        } else {
            self.class_pair.1
        }
    }

    fn check_dim(&self, x: &SparseVector) -> Result<(), SvmError> {
        if x.dim() != self.dim {
            return Err(SparseError::Dimension {
                left: self.dim,
                right: x.dim(),
            }
            .into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub machines: Vec<BinarySvm>,
    /// Sorted labels seen in training.
    pub classes: Vec<SentimentLabel>,
    pub hyper_params: SvmHyperParams,
}

/// Per-pair training diagnostics, in machine order.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub reports: Vec<SmoReport>,
}

impl TrainSummary {
    pub fn all_converged(&self) -> bool {
        self.reports.iter().all(|r| r.status == SmoStatus::Converged)
    }
}

/// Seed for the machine at `index`; keeps pair runs independent of thread
/// scheduling.
fn pair_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn train_multiclass(
    xs: &[SparseVector],
    labels: &[SentimentLabel],
    hp: &SvmHyperParams,
    seed: u64,
) -> Result<SvmModel, SvmError> {
    train_multiclass_with_report(xs, labels, hp, seed).map(|(m, _)| m)
}

pub fn train_multiclass_with_report(
    xs: &[SparseVector],
    labels: &[SentimentLabel],
    hp: &SvmHyperParams,
    seed: u64,
) -> Result<(SvmModel, TrainSummary), SvmError> {
    hp.validate()?;
    if xs.len() != labels.len() {
        return Err(SvmError::LengthMismatch {
            xs: xs.len(),
            ys: labels.len(),
        });
    }
    let mut classes: Vec<SentimentLabel> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(SvmError::SingleClass);
    }
    let mut pairs = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            pairs.push((classes[a], classes[b]));
        }
    }
    let outcomes: Vec<Result<SmoOutcome, SvmError>> = pairs
        .par_iter()
        .enumerate()
        .map(|(index, &(a, b))| {
            let mut sub_x = Vec::new();
            let mut sub_y = Vec::new();
            for (x, &l) in xs.iter().zip(labels) {
                if l == a || l == b {
                    sub_x.push(x.clone());
                    sub_y.push(if l == a { 1.0 } else { -1.0 });
                }
            }
            train_binary_smo(&sub_x, &sub_y, hp, pair_seed(seed, index), (a, b))
        })
        .collect();
    let mut machines = Vec::with_capacity(pairs.len());
    let mut reports = Vec::with_capacity(pairs.len());
    for out in outcomes {
        let out = out?;
        machines.push(out.model);
        reports.push(out.report);
    }
    Ok((
        SvmModel {
            machines,
            classes,
            hyper_params: *hp,
        },
        TrainSummary { reports },
    ))
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.machines.first().map_or(0, |m| m.dim)
    }

    /// Vote counts and summed |decision| of the votes won, indexed by
    /// label code.
    pub fn votes(&self, x: &SparseVector) -> Result<([usize; 3], [f64; 3]), SvmError> {
        let mut votes = [0usize; 3];
        let mut strength = [0.0f64; 3];
        for m in &self.machines {
            m.check_dim(x)?;
            let d = m.decision(x);
            let winner = m.vote(d).code();
            votes[winner] += 1;
            strength[winner] += d.abs();
        }
        Ok((votes, strength))
    }

    pub fn predict(&self, x: &SparseVector) -> Result<SentimentLabel, SvmError> {
        let (votes, strength) = self.votes(x)?;
        Ok(resolve_votes(&self.classes, votes, strength))
    }

    pub fn predict_all(&self, xs: &[SparseVector]) -> Result<Vec<SentimentLabel>, SvmError> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            kernel: self.hyper_params.kernel.name().to_string(),
            gamma: self.hyper_params.kernel.gamma(),
            c: self.hyper_params.c,
            kkt_tolerance: self.hyper_params.kkt_tolerance,
            max_passes: self.hyper_params.max_passes,
            max_iterations: self.hyper_params.max_iterations,
            dim: self.dim(),
            classes: self.classes.clone(),
            machines: self
                .machines
                .iter()
                .map(|m| MachineFile {
                    pair: [m.class_pair.0, m.class_pair.1],
                    support_vectors: m.support_vectors.clone(),
                    dual_coefficients: m.dual_coefficients.clone(),
                    bias: m.bias,
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SvmError> {
        let probe: serde_json::Value = serde_json::from_str(text).map_err(|e| SvmError::Corrupt(e.to_string()))?;
        let version = probe
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| SvmError::Corrupt("missing version".into()))?;
        if version != u64::from(MODEL_FORMAT_VERSION) {
            return Err(SvmError::Version {
                found: version as u32,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_value(probe).map_err(|e| SvmError::Corrupt(e.to_string()))?;
        let kernel = KernelSpec::from_parts(&file.kernel, file.gamma).map_err(|e| SvmError::Corrupt(e.to_string()))?;
        let hyper_params = SvmHyperParams {
            c: file.c,
            kernel,
            kkt_tolerance: file.kkt_tolerance,
            max_passes: file.max_passes,
            max_iterations: file.max_iterations,
        };
        hyper_params.validate().map_err(|e| SvmError::Corrupt(e.to_string()))?;
        let k = file.classes.len();
        if k < 2 || file.machines.len() != k * (k - 1) / 2 {
            return Err(SvmError::Corrupt(format!(
                "{} machines for {} classes",
                file.machines.len(),
                k
            )));
        }
        let mut machines = Vec::with_capacity(file.machines.len());
        for m in file.machines {
            if m.support_vectors.len() != m.dual_coefficients.len() {
                return Err(SvmError::Corrupt("support vector / coefficient count mismatch".into()));
            }
            if m.support_vectors.iter().any(|v| v.dim() != file.dim) {
                return Err(SvmError::Corrupt("support vector dimension mismatch".into()));
            }
            machines.push(BinarySvm {
                support_vectors: m.support_vectors,
                dual_coefficients: m.dual_coefficients,
                bias: m.bias,
                kernel,
                class_pair: (m.pair[0], m.pair[1]),
                dim: file.dim,
            });
        }
        Ok(SvmModel {
            machines,
            classes: file.classes,
            hyper_params,
        })
    }
}

/// Most votes; then largest summed |decision|; then label order.
pub fn resolve_votes(classes: &[SentimentLabel], votes: [usize; 3], strength: [f64; 3]) -> SentimentLabel {
    let mut best = classes[0];
    for &c in &classes[1..] {
        let (i, b) = (c.code(), best.code());
        if votes[i] > votes[b] || (votes[i] == votes[b] && strength[i] > strength[b]) {
            best = c;
        }
    }
    best
}

#[derive(Serialize, Deserialize)]
struct MachineFile {
    pair: [SentimentLabel; 2],
    support_vectors: Vec<SparseVector>,
    dual_coefficients: Vec<f64>,
    bias: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    kernel: String,
    gamma: Option<f64>,
    #[serde(rename = "C")]
    c: f64,
    kkt_tolerance: f64,
    max_passes: usize,
    max_iterations: usize,
    dim: usize,
    classes: Vec<SentimentLabel>,
    machines: Vec<MachineFile>,
}

pub fn save_model(model: &SvmModel, path: &Path) -> Result<(), SvmError> {
    fs::write(path, model.to_json())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SvmModel, SvmError> {
    SvmModel::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentLabel::*;

    #[test]
    fn plurality_vote() {
        let classes = [Negative, Neutral, Positive];
        assert_eq!(resolve_votes(&classes, [2, 1, 0], [0.1, 5.0, 0.0]), Negative);
    }

    #[test]
    fn three_way_tie_uses_strength() {
        let classes = [Negative, Neutral, Positive];
        assert_eq!(resolve_votes(&classes, [1, 1, 1], [0.2, 0.9, 0.5]), Neutral);
        // full tie falls back to label order
        assert_eq!(resolve_votes(&classes, [1, 1, 1], [0.5, 0.5, 0.5]), Negative);
    }

    #[test]
    fn hyperparam_validation() {
        assert!(SvmHyperParams::new(0.0, KernelSpec::Linear).validate().is_err());
        assert!(SvmHyperParams {
            kkt_tolerance: 0.0,
            ..SvmHyperParams::default()
        }
        .validate()
        .is_err());
        assert!(SvmHyperParams::default().validate().is_ok());
    }
}
