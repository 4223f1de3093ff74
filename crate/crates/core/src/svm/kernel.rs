use std::fmt;

use serde::{Deserialize, Serialize};

use super::SvmError;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Self {
        KernelSpec::Rbf { gamma }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            KernelSpec::Linear => None,
            KernelSpec::Rbf { gamma } => Some(*gamma),
        }
    }

    pub fn from_parts(kind: &str, gamma: Option<f64>) -> Result<Self, SvmError> {
        match (kind.to_ascii_lowercase().as_str(), gamma) {
            ("linear", _) => Ok(KernelSpec::Linear),
            ("rbf", Some(g)) => {
                let k = KernelSpec::Rbf { gamma: g };
                k.validate()?;
                Ok(k)
            }
            ("rbf", None) => Err(SvmError::InvalidParam("rbf kernel requires gamma".into())),
            (other, _) => Err(SvmError::InvalidParam(format!("unknown kernel {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        match self {
            KernelSpec::Rbf { gamma } if !(*gamma > 0.0 && gamma.is_finite()) => {
                Err(SvmError::InvalidParam(format!("gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value from precomputed squared norms and the inner product.
    #[inline]
    pub(crate) fn eval_dot(&self, dot: f64, norm_x: f64, norm_y: f64) -> f64 {
        match self {
            KernelSpec::Linear => dot,
            KernelSpec::Rbf { gamma } => (-gamma * (norm_x + norm_y - 2.0 * dot).max(0.0)).exp(),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => f.write_str("linear"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
        }
    }
}

/// `linear`: ⟨x, y⟩; `rbf`: exp(−γ‖x − y‖²).
pub fn kernel_eval(k: &KernelSpec, x: &SparseVector, y: &SparseVector) -> Result<f64, SvmError> {
    x.check_dim(y)?;
    Ok(match k {
        KernelSpec::Linear => x.dot(y),
        KernelSpec::Rbf { gamma } => (-gamma * x.dist_sq(y)).exp(),
    })
}
