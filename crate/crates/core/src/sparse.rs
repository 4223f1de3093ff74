use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SparseError {
    #[error("index {index} out of range for dimension {dim}")]
    OutOfRange { index: usize, dim: usize },
    #[error("indices must be strictly increasing (saw {prev} then {next})")]
    Unsorted { prev: usize, next: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
}

/// Sorted sparse vector. Zero values are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(index, value)` pairs that must already be strictly
    /// increasing in index. Zero values are dropped.
    pub fn from_sorted(dim: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self, SparseError> {
        let mut v = SparseVector::zeros(dim);
        for (index, value) in entries {
            if index >= dim {
                return Err(SparseError::OutOfRange { index, dim });
            }
            if let Some(&prev) = v.indices.last() {
                if index <= prev {
                    return Err(SparseError::Unsorted { prev, next: index });
                }
            }
            if value != 0.0 {
                v.indices.push(index);
                v.values.push(value);
            }
        }
        Ok(v)
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector::from_sorted(values.len(), values.iter().copied().enumerate())
            .expect("dense input is sorted and in range")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    sum += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        sum
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// ‖self − other‖², computed on the merged supports.
    pub fn dist_sq(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.indices.len() || b < other.indices.len() {
            let ia = self.indices.get(a).copied().unwrap_or(usize::MAX);
            let ib = other.indices.get(b).copied().unwrap_or(usize::MAX);
            let d = if ia == ib {
                a += 1;
                b += 1;
                self.values[a - 1] - other.values[b - 1]
            } else if ia < ib {
                a += 1;
                self.values[a - 1]
            } else {
                b += 1;
                -other.values[b - 1]
            };
            sum += d * d;
        }
        sum
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn check_dim(&self, other: &SparseVector) -> Result<(), SparseError> {
        if self.dim != other.dim {
            return Err(SparseError::Dimension {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }
}
