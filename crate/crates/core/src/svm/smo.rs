//! Sequential minimal optimization for the C-SVM dual
//!
//! ```text
//! min ½ αᵀQα − Σα   s.t.  0 ≤ α ≤ C,  yᵀα = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Each step picks the maximal-violating index `i` and, among the indices
//! that violate jointly with it, the `j` giving the largest second-order
//! decrease of the objective; then solves the two-variable subproblem in
//! closed form. The loop stops once the KKT gap `m(α) − M(α)` drops below
//! the tolerance. On convergence the gradient is rebuilt from scratch and
//! the gap re-checked so accumulated drift cannot fake convergence; at most
//! `max_passes` such verification rounds are made.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BinarySvm, KernelSpec, SvmError, SvmHyperParams};
use crate::corpus::SentimentLabel;
use crate::sparse::SparseVector;

/// Full per-row caching is used up to this many training points.
pub const GRAM_CACHE_LIMIT: usize = 10_000;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoStatus {
    Converged,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct SmoReport {
    pub status: SmoStatus,
    pub iterations: usize,
    /// Final KKT gap m(α) − M(α).
    pub gap: f64,
    /// Σα − ½ αᵀQα at the returned solution.
    pub dual_objective: f64,
    /// One multiplier per training point, in input order.
    pub alphas: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone)]
pub struct SmoOutcome {
    pub model: BinarySvm,
    pub report: SmoReport,
}

struct QMatrix<'a> {
    xs: &'a [SparseVector],
    ys: &'a [f64],
    kernel: KernelSpec,
    norms: Vec<f64>,
    cache: Option<Vec<Option<Arc<[f64]>>>>,
}

impl<'a> QMatrix<'a> {
    fn new(xs: &'a [SparseVector], ys: &'a [f64], kernel: KernelSpec) -> Self {
        let norms = xs.iter().map(SparseVector::norm_sq).collect();
        let cache = (xs.len() <= GRAM_CACHE_LIMIT).then(|| vec![None; xs.len()]);
        QMatrix {
            xs,
            ys,
            kernel,
            norms,
            cache,
        }
    }

    fn kernel(&self, i: usize, j: usize) -> f64 {
        self.kernel
            .eval_dot(self.xs[i].dot(&self.xs[j]), self.norms[i], self.norms[j])
    }

    fn compute_row(&self, i: usize) -> Arc<[f64]> {
        (0..self.xs.len())
            .map(|j| self.ys[i] * self.ys[j] * self.kernel(i, j))
            .collect()
    }

    fn row(&mut self, i: usize) -> Arc<[f64]> {
        if let Some(cache) = self.cache.as_mut() {
            if let Some(row) = &cache[i] {
                return row.clone();
            }
        }
        let row = self.compute_row(i);
        if let Some(cache) = self.cache.as_mut() {
            cache[i] = Some(row.clone());
        }
        row
    }
}

struct Solver<'a> {
    q: QMatrix<'a>,
    ys: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    diag: Vec<f64>,
    order: Vec<usize>,
}

impl Solver<'_> {
    fn in_up(&self, t: usize) -> bool {
        if self.ys[t] > 0.0 {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.ys[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    /// Returns the working pair, or `None` with the current gap when the
    /// KKT conditions hold within `eps`.
    fn select(&mut self, eps: f64) -> Result<(usize, usize, Arc<[f64]>), f64> {
        let mut gmax = f64::NEG_INFINITY;
        let mut best_i = None;
        for &t in &self.order {
            if self.in_up(t) {
                let v = -self.ys[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    best_i = Some(t);
                }
            }
        }
        let Some(i) = best_i else {
            return Err(0.0);
        };
        let mut gmax2 = f64::NEG_INFINITY;
        let qi = self.q.row(i);
        let mut best_j = None;
        let mut obj_min = f64::INFINITY;
        for &t in &self.order {
            if !self.in_low(t) {
                continue;
            }
            let low = self.ys[t] * self.grad[t];
            gmax2 = gmax2.max(low);
            let grad_diff = gmax + low;
            if grad_diff > 0.0 {
                // qi[t] = y_i y_t K_it
                let quad = (self.diag[i] + self.diag[t] - 2.0 * self.ys[i] * self.ys[t] * qi[t]).max(TAU);
                let obj = -(grad_diff * grad_diff) / quad;
                if obj < obj_min {
                    obj_min = obj;
                    best_j = Some(t);
                }
            }
        }
        let gap = gmax + gmax2;
        match best_j {
            Some(j) if gap >= eps => Ok((i, j, qi)),
            _ => Err(gap.max(0.0)),
        }
    }

    fn step(&mut self, i: usize, j: usize, qi: &[f64]) {
        let qj = self.q.row(j);
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.ys[i] != self.ys[j] {
            let quad = (self.diag[i] + self.diag[j] + 2.0 * qi[j]).max(TAU);
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (self.diag[i] + self.diag[j] - 2.0 * qi[j]).max(TAU);
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..self.grad.len() {
            self.grad[t] += qi[t] * di + qj[t] * dj;
        }
    }

    fn rebuild_gradient(&mut self) {
        let n = self.alpha.len();
        let mut grad = vec![-1.0; n];
        for i in 0..n {
            if self.alpha[i] != 0.0 {
                let qi = self.q.row(i);
                for (t, g) in grad.iter_mut().enumerate() {
                    *g += qi[t] * self.alpha[i];
                }
            }
        }
        self.grad = grad;
    }

    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum_free, mut n_free) = (0.0, 0usize);
        for t in 0..self.alpha.len() {
            let yg = self.ys[t] * self.grad[t];
            if self.alpha[t] >= self.c {
                if self.ys[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if self.ys[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        let rho = if n_free > 0 {
            sum_free / n_free as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }

    fn dual_objective(&self) -> f64 {
        -0.5 * self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
    }
}

/// Trains one binary kernel machine; `ys` must be ±1.
///
/// `pair` names the class predicted for a positive (`+1`) and a negative
/// (`−1`) decision value. Hitting `max_iterations` is not an error: the
/// model is returned with [`SmoStatus::IterationCap`].
pub fn train_binary_smo(
    xs: &[SparseVector],
    ys: &[f64],
    hp: &SvmHyperParams,
    seed: u64,
    pair: (SentimentLabel, SentimentLabel),
) -> Result<SmoOutcome, SvmError> {
    hp.validate()?;
    if xs.len() != ys.len() {
        return Err(SvmError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(SvmError::TooFewPoints(xs.len()));
    }
    if let Some(bad) = ys.iter().find(|y| **y != 1.0 && **y != -1.0) {
        return Err(SvmError::InvalidParam(format!("binary labels must be ±1, got {bad}")));
    }
    if ys.iter().all(|y| *y > 0.0) || ys.iter().all(|y| *y < 0.0) {
        return Err(SvmError::SingleClass);
    }
    let dim = xs[0].dim();
    if let Some(x) = xs.iter().find(|x| x.dim() != dim) {
        return Err(SvmError::Dimension(crate::sparse::SparseError::Dimension {
            left: dim,
            right: x.dim(),
        }));
    }

    let n = xs.len();
    let q = QMatrix::new(xs, ys, hp.kernel);
    let diag = (0..n).map(|i| q.kernel(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut solver = Solver {
        q,
        ys,
        c: hp.c,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        diag,
        order,
    };

    let mut iterations = 0;
    let mut passes = 0;
    let (status, gap) = loop {
        if iterations >= hp.max_iterations {
            solver.rebuild_gradient();
            let gap = match solver.select(hp.kkt_tolerance) {
                Ok(_) => f64::NAN,
                Err(gap) => gap,
            };
            break (SmoStatus::IterationCap, gap);
        }
        match solver.select(hp.kkt_tolerance) {
            Ok((i, j, qi)) => {
                solver.step(i, j, &qi);
                iterations += 1;
            }
            Err(_) => {
                passes += 1;
                solver.rebuild_gradient();
                match solver.select(hp.kkt_tolerance) {
                    Err(gap) => break (SmoStatus::Converged, gap),
                    Ok(_) if passes >= hp.max_passes => break (SmoStatus::IterationCap, f64::NAN),
                    Ok(_) => continue,
                }
            }
        }
    };
    let gap = if gap.is_nan() { solver_gap(&mut solver) } else { gap };
    if status == SmoStatus::IterationCap {
        log::warn!("SMO stopped after {iterations} iterations with KKT gap {gap:.3e}");
    }

    let bias = solver.bias();
    let dual_objective = solver.dual_objective();
    let mut support_vectors = Vec::new();
    let mut dual_coefficients = Vec::new();
    for (t, &a) in solver.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(xs[t].clone());
            dual_coefficients.push(a * ys[t]);
        }
    }
    let model = BinarySvm {
        support_vectors,
        dual_coefficients,
        bias,
        kernel: hp.kernel,
        class_pair: pair,
        dim,
    };
    Ok(SmoOutcome {
        model,
        report: SmoReport {
            status,
            iterations,
            gap,
            dual_objective,
            alphas: solver.alpha,
            bias,
        },
    })
}

/// Current gap without the convergence cut-off.
fn solver_gap(solver: &mut Solver<'_>) -> f64 {
    match solver.select(f64::INFINITY) {
        Err(gap) => gap,
        Ok(_) => unreachable!("infinite tolerance always reports the gap"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SentimentLabel::{Negative, Positive};

    fn hp(kernel: KernelSpec, c: f64) -> SvmHyperParams {
        SvmHyperParams {
            c,
            kernel,
            ..SvmHyperParams::default()
        }
    }

    #[test]
    fn two_points_linear() {
        let xs = vec![SparseVector::from_dense(&[0.0]), SparseVector::from_dense(&[1.0])];
        let out = train_binary_smo(&xs, &[-1.0, 1.0], &hp(KernelSpec::Linear, 4.0), 0, (Positive, Negative)).unwrap();
        assert_eq!(out.report.status, SmoStatus::Converged);
        let m = &out.model;
        assert!(m.decision(&xs[0]) < 0.0);
        assert!(m.decision(&xs[1]) > 0.0);
        // hard-margin solution: w = 2, b = -1
        assert!((m.decision(&SparseVector::from_dense(&[0.5]))).abs() < 1e-3);
    }

    #[test]
    fn xor_rbf() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let xs: Vec<_> = pts.iter().map(|p| SparseVector::from_dense(p)).collect();
        let ys = [1.0, 1.0, -1.0, -1.0];
        let out = train_binary_smo(&xs, &ys, &hp(KernelSpec::rbf(1.0), 10.0), 3, (Positive, Negative)).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert!(out.model.decision(x) * y > 0.0);
        }
    }

    #[test]
    fn single_class_rejected() {
        let xs = vec![SparseVector::from_dense(&[0.0]), SparseVector::from_dense(&[1.0])];
        assert!(matches!(
            train_binary_smo(&xs, &[1.0, 1.0], &hp(KernelSpec::Linear, 1.0), 0, (Positive, Negative)),
            Err(SvmError::SingleClass)
        ));
        assert!(matches!(
            train_binary_smo(&xs[..1], &[1.0], &hp(KernelSpec::Linear, 1.0), 0, (Positive, Negative)),
            Err(SvmError::TooFewPoints(1))
        ));
    }

    #[test]
    fn iteration_cap_still_returns_model() {
        let xs: Vec<_> = (0..20)
            .map(|i| SparseVector::from_dense(&[(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]))
            .collect();
        let ys: Vec<f64> = (0..20).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let params = SvmHyperParams {
            max_iterations: 2,
            ..hp(KernelSpec::rbf(1.0), 10.0)
        };
        let out = train_binary_smo(&xs, &ys, &params, 0, (Positive, Negative)).unwrap();
        assert_eq!(out.report.status, SmoStatus::IterationCap);
        assert_eq!(out.report.iterations, 2);
    }

    #[test]
    fn equality_constraint_holds() {
        let xs: Vec<_> = (0..25)
            .map(|i| SparseVector::from_dense(&[(i as f64 * 1.3).sin(), (i as f64 * 0.7).cos()]))
            .collect();
        let ys: Vec<f64> = (0..25).map(|i| if (i * 7) % 5 < 2 { 1.0 } else { -1.0 }).collect();
        let out = train_binary_smo(&xs, &ys, &hp(KernelSpec::rbf(0.5), 2.0), 11, (Positive, Negative)).unwrap();
        let s: f64 = out.model.dual_coefficients.iter().sum();
        assert!(s.abs() < 1e-6);
        for a in &out.report.alphas {
            assert!(*a >= 0.0 && *a <= 2.0);
        }
    }
}
