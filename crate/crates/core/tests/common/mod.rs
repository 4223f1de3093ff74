//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tweetsent_core::SparseVector;

/// Solves min ½αᵀQα − Σα s.t. 0 ≤ α ≤ C, yᵀα = 0 with a dense
/// primal-dual interior-point method. Returns (α, dual objective Σα − ½αᵀQα).
pub fn qp_oracle(k: &DMatrix<f64>, y: &[f64], c: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let yv = DVector::from_column_slice(y);
    let mut a = DVector::from_element(n, c / 2.0);
    let mut lam = DVector::from_element(n, 1.0);
    let mut mu = DVector::from_element(n, 1.0);
    let mut nu = 0.0;
    for _ in 0..200 {
        let s = a.map(|ai| c - ai);
        let t = (lam.dot(&a) + mu.dot(&s)) / (2 * n) as f64;
        let rd = &q * &a - DVector::from_element(n, 1.0) + &yv * nu - &lam + &mu;
        let rp = yv.dot(&a);
        if t < 1e-13 && rd.norm() < 1e-10 && rp.abs() < 1e-10 {
            break;
        }
        let sigma = 0.1;
        let mut m = DMatrix::zeros(n + 1, n + 1);
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = q[(i, j)];
            }
            m[(i, i)] += lam[i] / a[i] + mu[i] / s[i];
            m[(i, n)] = y[i];
            m[(n, i)] = y[i];
            rhs[i] = -rd[i] + (sigma * t / a[i] - lam[i]) - (sigma * t / s[i] - mu[i]);
        }
        rhs[n] = -rp;
        let sol = m.lu().solve(&rhs).expect("KKT system is nonsingular");
        let da = sol.rows(0, n).into_owned();
        let dnu = sol[n];
        let dlam = DVector::from_fn(n, |i, _| (sigma * t - lam[i] * a[i] - lam[i] * da[i]) / a[i]);
        let dmu = DVector::from_fn(n, |i, _| (sigma * t - mu[i] * s[i] + mu[i] * da[i]) / s[i]);
        let mut step: f64 = 1.0;
        for i in 0..n {
            if da[i] < 0.0 {
                step = step.min(-a[i] / da[i]);
            }
            if da[i] > 0.0 {
                step = step.min(s[i] / da[i]);
            }
            if dlam[i] < 0.0 {
                step = step.min(-lam[i] / dlam[i]);
            }
            if dmu[i] < 0.0 {
                step = step.min(-mu[i] / dmu[i]);
            }
        }
        let step = (0.99 * step).min(1.0);
        a += &da * step;
        lam += &dlam * step;
        mu += &dmu * step;
        nu += dnu * step;
    }
    let obj = a.sum() - 0.5 * a.dot(&(&q * &a));
    (a.iter().copied().collect(), obj)
}

pub fn gram(xs: &[SparseVector], kernel: &tweetsent_core::KernelSpec) -> DMatrix<f64> {
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| {
        tweetsent_core::svm::kernel_eval(kernel, &xs[i], &xs[j]).unwrap()
    })
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// 2-D two-class instance. `overlap = false` gives a linearly separable set.
pub fn binary_instance(seed: u64, n: usize, overlap: bool) -> (Vec<SparseVector>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = if overlap { 0.6 } else { 3.0 };
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let y = if i % 2 == 0 { 1.0 } else { -1.0 };
        let p = [
            y * shift + gaussian(&mut rng) * 0.5,
            gaussian(&mut rng) * 0.5 + y * shift * 0.3,
        ];
        xs.push(SparseVector::from_dense(&p));
        ys.push(y);
    }
    (xs, ys)
}

/// Three well separated 2-D Gaussian blobs, `per_class` points each.
pub fn blobs(seed: u64, per_class: usize) -> (Vec<SparseVector>, Vec<tweetsent_core::SentimentLabel>) {
    use tweetsent_core::SentimentLabel::*;
    let centres = [[-5.0, 0.0], [5.0, 0.0], [0.0, 8.0]];
    let labels = [Negative, Neutral, Positive];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..per_class * 3 {
        let c = i % 3;
        let p = [centres[c][0] + gaussian(&mut rng), centres[c][1] + gaussian(&mut rng)];
        xs.push(SparseVector::from_dense(&p));
        ys.push(labels[c]);
    }
    (xs, ys)
}

/// Largest per-point KKT violation of (α, b) for the C-SVM.
pub fn kkt_violation(k: &DMatrix<f64>, y: &[f64], alpha: &[f64], bias: f64, c: f64) -> f64 {
    let n = y.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n).map(|j| alpha[j] * y[j] * k[(i, j)]).sum::<f64>() + bias;
        let m = y[i] * f - 1.0;
        let v = if alpha[i] <= 0.0 {
            (-m).max(0.0)
        } else if alpha[i] >= c {
            m.max(0.0)
        } else {
            m.abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Two known topics over 20 terms: topic t puts 0.95 of its mass evenly on
/// terms 10t..10t+9. Each doc draws 0.9/0.1 mixing weights for a random
/// dominant topic. Returns docs of term names `w00`..`w19`.
pub fn two_topic_corpus(seed: u64, n_docs: usize, doc_len: usize) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = |t: usize, w: usize| if w / 10 == t { 0.095 } else { 0.005 };
    let mut docs = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let dominant = rng.gen_range(0..2);
        let mut doc = Vec::with_capacity(doc_len);
        for _ in 0..doc_len {
            let t = if rng.gen::<f64>() < 0.9 { dominant } else { 1 - dominant };
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut w = 19;
            for cand in 0..20 {
                acc += phi(t, cand);
                if u < acc {
                    w = cand;
                    break;
                }
            }
            doc.push(format!("w{w:02}"));
        }
        docs.push(doc);
    }
    docs
}

/// Generator topic whose high-mass terms are `w{10t}`..`w{10t+9}`.
pub fn generator_terms(t: usize) -> Vec<String> {
    (10 * t..10 * t + 10).map(|w| format!("w{w:02}")).collect()
}

/// Best total overlap between two learned top-10 lists and the generator
/// topics, trying both assignments. Returns per-generator-topic overlap.
pub fn matched_overlap(learned: &[Vec<String>]) -> [usize; 2] {
    let overlap = |l: &Vec<String>, t: usize| {
        let g = generator_terms(t);
        l.iter().filter(|w| g.contains(w)).count()
    };
    let straight = [overlap(&learned[0], 0), overlap(&learned[1], 1)];
    let crossed = [overlap(&learned[1], 0), overlap(&learned[0], 1)];
    if straight[0] + straight[1] >= crossed[0] + crossed[1] {
        straight
    } else {
        crossed
    }
}
