mod common;

use common::{binary_instance, blobs, gram, kkt_violation, qp_oracle};
use proptest::prelude::*;
use tweetsent_core::svm::{
    load_model, save_model, train_binary_smo, train_multiclass, train_multiclass_with_report, SmoStatus, SvmError,
};
use tweetsent_core::SentimentLabel::{self, *};
use tweetsent_core::{KernelSpec, SparseVector, SvmHyperParams};

fn hp(c: f64, kernel: KernelSpec) -> SvmHyperParams {
    SvmHyperParams::new(c, kernel)
}

#[test]
fn separable_linear_matches_oracle() {
    let (xs, ys) = binary_instance(7, 30, false);
    let params = hp(4.0, KernelSpec::Linear);
    let out = train_binary_smo(&xs, &ys, &params, 1, (Positive, Negative)).unwrap();
    assert_eq!(out.report.status, SmoStatus::Converged);
    for (x, y) in xs.iter().zip(&ys) {
        assert!(out.model.decision(x) * y > 0.0);
    }
    let (_, obj) = qp_oracle(&gram(&xs, &params.kernel), &ys, params.c);
    assert!(
        (out.report.dual_objective - obj).abs() < 1e-3,
        "{} vs {obj}",
        out.report.dual_objective
    );
}

#[test]
fn overlapping_rbf_matches_oracle_and_kkt() {
    for seed in 0..5 {
        let (xs, ys) = binary_instance(100 + seed, 24, true);
        let params = hp(2.0, KernelSpec::rbf(0.5));
        let out = train_binary_smo(&xs, &ys, &params, seed, (Positive, Negative)).unwrap();
        let k = gram(&xs, &params.kernel);
        let (_, obj) = qp_oracle(&k, &ys, params.c);
        assert!((out.report.dual_objective - obj).abs() < 1e-3);
        assert!(kkt_violation(&k, &ys, &out.report.alphas, out.report.bias, params.c) <= 1e-3);
        assert!(out.report.gap < 1e-3);
    }
}

#[test]
fn dual_feasibility() {
    let (xs, ys) = binary_instance(3, 30, true);
    let params = hp(1.5, KernelSpec::rbf(1.0));
    let out = train_binary_smo(&xs, &ys, &params, 9, (Positive, Negative)).unwrap();
    let m = &out.model;
    let sum: f64 = m.dual_coefficients.iter().sum();
    assert!(sum.abs() < 1e-6);
    for coef in &m.dual_coefficients {
        assert!(coef.abs() > 0.0 && coef.abs() <= params.c);
    }
}

#[test]
fn deterministic_given_seed() {
    let (xs, ys) = blobs(5, 20);
    let params = hp(4.0, KernelSpec::rbf(0.1));
    let a = train_multiclass(&xs, &ys, &params, 42).unwrap();
    let b = train_multiclass(&xs, &ys, &params, 42).unwrap();
    assert_eq!(a, b);
}

#[test]
fn larger_c_never_adds_margin_violations() {
    let (xs, ys) = binary_instance(21, 30, false);
    let mut last = usize::MAX;
    for c in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let out = train_binary_smo(&xs, &ys, &hp(c, KernelSpec::Linear), 0, (Positive, Negative)).unwrap();
        let violations = xs
            .iter()
            .zip(&ys)
            .filter(|(x, y)| out.model.decision(x) * *y < 1.0 - 1e-3)
            .count();
        assert!(violations <= last, "C={c}: {violations} > {last}");
        last = violations;
    }
}

#[test]
fn three_classes_three_machines() {
    let (xs, ys) = blobs(1, 20);
    let (model, summary) = train_multiclass_with_report(&xs, &ys, &hp(4.0, KernelSpec::rbf(0.1)), 0).unwrap();
    assert_eq!(model.machines.len(), 3);
    assert!(summary.all_converged());
    let pairs: Vec<_> = model.machines.iter().map(|m| m.class_pair).collect();
    assert_eq!(
        pairs,
        vec![(Negative, Neutral), (Negative, Positive), (Neutral, Positive)]
    );
}

#[test]
fn two_classes_reduce_to_binary() {
    let (xs, ys) = blobs(2, 20);
    let keep: Vec<usize> = (0..xs.len()).filter(|&i| ys[i] != Positive).collect();
    let sx: Vec<_> = keep.iter().map(|&i| xs[i].clone()).collect();
    let sy: Vec<_> = keep.iter().map(|&i| ys[i]).collect();
    let model = train_multiclass(&sx, &sy, &hp(4.0, KernelSpec::rbf(0.1)), 0).unwrap();
    assert_eq!(model.machines.len(), 1);
    for x in &xs {
        assert_eq!(model.predict(x).unwrap(), model.machines[0].predict(x).unwrap());
    }
}

fn nearest_centroid(train: &[SparseVector], labels: &[SentimentLabel], x: &SparseVector) -> SentimentLabel {
    let mut best = (f64::INFINITY, Negative);
    for l in SentimentLabel::ALL {
        let pts: Vec<_> = train
            .iter()
            .zip(labels)
            .filter(|(_, y)| **y == l)
            .map(|(p, _)| p.to_dense())
            .collect();
        let centre: Vec<f64> = (0..2)
            .map(|d| pts.iter().map(|p| p[d]).sum::<f64>() / pts.len() as f64)
            .collect();
        let dist = x.dist_sq(&SparseVector::from_dense(&centre));
        if dist < best.0 {
            best = (dist, l);
        }
    }
    best.1
}

#[test]
fn blobs_agree_with_nearest_centroid() {
    let (train_x, train_y) = blobs(11, 20);
    let (test_x, test_y) = blobs(12, 10);
    let model = train_multiclass(&train_x, &train_y, &hp(4.0, KernelSpec::rbf(0.1)), 0).unwrap();
    let mut agree = 0;
    let mut correct = 0;
    for (x, y) in test_x.iter().zip(&test_y) {
        let p = model.predict(x).unwrap();
        agree += usize::from(p == nearest_centroid(&train_x, &train_y, x));
        correct += usize::from(p == *y);
    }
    assert!(agree * 100 >= 95 * test_x.len());
    assert!(correct * 100 >= 95 * test_x.len());
}

#[test]
fn zero_vector_and_dimension_errors() {
    let (xs, ys) = blobs(3, 10);
    let model = train_multiclass(&xs, &ys, &hp(4.0, KernelSpec::rbf(0.1)), 0).unwrap();
    assert!(model.predict(&SparseVector::zeros(2)).is_ok());
    assert!(matches!(
        model.predict(&SparseVector::zeros(3)),
        Err(SvmError::Dimension(_))
    ));
}

#[test]
fn single_class_rejected() {
    let xs = vec![SparseVector::from_dense(&[1.0]), SparseVector::from_dense(&[2.0])];
    assert!(matches!(
        train_multiclass(&xs, &[Neutral, Neutral], &SvmHyperParams::default(), 0),
        Err(SvmError::SingleClass)
    ));
}

#[test]
fn model_file_round_trip() {
    let (xs, ys) = blobs(4, 15);
    let model = train_multiclass(&xs, &ys, &hp(4.0, KernelSpec::rbf(0.1)), 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    let (probe, _) = blobs(99, 34);
    for x in &probe {
        assert_eq!(model.predict(x).unwrap(), back.predict(x).unwrap());
        for (a, b) in model.machines.iter().zip(&back.machines) {
            assert_eq!(a.decision(x).to_bits(), b.decision(x).to_bits());
        }
    }

    let text = std::fs::read_to_string(&path).unwrap();
    let wrong = text.replacen("\"version\":1", "\"version\":2", 1);
    std::fs::write(&path, wrong).unwrap();
    assert!(matches!(load_model(&path), Err(SvmError::Version { found: 2, .. })));
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(load_model(&path), Err(SvmError::Corrupt(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn smo_objective_matches_oracle(seed in 0u64..10_000, n in 4usize..20, overlap: bool, log_c in -1.0..1.5f64) {
        let (xs, ys) = binary_instance(seed, n, overlap);
        let params = hp(10f64.powf(log_c), KernelSpec::rbf(0.3));
        let out = train_binary_smo(&xs, &ys, &params, seed, (Positive, Negative)).unwrap();
        let k = gram(&xs, &params.kernel);
        let (_, obj) = qp_oracle(&k, &ys, params.c);
        prop_assert!((out.report.dual_objective - obj).abs() < 1e-3);
        prop_assert!(kkt_violation(&k, &ys, &out.report.alphas, out.report.bias, params.c) <= 1e-3);
    }
}
