use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tweetsent_core::svm::{KernelSpec, SvmHyperParams};
use tweetsent_core::tune::{
    best_trial, cross_val_f1, random_search, smbo_search, svm_default_space, CvData, ParamValue, Params, Scale,
    SearchSpace, TuneError,
};
use tweetsent_core::SentimentLabel;

fn gamma_objective(p: &Params) -> Result<f64, String> {
    let g = p["gamma"].as_f64().ok_or("gamma missing")?;
    Ok(-(g.log10() + 1.0).powi(2))
}

#[test]
fn random_search_finds_gamma_decade() {
    let space = svm_default_space();
    let hits = (0..10)
        .filter(|&seed| {
            let trials = random_search(&space, &gamma_objective, 50, seed).unwrap();
            assert!(trials.iter().all(|t| space.contains(&t.params)));
            let g = best_trial(&trials).unwrap().params["gamma"].as_f64().unwrap();
            (0.01..=1.0).contains(&g)
        })
        .count();
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn smbo_beats_random_on_unimodal() {
    let space = SearchSpace::new().continuous("gamma", 1e-4, 1.0, Scale::Log10).unwrap();
    let (mut smbo, mut random) = (0.0, 0.0);
    for seed in 0..20 {
        let s = smbo_search(&space, &gamma_objective, 40, seed, 8).unwrap();
        let r = random_search(&space, &gamma_objective, 40, seed).unwrap();
        assert!(s.iter().chain(&r).all(|t| space.contains(&t.params)));
        smbo += best_trial(&s).unwrap().score;
        random += best_trial(&r).unwrap().score;
    }
    assert!(smbo / 20.0 >= random / 20.0, "smbo {smbo} random {random}");
}

#[test]
fn smbo_prefers_winning_category() {
    let space = SearchSpace::new().categorical("choice", &["a", "b"]).unwrap();
    let objective = |p: &Params| -> Result<f64, String> { Ok(f64::from(p["choice"] == ParamValue::Cat("a".into()))) };
    let (mut a, mut total) = (0, 0);
    for seed in 0..10 {
        let trials = smbo_search(&space, &objective, 30, seed, 6).unwrap();
        for t in &trials[6..] {
            total += 1;
            a += usize::from(t.params["choice"] == ParamValue::Cat("a".into()));
        }
    }
    assert!(a * 100 >= 80 * total, "{a}/{total}");
}

fn labels(n: usize) -> Vec<SentimentLabel> {
    (0..n).map(|i| SentimentLabel::ALL[i % 3]).collect()
}

#[test]
fn cross_val_separable_is_perfect() {
    let y = labels(45);
    let cue = ["awful", "meh", "great"];
    let docs: Vec<Vec<String>> = y
        .iter()
        .enumerate()
        .map(|(i, l)| vec![cue[l.code()].to_string(), format!("filler{}", i % 4)])
        .collect();
    let data = CvData {
        docs: &docs,
        labels: &y,
        max_features: 100,
        l2_normalize: true,
    };
    for hp in [SvmHyperParams::default(), SvmHyperParams::new(1.0, KernelSpec::Linear)] {
        assert_eq!(cross_val_f1(&data, &hp, 5, 0).unwrap(), 1.0);
    }
}

#[test]
fn cross_val_permutation_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut y = labels(300);
    let docs: Vec<Vec<String>> = (0..300)
        .map(|_| (0..6).map(|_| format!("w{}", rng.gen_range(0..40))).collect())
        .collect();
    y.shuffle(&mut rng);
    let data = CvData {
        docs: &docs,
        labels: &y,
        max_features: 5000,
        l2_normalize: true,
    };
    let f1 = cross_val_f1(&data, &SvmHyperParams::default(), 5, 1).unwrap();
    assert!((f1 - 1.0 / 3.0).abs() <= 0.1, "{f1}");
}

#[test]
fn cross_val_rejects_tiny_class() {
    let y = labels(9);
    let docs = vec![vec!["x".to_string()]; 9];
    let data = CvData {
        docs: &docs,
        labels: &y,
        max_features: 10,
        l2_normalize: true,
    };
    assert!(matches!(
        cross_val_f1(&data, &SvmHyperParams::default(), 4, 0),
        Err(TuneError::ClassTooSmall { .. })
    ));
}
