use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use tweetsent_bench::{corpus, tokens_and_labels};
use tweetsent_core::normalize::{bundled_lexicon, normalize};
use tweetsent_core::svm::train_multiclass;
use tweetsent_core::topics::{build_dictionary, lda_gibbs, prepare_for_lda, LdaParams, LdaPreprocessor};
use tweetsent_core::vectorize::{build_vocabulary, tfidf_fit};
use tweetsent_core::{NormalizationMode, SvmHyperParams};

fn bench_normalize(c: &mut Criterion) {
    let d = corpus(300);
    let lex = bundled_lexicon();
    let mut g = c.benchmark_group("normalize");
    for mode in [NormalizationMode::Lexical, NormalizationMode::Semantic] {
        g.bench_function(mode.to_string(), |b| {
            b.iter(|| {
                for r in &d.records {
                    black_box(normalize(&r.tweet.text, mode, lex));
                }
            })
        });
    }
    g.finish();
}

fn bench_tfidf(c: &mut Criterion) {
    let (docs, _) = tokens_and_labels(&corpus(1000));
    c.bench_function("tfidf_fit_transform_1000", |b| {
        b.iter(|| {
            let vocab = build_vocabulary(&docs, 5000).unwrap();
            let m = tfidf_fit(&docs, vocab, true);
            black_box(m.transform_all(&docs))
        })
    });
}

fn bench_svm(c: &mut Criterion) {
    let mut g = c.benchmark_group("svm_train");
    g.sample_size(10);
    for n in [150, 300, 600] {
        let (docs, labels) = tokens_and_labels(&corpus(n));
        let vocab = build_vocabulary(&docs, 5000).unwrap();
        let xs = tfidf_fit(&docs, vocab, true).transform_all(&docs);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(train_multiclass(&xs, &labels, &SvmHyperParams::default(), 7).unwrap()))
        });
    }
    g.finish();
}

fn bench_lda(c: &mut Criterion) {
    let d = corpus(300);
    let docs = prepare_for_lda(&d.texts(), &LdaPreprocessor::bundled());
    let dict = build_dictionary(&docs).unwrap();
    let bows = dict.to_bows(&docs);
    let mut g = c.benchmark_group("lda");
    g.sample_size(10);
    for k in [2, 5] {
        let p = LdaParams {
            k,
            ..LdaParams::default()
        };
        g.bench_with_input(BenchmarkId::new("gibbs_200", k), &k, |b, _| {
            b.iter(|| black_box(lda_gibbs(&bows, dict.len(), &p).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_normalize, bench_tfidf, bench_svm, bench_lda);
criterion_main!(benches);
